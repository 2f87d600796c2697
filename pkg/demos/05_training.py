"""Local SGD for the two reference trainers."""

# # Softmax regression and a small MLP
#
# Parameters live in one flat vector; `ModelSpec` knows how to slice it.

from __future__ import annotations

import numpy as np

from mobidfl import ModelSpec, OptimizerState, evaluate, init_model, local_update, synth_blobs

rng = np.random.default_rng(0)
train = synth_blobs(num_classes=4, per_class=150, dim=6, spread=1.5, rng=rng)
test = synth_blobs(num_classes=4, per_class=50, dim=6, spread=1.5, rng=np.random.default_rng(1))

for spec in (ModelSpec("logistic", 6, 4), ModelSpec("mlp", 6, 4, hidden=16)):
    theta = init_model(spec, rng)
    opt = OptimizerState(lr=0.2, momentum=0.9, weight_decay=5e-4)
    mask = spec.weight_mask()
    for step in range(60):
        batch = rng.choice(len(train.labels), size=32, replace=False)
        theta, opt, loss = local_update(spec, theta, opt, train.features[batch], train.labels[batch], decay_mask=mask)
    print(f"{spec.kind}: {spec.size} params, last loss {loss:.3f}, test acc {evaluate(spec, theta, test.features, test.labels):.3f}")
