"""The round loop: local step, movement, topology rebuild, consensus.

Within a round the order is fixed: every client takes its local gradient step,
then mobile clients move, then the communication graph is rebuilt on the new
positions and models are mixed over it. Round 0 is evaluated before any update.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .config import SimulationConfig
from .consensus import consensus_contraction_metric, consensus_update, mixing_matrix
from .data import load_idx, synth_blobs
from .errors import ConfigError, NumericalError
from .learning import ModelSpec, OptimizerState, evaluate, init_model, local_update
from .mobility import MobilityPlanner, MobilityState, Pattern, StaticInfo, advance_round
from .partition import ClientPartition, LabeledDataset, dirichlet_partition, label_histogram
from .seeds import RunSeed
from .topology import GridLocation, build_comm_graph, count_components, random_locations

log = logging.getLogger(__name__)

SWEEP_AXES = ("num_mobile", "comm_radius", "move_radius", "alpha", "pattern")


@dataclass(frozen=True)
class MetricsRecord:
    run: int
    round: int
    mean_accuracy: float
    accuracies: tuple[float, ...]
    contraction: float
    components: int
    locations: dict[int, GridLocation] = field(default_factory=dict)


@dataclass
class World:
    """Everything fixed for one Monte Carlo run."""

    config: SimulationConfig
    run: int
    seed: RunSeed
    train: LabeledDataset
    test: LabeledDataset
    spec: ModelSpec
    initial_locations: list[GridLocation]
    partition: ClientPartition
    sizes: np.ndarray
    histograms: np.ndarray
    mobile: tuple[int, ...]
    planner: MobilityPlanner
    client_data: list[LabeledDataset]
    weight_mask: np.ndarray


@dataclass
class SimState:
    world: World
    round: int
    models: np.ndarray
    optimizers: list[OptimizerState]
    locations: list[GridLocation]
    mobility: dict[int, MobilityState]


def load_datasets(config: SimulationConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """Train and test sets; synthetic data comes from a run-independent stream."""
    d = config.dataset
    if d.kind == "synthetic-blobs":
        seed = RunSeed(config.master_seed, 0)
        train = synth_blobs(d.num_classes, d.per_class, d.dim, d.spread, seed.rng("dataset-train"), d.separation)
        test = synth_blobs(d.num_classes, d.test_per_class, d.dim, d.spread, seed.rng("dataset-test"), d.separation)
        return train, test
    train = load_idx(d.train_images, d.train_labels)
    test = load_idx(d.test_images, d.test_labels)
    if d.max_train is not None:
        train = train.subset(np.arange(min(d.max_train, len(train))))
    if d.max_test is not None:
        test = test.subset(np.arange(min(d.max_test, len(test))))
    return train, test


def model_spec(config: SimulationConfig, train: LabeledDataset) -> ModelSpec:
    t = config.trainer
    return ModelSpec(t.kind, train.dim, train.num_labels, t.hidden if t.kind == "mlp" else 0)


def mobile_clients(config: SimulationConfig, seed: RunSeed) -> tuple[int, ...]:
    # prefixes of one permutation, so mobile sets are nested across num_mobile
    order = seed.rng("roles").permutation(config.num_clients)
    return tuple(sorted(int(i) for i in order[: config.num_mobile]))


def build_world(
    config: SimulationConfig,
    run: int = 0,
    datasets: tuple[LabeledDataset, LabeledDataset] | None = None,
) -> World:
    config.validate()
    seed = RunSeed(config.master_seed, run)
    train, test = datasets if datasets is not None else load_datasets(config)
    spec = model_spec(config, train)
    C = config.num_clients

    locations = random_locations(C, config.grid_size, seed.rng("locations"))
    partition = dirichlet_partition(
        train.labels, C, config.alpha, seed.rng("partition"), num_labels=train.num_labels
    )
    histograms = np.array([label_histogram(partition, train, i) for i in range(C)])
    sizes = histograms.sum(axis=1)
    mobile = mobile_clients(config, seed)
    static_ids = [i for i in range(C) if i not in mobile]
    static_info = StaticInfo(
        ids=tuple(static_ids),
        locations=np.array([locations[i] for i in static_ids], dtype=np.int64).reshape(-1, 2),
        histograms=histograms[static_ids].reshape(len(static_ids), train.num_labels),
    )
    planner = MobilityPlanner.build(
        config.mobility,
        config.grid_size,
        config.comm_radius,
        static_info,
        {i: histograms[i] for i in mobile},
        seed.rng("clusters"),
    )
    return World(
        config=config,
        run=run,
        seed=seed,
        train=train,
        test=test,
        spec=spec,
        initial_locations=locations,
        partition=partition,
        sizes=sizes,
        histograms=histograms,
        mobile=mobile,
        planner=planner,
        client_data=[train.subset(partition.assignment[i]) for i in range(C)],
        weight_mask=spec.weight_mask(),
    )


def initial_state(world: World) -> SimState:
    cfg, C = world.config, world.config.num_clients
    if cfg.trainer.shared_init:
        theta = init_model(world.spec, world.seed.rng("init"))
        models = np.tile(theta, (C, 1))
    else:
        models = np.stack([init_model(world.spec, world.seed.rng("init", i)) for i in range(C)])
    t = cfg.trainer
    opts = [OptimizerState(t.lr, t.momentum, t.weight_decay) for _ in range(C)]
    mobility = {
        i: MobilityState(i, world.initial_locations[i], cfg.mobility, cfg.move_radius)
        for i in world.mobile
    }
    return SimState(world, 0, models, opts, list(world.initial_locations), mobility)


def _client_step(state: SimState, i: int, t: int) -> tuple[np.ndarray, OptimizerState]:
    world = state.world
    data = world.client_data[i]
    theta, opt = state.models[i], state.optimizers[i]
    if len(data) == 0:
        return theta, opt
    X, y = data.features, data.labels
    bs = world.config.trainer.batch_size
    if bs is not None and bs < len(data):
        pick = world.seed.rng("batch", i, t).choice(len(data), size=bs, replace=False)
        X, y = X[pick], y[pick]
    try:
        theta, opt, _ = local_update(world.spec, theta, opt, X, y, world.weight_mask)
    except NumericalError as exc:
        raise NumericalError("non-finite loss or gradient", round=t, client=i) from exc
    return theta, opt


def run_round(state: SimState, t: int, pool: ThreadPoolExecutor | None = None) -> SimState:
    """Advance ``state`` through round ``t`` (in place) and return it."""
    world, cfg = state.world, state.world.config
    C = cfg.num_clients

    if pool is None:
        results = [_client_step(state, i, t) for i in range(C)]
    else:
        results = list(pool.map(lambda i: _client_step(state, i, t), range(C)))
    half = np.stack([r[0] for r in results])
    state.optimizers = [r[1] for r in results]

    if state.mobility and cfg.mobility is not Pattern.STATIC:
        state.mobility = advance_round(
            state.mobility, world.planner, lambda i: world.seed.rng("mobility", i, t)
        )
        for i, ms in state.mobility.items():
            state.locations[i] = ms.current

    graph = build_comm_graph(dict(enumerate(state.locations)), cfg.comm_radius, round=t)
    W = mixing_matrix(graph, world.sizes)
    state.models = consensus_update(half, W)
    state.round = t
    return state


def record(state: SimState) -> MetricsRecord:
    world = state.world
    accs = tuple(
        evaluate(world.spec, state.models[i], world.test.features, world.test.labels)
        for i in range(world.config.num_clients)
    )
    graph = build_comm_graph(dict(enumerate(state.locations)), world.config.comm_radius)
    return MetricsRecord(
        run=world.run,
        round=state.round,
        mean_accuracy=float(np.mean(accs)),
        accuracies=accs,
        contraction=consensus_contraction_metric(state.models),
        components=count_components(graph),
        locations={i: GridLocation(*state.locations[i]) for i in world.mobile},
    )


def run_single(
    config: SimulationConfig,
    run: int = 0,
    datasets: tuple[LabeledDataset, LabeledDataset] | None = None,
) -> list[MetricsRecord]:
    world = build_world(config, run, datasets)
    state = initial_state(world)
    records = [record(state)]
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for t in range(1, config.rounds + 1):
            run_round(state, t, pool)
            if t % config.eval_every == 0:
                records.append(record(state))
    finally:
        if pool is not None:
            pool.shutdown()
    log.debug("run %d finished: final mean accuracy %.4f", run, records[-1].mean_accuracy)
    return records


def run_simulation(
    config: SimulationConfig,
    datasets: tuple[LabeledDataset, LabeledDataset] | None = None,
) -> list[MetricsRecord]:
    """All Monte Carlo runs of ``config``; records ordered by run, then round."""
    config.validate()
    if datasets is None:
        datasets = load_datasets(config)
    records: list[MetricsRecord] = []
    for run in range(config.monte_carlo_runs):
        records.extend(run_single(config, run, datasets))
    return records


@dataclass
class SweepResult:
    axis: str
    outputs: dict[Any, list[MetricsRecord]] = field(default_factory=dict)
    errors: dict[Any, Exception] = field(default_factory=dict)


def sweep_config(template: SimulationConfig, axis: str, value: Any) -> SimulationConfig:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"cannot sweep {axis!r}; choose one of {SWEEP_AXES}")
    if axis == "pattern":
        if Pattern.parse(value) is Pattern.STATIC:
            # nobody moves under the static baseline
            return template.replace(pattern="static", num_mobile=0)
        return template.replace(pattern=value)
    if axis == "move_radius":
        return template.replace(move_radius=value)
    try:
        number = int(value) if axis == "num_mobile" else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{axis} must be numeric, got {value!r}") from None
    if axis == "num_mobile" and number != value:
        raise ConfigError(f"num_mobile must be an integer, got {value!r}")
    return template.replace(**{axis: number})


def sweep(
    template: SimulationConfig,
    axis: str,
    values: Iterable[Any],
    datasets: tuple[LabeledDataset, LabeledDataset] | None = None,
) -> SweepResult:
    """One :func:`run_simulation` per value; invalid values are collected, not fatal."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"cannot sweep {axis!r}; choose one of {SWEEP_AXES}")
    result = SweepResult(axis)
    for value in values:
        try:
            cfg = sweep_config(template, axis, value).validate()
        except ConfigError as exc:
            log.warning("skipping %s=%r: %s", axis, value, exc)
            result.errors[value] = exc
            continue
        if datasets is None:
            datasets = load_datasets(cfg)
        result.outputs[value] = run_simulation(cfg, datasets)
    return result


def final_accuracies(records: Sequence[MetricsRecord]) -> dict[int, float]:
    """Mean accuracy at the last recorded round of each run."""
    last: dict[int, MetricsRecord] = {}
    for r in records:
        if r.run not in last or r.round > last[r.run].round:
            last[r.run] = r
    return {run: rec.mean_accuracy for run, rec in sorted(last.items())}
