import pytest

from mobidfl.config import DatasetConfig, SimulationConfig, TrainerConfig


@pytest.fixture
def small_config():
    """A few-second configuration on a 10x10 grid."""
    return SimulationConfig(
        grid_size=10,
        num_clients=8,
        num_mobile=2,
        comm_radius=3,
        move_radius=3,
        pattern="dam",
        alpha=0.1,
        rounds=20,
        eval_every=5,
        master_seed=11,
        trainer=TrainerConfig(kind="logistic", lr=0.1, momentum=0.9, weight_decay=5e-4),
        dataset=DatasetConfig(num_classes=4, per_class=30, test_per_class=20, dim=5),
    )


_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for an acceptance criterion.

    Usage: ``with criterion("1", "mixing matrix") as note: ...; note("detail")``.
    """
    import contextlib
    import time

    @contextlib.contextmanager
    def run(key, title):
        details = []
        start = time.perf_counter()
        try:
            yield details.append
        except BaseException:
            _ACCEPTANCE[key] = (False, f"{title}: " + "; ".join(details + [f"{time.perf_counter() - start:.1f}s"]))
            raise
        _ACCEPTANCE[key] = (True, f"{title}: " + "; ".join(details + [f"{time.perf_counter() - start:.1f}s"]))

    return run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=int):
        ok, line = _ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {line}")
