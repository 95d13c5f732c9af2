"""Sample-size constants frozen from pilot runs, plus the acceptance experiment presets.

Each constant is twice the smallest value reaching 9/10 exact recoveries on a
10-seed pilot block (``calibrate_constant``). Pilot seeds never overlap the
acceptance seeds.
"""
from __future__ import annotations

from .harness import ExperimentSpec

# two objects per image: S = const * m * ln(ms)
PILOT_TWO = dict(m=4, s_min=20, s=30, c=16, w=4, d=100)
PILOT_TWO_SEED = 1001
PILOT_TWO_FOUND = 6.728
LEARN_TWO_CONST = 13.456

# k objects per image: S = const * 2^k * m * ln(ms)
PILOT_K = dict(k=3, m=4, s_min=72, s=80, c=32, w=3, d=1458, C=16)
PILOT_K_SEED = 1002
PILOT_K_FOUND = 1.958
LEARN_K_CONST = 3.916

ACCEPT_SEED = 20240611


def preset(name: str, trials: int | None = None, workers: int = 1) -> ExperimentSpec:
    """Experiment specs behind the acceptance criteria."""
    table = {
        "view": ("view-roundtrip", dict(c_max=5, d_max=20, s_max=8, m_max=5), 10_000, "view-fidelity@1"),
        "ws-random": ("ws-random", dict(m=5, s=20, c=2, w=24), 1000, "ws-holds@1"),
        "ws-random-long": ("ws-random", dict(m=5, s=40, c=2, w=24), 1000, "ws-holds@1"),
        "ws-semirandom": ("ws-semirandom", dict(m=3, s=64, c=2, w=51, p=0.5), 1000, "ws-holds@1"),
        "learn-markers": ("learn-markers", dict(m=5, s_min=10, s=10, c=4, w=4, d=100, k=2, L=8), 20,
                          "exact-recovery@1"),
        "learn-two": ("learn-two", dict(PILOT_TWO, const=LEARN_TWO_CONST), 20, "exact-recovery@1"),
        "learn-k": ("learn-k", dict(PILOT_K, const=LEARN_K_CONST), 20, "exact-recovery@1"),
        "dp-family": ("dp-family", dict(s_max=4, m_max=3, d_max=10, k_max=2, c=2, replay_fraction=0.1), 1,
                      "dp-equals-oracle@1"),
        "greedy": ("greedy", dict(m=5, s_min=30, s=60, c=4, w=6, d=200, k_max=3), 1000, "coverage-bound@1"),
        "greedy-noisy-uniform": ("greedy-noisy", dict(m=5, s_min=100, s=150, c=16, w=16, d=400, k_max=3,
                                                      epsilon=0.5, alpha=0.1, W=[16, 32],
                                                      strategy="uniform_random"), 500, "noisy-robust@1"),
        "greedy-noisy-cluster": ("greedy-noisy", dict(m=5, s_min=100, s=150, c=16, w=16, d=400, k_max=3,
                                                      epsilon=0.5, alpha=0.1, W=[16, 32],
                                                      strategy="worst_case_cluster"), 500, "noisy-robust@1"),
        "fixture-dp-noise": ("fixture", dict(kind="dp_noise", d=64), 1, "fixture-blowup@1"),
        "fixture-exact-family": ("fixture", dict(kind="exact_match_family", d=256, w=64), 1, "fixture-blowup@1"),
        "reduction-n3": ("reduction", dict(n=3), 16, "reduction-sound@1"),
    }
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(table)}")
    trial, params, n, pred = table[name]
    return ExperimentSpec(name, trial, params, trials if trials is not None else n, ACCEPT_SEED, pred, workers)


PRESETS = ("view", "ws-random", "ws-random-long", "ws-semirandom", "learn-markers", "learn-two", "learn-k",
           "dp-family", "greedy", "greedy-noisy-uniform", "greedy-noisy-cluster", "fixture-dp-noise",
           "fixture-exact-family", "reduction-n3")
