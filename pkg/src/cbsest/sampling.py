"""Finite-shot emulation of the full CBS measurement pipeline.

One replica (``run_procedure_1``) samples the state in the computational basis, keeps the
most frequent labels, allocates shots to the anchor interference circuits from the true
stream variances, samples those circuits and assembles the normalized estimate.
``run_procedure_2`` repeats it to get the single-shot standard deviation
``sigma_1 = sd(E) * sqrt(mean L)``; ``run_procedure_3`` repeats that.

Every replica draws from its own Philox stream keyed by ``(base_seed, outer, replica)``,
so any replica can be replayed from the seed recorded in its row.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cbs import (
    TruncationResult,
    cbs_expectation,
    interference_from_estimates,
    interference_set,
)
from .errors import CBSError, DomainError, EmptySupportError
from .pauli import Observable
from .state import StateVector
from .variance import cbs_stream_variances, heuristic_variances


@dataclass(frozen=True)
class ExperimentConfig:
    l_f: int = 10**4
    epsilon_freq: float = 1e-4
    replicas_m: int = 100
    outer_m_prime: int = 1
    base_seed: int = 0
    allocation_mode: str = "exact"
    w: float = 0.75
    particle_filter: int | None = None
    normalize: bool = True
    # None: skip B circuits iff the state's amplitudes are real
    skip_b: bool | None = None

    def __post_init__(self):
        if min(self.l_f, self.replicas_m, self.outer_m_prime) < 1:
            raise DomainError("shot and repetition counts must be at least 1")
        if not 0 < self.epsilon_freq < 1:
            raise DomainError("epsilon_freq must lie in (0, 1)")
        if self.allocation_mode not in ("exact", "heuristic", "uniform"):
            raise DomainError(f"unknown allocation mode {self.allocation_mode!r}")


@dataclass(frozen=True)
class ReplicaRecord:
    seed: int
    r_tilde: int
    energy: float
    total_shots: int
    failed: bool = False


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple[ReplicaRecord, ...]
    mean: float
    sd: float
    mean_shots: float
    sigma_one: float
    failures: int

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records if not r.failed])

    @property
    def totals(self) -> np.ndarray:
        return np.array([r.total_shots for r in self.records if not r.failed])


@dataclass(frozen=True)
class OuterSummary:
    results: tuple[ExperimentResult, ...]
    mean_mu: float
    sd_mu: float
    mean_sigma_one: float
    sd_sigma_one: float
    mus: tuple[float, ...] = field(default=())
    sigma_ones: tuple[float, ...] = field(default=())


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def replica_seed(base_seed: int, outer: int, replica: int) -> int:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(outer, replica))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_basis(psi: StateVector, l_f: int, seed) -> dict[int, int]:
    """Outcome counts of ``l_f`` computational-basis measurements."""
    if l_f < 1:
        raise DomainError("l_f must be at least 1")
    probs = psi.probabilities()
    counts = make_rng(seed).multinomial(l_f, probs / probs.sum())
    return {int(z): int(counts[z]) for z in np.flatnonzero(counts)}


def sample_bernoulli(p: float, shots: int, seed) -> int:
    """Number of outcome-0 events in ``shots`` trials with probability ``p``."""
    if not 0 <= p <= 1:
        raise DomainError(f"probability {p} outside [0, 1]")
    return int(make_rng(seed).binomial(shots, p))


def _select(counts: dict[int, int], epsilon: float) -> tuple[list[int], np.ndarray]:
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = sum(c for _, c in ranked)
    labels, tallies = [], []
    running = 0
    for z, c in ranked:
        labels.append(z)
        tallies.append(c)
        running += c
        if running / kept > 1 - epsilon:
            break
    return labels, np.array(tallies, dtype=float) / kept


def _circuit_shots(v: np.ndarray, l_f: int, R: int, skip_b: bool) -> np.ndarray:
    """Shots for the A/B circuits scaled to the fixed ``l_f``: ``L_l = L_f sqrt(v_l / v_f)``."""
    v_f, v_ab = v[0], v[1:]
    if v_f > 0:
        shots = np.rint(l_f * np.sqrt(v_ab / v_f)).astype(np.int64)
    else:
        shots = np.where(v_ab > 0, l_f, 0).astype(np.int64)
    # every A/B value that enters the estimate needs at least one shot
    shots = np.maximum(shots, 1)
    if skip_b:
        shots[R - 1 :] = 0
    return shots


def run_procedure_1(o: Observable, psi: StateVector, cfg: ExperimentConfig, seed) -> ReplicaRecord:
    """One replica: returns the energy estimate and the total shot count."""
    rng = make_rng(seed)
    record_seed = seed if isinstance(seed, (int, np.integer)) else -1
    counts = sample_basis(psi, cfg.l_f, rng)
    if cfg.particle_filter is not None:
        counts = {z: c for z, c in counts.items() if z.bit_count() == cfg.particle_filter}
        if not counts:
            raise EmptySupportError(f"every outcome violated particle number {cfg.particle_filter}")
    labels, f = _select(counts, cfg.epsilon_freq)
    R = len(labels)
    skip_b = psi.is_real if cfg.skip_b is None else cfg.skip_b

    # allocation from the true state at the sampled labels
    true_probs = psi.probabilities()
    true_trunc = TruncationResult.from_weights(labels, true_probs[labels])
    true_intf = interference_set(psi, true_trunc)
    if R > 1 and cfg.allocation_mode == "heuristic":
        v = heuristic_variances(o, labels, cfg.w)
    elif cfg.allocation_mode == "uniform":
        v = np.ones(2 * R - 1)
    else:
        _, v = cbs_stream_variances(o, labels, true_intf)
    shots = _circuit_shots(v, cfg.l_f, R, skip_b)
    l_a, l_b = shots[: R - 1], shots[R - 1 :]

    a_hat = np.array([rng.binomial(n, p) / n for n, p in zip(l_a, true_intf.a)])
    if skip_b:
        # real amplitudes: B sits where the interference factor has no imaginary part
        b_hat = 0.5 * (f[0] + f[1:])
    else:
        b_hat = np.array([rng.binomial(n, p) / n for n, p in zip(l_b, true_intf.b)])
    total = cfg.l_f + int(shots.sum())
    try:
        intf = interference_from_estimates(f, a_hat, b_hat)
        trunc = TruncationResult.from_weights(labels, f)
        energy = cbs_expectation(o, trunc, intf, normalize=cfg.normalize)
    except CBSError:
        return ReplicaRecord(int(record_seed), R, float("nan"), total, failed=True)
    return ReplicaRecord(int(record_seed), R, energy, total)


def run_procedure_2(o: Observable, psi: StateVector, cfg: ExperimentConfig, outer: int = 0) -> ExperimentResult:
    if cfg.replicas_m < 2:
        raise DomainError("need at least two replicas for a sample standard deviation")
    records = tuple(
        run_procedure_1(o, psi, cfg, replica_seed(cfg.base_seed, outer, i)) for i in range(cfg.replicas_m)
    )
    good = [r for r in records if not r.failed]
    if len(good) < 2:
        raise DomainError("fewer than two replicas succeeded")
    energies = np.array([r.energy for r in good])
    totals = np.array([r.total_shots for r in good], dtype=float)
    sd = float(np.std(energies, ddof=1))
    mean_shots = float(totals.mean())
    return ExperimentResult(
        records, float(energies.mean()), sd, mean_shots, sd * math.sqrt(mean_shots), len(records) - len(good)
    )


def run_procedure_3(o: Observable, psi: StateVector, cfg: ExperimentConfig) -> OuterSummary:
    if cfg.outer_m_prime < 2:
        raise DomainError("need at least two outer repetitions for a sample standard deviation")
    results = tuple(run_procedure_2(o, psi, cfg, outer=k) for k in range(cfg.outer_m_prime))
    mus = np.array([r.mean for r in results])
    sig = np.array([r.sigma_one for r in results])
    return OuterSummary(
        results,
        float(mus.mean()),
        float(np.std(mus, ddof=1)),
        float(sig.mean()),
        float(np.std(sig, ddof=1)),
        tuple(float(m) for m in mus),
        tuple(float(s) for s in sig),
    )


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "r_tilde", "energy", "total_shots", "failed"])
    for r in records:
        writer.writerow([r.seed, r.r_tilde, repr(r.energy), r.total_shots, int(r.failed)])
    return buf.getvalue()


def result_summary(result: ExperimentResult) -> dict:
    return {
        "mean": result.mean,
        "sd": result.sd,
        "mean_shots": result.mean_shots,
        "sigma_one": result.sigma_one,
        "replicas": len(result.records),
        "failures": result.failures,
    }


def summary_to_json(summary: OuterSummary, cfg: ExperimentConfig) -> str:
    return json.dumps(
        {
            "config": asdict(cfg),
            "mean_mu": summary.mean_mu,
            "sd_mu": summary.sd_mu,
            "mean_sigma_one": summary.mean_sigma_one,
            "sd_sigma_one": summary.sd_sigma_one,
            "outer": [result_summary(r) for r in summary.results],
        }
    )
