"""Shot allocation and closed-form single-shot variances.

Every estimator here has variance ``sum_l v_l / L_l`` over independent measurement
streams ``l``. Allocating ``L_l ∝ sqrt(v_l)`` gives ``(sum_l sqrt(v_l))^2 / L``; allocating
from reference variances gives ``(sum sqrt(v_ref)) (sum v / sqrt(v_ref)) / L``. The
L-independent numerator is reported as ``c_v``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .cbs import FACTOR_GUARD, InterferenceSet, TruncationResult, interference_from_estimates
from .errors import (
    ContractViolationError,
    DegenerateVarianceError,
    DimensionError,
    DomainError,
    IllConditionedFactorError,
    InfiniteVarianceError,
)
from .pauli import Observable, generally_commutes, qubit_wise_commutes, transition_matrix
from .state import StateVector, expectation

if TYPE_CHECKING:
    from .grouping import GroupingResult

ALLOCATION_MODES = ("exact", "heuristic", "haar", "uniform")
ROUNDOFF_FLOOR = 1e-24


@dataclass(frozen=True, eq=False)
class MeasurementPlan:
    """Integer shot counts per named stream (``f``, ``A1``.., ``B1``.. or ``g0``, ``g1``..)."""

    names: tuple[str, ...]
    shots: np.ndarray

    def __post_init__(self):
        shots = np.asarray(self.shots, dtype=np.int64)
        if shots.shape != (len(self.names),):
            raise DimensionError("one shot count per stream name is required")
        if (shots < 0).any():
            raise DomainError("shot counts must be non-negative")
        shots.flags.writeable = False
        object.__setattr__(self, "shots", shots)

    @property
    def total(self) -> int:
        return int(self.shots.sum())

    def _prefixed(self, prefix: str) -> np.ndarray:
        return np.array([s for n, s in zip(self.names, self.shots) if n.startswith(prefix)], dtype=np.int64)

    @property
    def l_f(self) -> int:
        return int(self._prefixed("f").sum())

    @property
    def l_a(self) -> np.ndarray:
        return self._prefixed("A")

    @property
    def l_b(self) -> np.ndarray:
        return self._prefixed("B")

    @property
    def l_g(self) -> np.ndarray:
        return self._prefixed("g")


@dataclass(frozen=True, eq=False)
class VarianceReport:
    mode: str
    names: tuple[str, ...]
    v: np.ndarray
    shots: np.ndarray
    total_variance: float
    c_v: float

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "c_v": float(self.c_v),
            "total_variance": float(self.total_variance),
            "streams": [
                {"name": n, "v": float(v), "shots": int(s)} for n, v, s in zip(self.names, self.v, self.shots)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "v", "shots"])
        for n, v, s in zip(self.names, self.v, self.shots):
            writer.writerow([n, repr(float(v)), int(s)])
        return buf.getvalue()


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    ideal = total * weights / weights.sum()
    shots = np.floor(ideal).astype(np.int64)
    short = total - int(shots.sum())
    # ties go to the lower index: stable sort on the negated remainder
    order = np.argsort(-(ideal - shots), kind="stable")
    shots[order[:short]] += 1
    return shots


def optimal_allocation(v: Sequence[float], total_l: int, names: Sequence[str] | None = None) -> MeasurementPlan:
    """Split ``total_l`` shots in proportion to ``sqrt(v)`` with largest-remainder rounding.

    Zero-variance streams get no shots; every other stream gets at least one.
    """
    v = np.asarray(v, dtype=float)
    names = tuple(names) if names is not None else tuple(f"s{i}" for i in range(len(v)))
    if (v < 0).any():
        raise DomainError("single-shot variances must be non-negative")
    active = v > 0
    if not active.any():
        raise DegenerateVarianceError("all stream variances are zero")
    if total_l < int(active.sum()):
        raise DomainError(f"budget {total_l} is smaller than the {int(active.sum())} active streams")
    shots = _largest_remainder(np.sqrt(v), int(total_l))
    for i in np.flatnonzero(active & (shots == 0)):
        donor = int(np.argmax(shots))
        shots[donor] -= 1
        shots[i] += 1
    return MeasurementPlan(names, shots)


def allocation_variance(v_true: Sequence[float], plan: MeasurementPlan) -> float:
    v = np.asarray(v_true, dtype=float)
    if v.shape != plan.shots.shape:
        raise DimensionError("variances and plan streams do not align")
    starved = (v > 0) & (plan.shots == 0)
    if starved.any():
        names = [plan.names[i] for i in np.flatnonzero(starved)]
        raise InfiniteVarianceError(f"streams {names} have positive variance but no shots")
    active = v > 0
    return float(np.sum(v[active] / plan.shots[active]))


def optimal_constant(v: Sequence[float]) -> float:
    """``(sum sqrt(v))^2``: variance times ``L`` under allocation tuned to ``v`` itself."""
    return float(np.sum(np.sqrt(np.asarray(v, dtype=float))) ** 2)


def reference_constant(v_true: Sequence[float], v_ref: Sequence[float]) -> float:
    """``(sum sqrt(v_ref)) (sum v / sqrt(v_ref))``: variance times ``L`` under allocation tuned to ``v_ref``."""
    v = np.asarray(v_true, dtype=float)
    ref = np.asarray(v_ref, dtype=float)
    if v.size == 1:
        return float(v[0])
    if ((v > 0) & (ref <= 0)).any():
        raise InfiniteVarianceError("reference allocation starves a stream with positive variance")
    active = v > 0
    return float(np.sum(np.sqrt(ref)) * np.sum(v[active] / np.sqrt(ref[active])))


def uniform_constant(v: Sequence[float]) -> float:
    v = np.asarray(v, dtype=float)
    return float(v.size * v.sum())


def shots_to_target(c_v: float, target_sd: float) -> int:
    """Total shots ``ceil(c_v / target_sd^2)`` for standard deviation ``target_sd``."""
    if c_v < 0 or target_sd <= 0:
        raise DomainError("need c_v >= 0 and target_sd > 0")
    # shave a few ulps so exact quotients are not pushed up by rounding noise
    return int(math.ceil(c_v / target_sd**2 * (1 - 1e-12)))


# --- CBS estimator --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CBSGradients:
    """Partials of the unnormalized estimator w.r.t. ``f_r`` (R), ``A_r`` and ``B_r`` (R-1)."""

    d_f: np.ndarray
    d_a: np.ndarray
    d_b: np.ndarray


def cbs_gradients(o: Observable, labels: Sequence[int], intf: InterferenceSet) -> CBSGradients:
    f = intf.weights
    R = intf.R
    if len(labels) != R:
        raise DimensionError("labels and interference set disagree on R")
    om = transition_matrix(o, labels)
    if R == 1:
        return CBSGradients(np.array([om[0, 0].real]), np.zeros(0), np.zeros(0))
    g = intf.g
    if (np.abs(g) < FACTOR_GUARD).any():
        r = int(np.argmin(np.abs(g))) + 1
        raise IllConditionedFactorError(f"interference factor g_{r} below {FACTOR_GUARD:g}", pair=(0, r))
    f1, fr = f[0], f[1:]
    o1r = om[0, 1:]
    orr = om[1:, 1:]
    half_p = (1 + 1j) / 2
    half_m = (1 - 1j) / 2
    gc = np.conj(g)
    off = ~np.eye(R - 1, dtype=bool)

    d_f = np.empty(R)
    # d/df_1
    pair = np.outer(fr, fr) / np.outer(gc, g)
    bracket = 1 + half_p * f1 / g[None, :] + half_m * f1 / gc[:, None]
    upper = np.triu(np.ones((R - 1, R - 1), dtype=bool), k=1)
    d_f[0] = (
        om[0, 0].real
        + 2 * np.real(np.sum(fr / g * (1 + half_p * f1 / g) * o1r))
        + 2 * np.real(np.sum((pair * bracket * orr)[upper]))
    )
    # d/df_r, r >= 2
    cross = f1 * fr[None, :] / np.outer(gc, g) * (1 + half_m * fr[:, None] / gc[:, None]) * orr
    d_f[1:] = (
        np.real(np.diag(orr))
        + 2 * np.real(f1 / g * (1 + half_p * fr / g) * o1r)
        + 2 * np.real(np.sum(np.where(off, cross, 0), axis=1))
    )
    # shared bracket of the A/B partials: O_1r + sum_{r' != r} f_r' / g_r'^* O_r'r
    inner = o1r + np.sum(np.where(off, (fr / gc)[:, None] * orr, 0), axis=0)
    lead = f1 * fr / g**2 * inner
    return CBSGradients(d_f, -2 * np.real(lead), 2 * np.imag(lead))


def cbs_stream_variances(o: Observable, labels: Sequence[int], intf: InterferenceSet) -> tuple[tuple[str, ...], np.ndarray]:
    """Single-shot variances ``v_f, v_A_r, v_B_r`` from multinomial/binomial error propagation."""
    grads = cbs_gradients(o, labels, intf)
    f = intf.weights
    df = grads.d_f
    cov = -np.outer(f, f)
    cov[np.diag_indices_from(cov)] = f * (1 - f)
    v_f = max(float(df @ cov @ df), 0.0)
    v_a = grads.d_a**2 * intf.a * (1 - intf.a)
    v_b = grads.d_b**2 * intf.b * (1 - intf.b)
    R = intf.R
    names = ("f",) + tuple(f"A{r}" for r in range(1, R)) + tuple(f"B{r}" for r in range(1, R))
    v = np.concatenate([[v_f], np.clip(v_a, 0, None), np.clip(v_b, 0, None)])
    # gradients that vanish analytically (B streams of real states) leave squared round-off
    v[v < ROUNDOFF_FLOOR * v.max()] = 0.0
    return names, v


def heuristic_interference(R: int, w: float) -> InterferenceSet:
    """Weights and anchor probabilities of ``sqrt(w)|z_1> + sum_r sqrt((1-w)/(R-1))|z_r>``."""
    if not 0 < w < 1:
        raise DomainError(f"w must lie in (0, 1), got {w}")
    if R < 2:
        raise DomainError("the heuristic reference state needs R >= 2")
    q = (1 - w) / (R - 1)
    weights = np.array([w] + [q] * (R - 1))
    a = np.full(R - 1, 0.5 * (math.sqrt(w) + math.sqrt(q)) ** 2)
    b = np.full(R - 1, 0.5 * abs(math.sqrt(w) + 1j * math.sqrt(q)) ** 2)
    return interference_from_estimates(weights, a, b)


def heuristic_variances(o: Observable, labels: Sequence[int], w: float = 0.75) -> np.ndarray:
    _, v = cbs_stream_variances(o, labels, heuristic_interference(len(labels), w))
    return v


def heuristic_plan(o: Observable, labels: Sequence[int], w: float, total_l: int) -> MeasurementPlan:
    names = ("f",) + tuple(f"A{r}" for r in range(1, len(labels))) + tuple(f"B{r}" for r in range(1, len(labels)))
    return optimal_allocation(heuristic_variances(o, labels, w), total_l, names)


def _report(mode, names, v, v_ref, total_l, plan=None) -> VarianceReport:
    if plan is None:
        if not (np.asarray(v_ref) > 0).any():
            shots = np.zeros(len(names), dtype=np.int64)
            shots[0] = total_l
            plan = MeasurementPlan(names, shots)
        else:
            plan = optimal_allocation(v_ref, total_l, names)
    if mode == "exact":
        c_v = optimal_constant(v)
    elif mode == "uniform":
        c_v = uniform_constant(v)
    else:
        c_v = reference_constant(v, v_ref)
    return VarianceReport(mode, tuple(names), np.asarray(v), plan.shots, allocation_variance(v, plan), c_v)


def cbs_variance(
    o: Observable,
    trunc: TruncationResult,
    intf: InterferenceSet,
    plan: MeasurementPlan | None = None,
    *,
    mode: str = "exact",
    w: float = 0.75,
    total_l: int = 10**6,
) -> VarianceReport:
    """Variance report for the CBS estimator with the normalization factor set to one.

    ``mode`` picks the allocation: ``exact`` (true stream variances), ``heuristic``
    (reference state ``psi_w``) or ``uniform``. A supplied ``plan`` overrides the
    allocation used for ``total_variance``; ``c_v`` stays the analytic constant of ``mode``.
    """
    names, v = cbs_stream_variances(o, trunc.labels, intf)
    if mode == "exact":
        v_ref = v
    elif mode == "heuristic":
        v_ref = heuristic_variances(o, trunc.labels, w) if trunc.R > 1 else v
    elif mode == "uniform":
        v_ref = np.ones_like(v)
    else:
        raise DomainError(f"unknown allocation mode {mode!r} for the CBS estimator")
    return _report(mode, names, v, v_ref, total_l, plan)


# --- conventional grouped estimators ------------------------------------------------


def group_variance(group: Observable, psi: StateVector, relation: str = "gc") -> float:
    """Single-shot ``Var[O_g] = <O_g^2> - <O_g>^2`` for a jointly measurable group."""
    check = qubit_wise_commutes if relation == "qwc" else generally_commutes
    strings = [t.string for t in group.terms]
    for i, p in enumerate(strings):
        for q in strings[i + 1 :]:
            if not check(p, q):
                raise ContractViolationError(f"{p} and {q} do not commute ({relation})")
    phi = group.apply(psi.amplitudes)
    second = float(np.vdot(phi, phi).real)
    first = expectation(group, psi)
    return max(second - first**2, 0.0)


def conventional_variance(
    o: Observable,
    grouping: GroupingResult,
    psi: StateVector,
    mode: str = "exact",
    total_l: int = 10**6,
) -> VarianceReport:
    if not grouping.groups:
        raise DomainError("grouping is empty")
    relation = "qwc" if grouping.relation == "qwc" else "gc"
    groups = [o.subset(g) for g in grouping.groups]
    v = np.array([group_variance(g, psi, relation) for g in groups])
    names = tuple(f"g{k}" for k in range(len(groups)))
    if mode == "exact":
        v_ref = v
    elif mode == "haar":
        v_ref = np.array([float(np.sum(g.coeffs**2)) for g in groups])
    elif mode == "uniform":
        v_ref = np.ones_like(v)
    else:
        raise DomainError(f"unknown allocation mode {mode!r} for grouped estimators")
    return _report(mode, names, v, v_ref, total_l)


def importance_sampling_variance(o: Observable, psi: StateVector) -> float:
    """Single-sample variance of drawing ``(m, n) ~ |psi_m|^2 |psi_n|^2`` and averaging
    ``<m|O|n> / (psi_m psi_n)``: the sum of ``|<m|O|n>|^2`` over the support minus ``<O>^2``.
    """
    if o.n_qubits != psi.n_qubits:
        raise DimensionError("observable and state sizes differ")
    if not psi.is_real:
        raise DomainError("importance-sampling variance needs real amplitudes")
    inside = np.abs(psi.amplitudes) > 0
    idx = np.arange(psi.dim, dtype=np.int64)
    total = 0.0
    for x, d in o.blocks:
        mask = inside & inside[idx ^ x]
        total += float(np.sum(np.abs(d[mask]) ** 2))
    return total - expectation(o, psi) ** 2
