"""Command-line front end: ``cbsest <command> --hamiltonian H.json [options]``.

Every command writes one JSON document or one CSV table (``--format``) to ``--out`` or
stdout. Errors print a single ``error: <Type>: <message>`` line to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .cbs import (
    cbs_expectation,
    interference_set,
    renormalized,
    symmetry_filter,
    truncate,
    truncated_state,
    truncation_bound,
)
from .errors import CBSError
from .grouping import RELATIONS, sorted_insertion
from .pauli import load_observable, operator_inf_norm
from .sampling import (
    ExperimentConfig,
    records_to_csv,
    result_summary,
    run_procedure_2,
    run_procedure_3,
    summary_to_json,
)
from .state import StateVector, basis_probabilities, expectation, ground_state
from .variance import cbs_variance, conventional_variance, shots_to_target

DEFAULT_EPSILON = 1e-4
DEFAULT_TARGET_SD = 1e-3
DEFAULT_W = 0.75


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _state(args, h):
    if getattr(args, "state", None):
        psi = StateVector.load(args.state)
        return psi, expectation(h, psi)
    gs = ground_state(h)
    return gs.state, gs.energy


def _probs(args, psi):
    probs = basis_probabilities(psi)
    if args.particle_number is not None:
        probs, _ = symmetry_filter(probs, args.particle_number, psi.n_qubits)
    return probs


def cmd_ground_state(args) -> str:
    h = load_observable(args.hamiltonian)
    gs = ground_state(h, tol=args.tol)
    row = {
        "n_qubits": h.n_qubits,
        "n_terms": len(h),
        "energy": gs.energy,
        "residual": gs.residual,
        "degenerate": gs.degenerate,
        "gap": gs.gap,
    }
    if args.format == "csv":
        return _csv(list(row), [list(row.values())])
    return json.dumps(row)


def cmd_truncate(args) -> str:
    h = load_observable(args.hamiltonian)
    psi, e_exact = _state(args, h)
    trunc = truncate(_probs(args, psi), args.epsilon)
    e_r = cbs_expectation(h, trunc, interference_set(psi, trunc), normalize=True)
    bound = truncation_bound(h, trunc.infidelity, inf_norm=operator_inf_norm(h))
    row = {
        "R": trunc.R,
        "labels": list(trunc.labels),
        "weights": [float(x) for x in trunc.weights],
        "infidelity": trunc.infidelity,
        "energy_exact": e_exact,
        "energy_truncated": e_r,
        "delta_energy": e_r - e_exact,
        "relative_error": (e_r - e_exact) / abs(e_exact) if e_exact else float("nan"),
        "bound": bound,
    }
    if args.format == "csv":
        header = ["R", "infidelity", "energy_exact", "energy_truncated", "delta_energy", "relative_error", "bound"]
        return _csv(header, [[row[k] for k in header]])
    return json.dumps(row)


def cmd_estimate(args) -> str:
    h = load_observable(args.hamiltonian)
    psi, e_exact = _state(args, h)
    trunc = truncate(_probs(args, psi), args.epsilon)
    e_cbs = cbs_expectation(h, trunc, interference_set(psi, trunc), normalize=args.normalize == "on")
    row = {"R": trunc.R, "estimate": e_cbs, "exact": e_exact, "difference": e_cbs - e_exact}
    if args.format == "csv":
        return _csv(list(row), [list(row.values())])
    return json.dumps(row)


def _cbs_report(h, psi, args, mode):
    trunc, intf = renormalized(psi, truncate(_probs(args, psi), args.epsilon))
    return cbs_variance(h, trunc, intf, mode=mode, w=args.w, total_l=args.total_shots)


def cmd_variance(args) -> str:
    h = load_observable(args.hamiltonian)
    psi, _ = _state(args, h)
    if args.method == "cbs":
        mode = "heuristic" if args.mode == "haar" else args.mode
        report = _cbs_report(h, psi, args, mode)
    else:
        mode = "haar" if args.mode == "heuristic" else args.mode
        report = conventional_variance(h, sorted_insertion(h, args.relation), psi, mode, args.total_shots)
    return report.to_csv() if args.format == "csv" else report.to_json()


def cmd_shots(args) -> str:
    h = load_observable(args.hamiltonian)
    psi, _ = _state(args, h)
    rows = []
    for mode in ("exact", "heuristic"):
        report = _cbs_report(h, psi, args, mode)
        label = "cbs" if mode == "exact" else f"cbs-heuristic(w={args.w:g})"
        rows.append((label, mode, len(report.names), report.c_v, shots_to_target(report.c_v, args.target_sd)))
    for relation in RELATIONS:
        grouping = sorted_insertion(h, relation)
        for mode in ("exact", "haar"):
            report = conventional_variance(h, grouping, psi, mode, args.total_shots)
            rows.append((relation, mode, len(grouping), report.c_v, shots_to_target(report.c_v, args.target_sd)))
    header = ["method", "allocation", "streams", "c_v", "shots"]
    if args.format == "csv":
        return _csv(header, rows)
    return json.dumps({"target_sd": args.target_sd, "rows": [dict(zip(header, r)) for r in rows]})


def cmd_simulate(args) -> str:
    h = load_observable(args.hamiltonian)
    psi, e_exact = _state(args, h)
    cfg = ExperimentConfig(
        l_f=args.l_f,
        epsilon_freq=args.epsilon,
        replicas_m=args.replicas,
        outer_m_prime=args.outer,
        base_seed=args.seed,
        allocation_mode="heuristic" if args.mode == "heuristic" else "exact",
        w=args.w,
        particle_filter=args.particle_number,
        normalize=args.normalize == "on",
    )
    if cfg.outer_m_prime > 1:
        summary = run_procedure_3(h, psi, cfg)
        if args.format == "csv":
            rows = [(k, r.mean, r.sd, r.mean_shots, r.sigma_one, r.failures) for k, r in enumerate(summary.results)]
            return _csv(["outer", "mean", "sd", "mean_shots", "sigma_one", "failures"], rows)
        doc = json.loads(summary_to_json(summary, cfg))
        doc["energy_exact"] = e_exact
        return json.dumps(doc)
    result = run_procedure_2(h, psi, cfg)
    if args.format == "csv":
        return records_to_csv(result.records)
    doc = result_summary(result)
    doc["energy_exact"] = e_exact
    return json.dumps(doc)


def cmd_group(args) -> str:
    h = load_observable(args.hamiltonian)
    result = sorted_insertion(h, args.relation)
    if args.format == "csv":
        rows = [
            (k, i, str(h.terms[i].string), h.terms[i].coeff) for k, group in enumerate(result.groups) for i in group
        ]
        return _csv(["group", "term", "pauli", "coeff"], rows)
    return result.to_json()


COMMANDS = {
    "ground-state": cmd_ground_state,
    "truncate": cmd_truncate,
    "estimate": cmd_estimate,
    "variance": cmd_variance,
    "shots": cmd_shots,
    "simulate": cmd_simulate,
    "group": cmd_group,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hamiltonian", required=True, metavar="PATH")
    common.add_argument("--state", metavar="PATH", help="binary statevector; default is the ground state")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    common.add_argument("--w", type=float, default=DEFAULT_W)
    common.add_argument("--target-sd", type=float, default=DEFAULT_TARGET_SD)
    common.add_argument("--relation", choices=RELATIONS, default="qwc")
    common.add_argument("--mode", choices=("exact", "heuristic", "haar"), default="exact")
    common.add_argument("--normalize", choices=("on", "off"), default="on")
    common.add_argument("--particle-number", type=int)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--total-shots", type=int, default=10**6)

    parser = argparse.ArgumentParser(prog="cbsest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "variance":
            p.add_argument("--method", choices=("cbs", "grouped"), default="cbs")
        if name == "simulate":
            p.add_argument("--l-f", type=int, default=10**4)
            p.add_argument("--replicas", type=int, default=100)
            p.add_argument("--outer", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = COMMANDS[args.command](args)
    except (CBSError, OSError, ValueError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
