"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 numeric or admissibility error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import scenarios as sc
from .hierarchy import IncompleteTableError, ZERO_TOLERANCE, detect_hierarchy, enumerate_correlations, restrict_sites
from .pointer import GaussianPointer, GridResolutionError, couple, estimate_real_weak_value, sample
from .scenario_file import ScenarioFormatError, load_scenario
from .twostate import (
    IncompatibleMeasurementError,
    InadmissibleTwoStateError,
    NotDichotomicError,
    SpectralDecomposition,
    abl_probabilities,
    dichotomic_certainty,
    weak_value,
)

EXIT_USAGE = 2
EXIT_NUMERIC = 3

PARAM_SIGNATURES = {
    "two-box": {},
    "hydrogen": {},
    "n-body": {"n": ("int", 3), "c": ("complex", "1")},
    "photon": {"n": ("int", 3)},
    "fock": {"n": ("int", 3)},
}


class UsageError(Exception):
    pass


class NotHermitian(Exception):
    pass


def format_complex(z: complex, zero_tol: float | None = None) -> str:
    """``re+imi`` with 12 significant digits; optionally snap tiny values to 0."""
    z = complex(z)
    if zero_tol is not None and abs(z) < zero_tol:
        z = 0j
    re_, im = z.real + 0.0, z.imag + 0.0
    return f"{re_:.12g}{im:+.12g}i"


def parse_complex(text: str) -> complex:
    t = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _raw(x: float) -> str:
    return repr(float(x) + 0.0)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def load(args) -> sc.Scenario:
    ref = args.scenario
    if ref in sc.BUILTIN_SCENARIOS:
        params = {}
        for key in PARAM_SIGNATURES[ref]:
            val = getattr(args, key, None)
            if val is not None:
                params[key] = val
        for key in ("n", "c"):
            if getattr(args, key, None) is not None and key not in PARAM_SIGNATURES[ref]:
                raise UsageError(f"scenario {ref!r} does not take --{key}")
        try:
            return sc.build(ref, **params)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InadmissibleTwoStateError):
                raise
            raise UsageError(str(exc)) from None
    if os.path.isfile(ref):
        if args.n is not None or args.c is not None:
            raise UsageError("--n/--c apply to built-in scenarios only")
        try:
            return load_scenario(ref)
        except InadmissibleTwoStateError:
            raise
        except ScenarioFormatError as exc:
            raise UsageError(f"{ref}: {exc}") from None
    raise UsageError(f"unknown scenario {ref!r}: not a built-in id ({', '.join(sc.BUILTIN_SCENARIOS)}) or a file")


def resolve(scenario, expr):
    try:
        return sc.resolve_observable(scenario, expr)
    except sc.ObservableError as exc:
        raise UsageError(str(exc)) from None


def emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_list(args) -> str:
    if args.format == "json":
        return _dump_json(
            {
                "scenarios": [
                    {"id": sid, "params": {k: {"type": t, "default": d} for k, (t, d) in sig.items()}}
                    for sid, sig in PARAM_SIGNATURES.items()
                ]
            }
        )
    if args.format == "csv":
        rows = [
            [sid, " ".join(f"--{k}:{t}={d}" for k, (t, d) in sig.items())] for sid, sig in PARAM_SIGNATURES.items()
        ]
        return _csv(rows, ["id", "params"])
    out = []
    for sid, sig in PARAM_SIGNATURES.items():
        params = " ".join(f"--{k} {t.upper()} (default {d})" for k, (t, d) in sig.items()) or "(no parameters)"
        out.append(f"{sid:<10} {params}")
    return "\n".join(out) + "\n"


def cmd_weak(args) -> str:
    s = load(args)
    names = args.obs or list(s.observables)
    if not names:
        raise UsageError("scenario has no named observables; pass --obs")
    values = [(n, weak_value(s.two_state, resolve(s, n))) for n in names]
    if args.format == "json":
        return _dump_json(
            {
                "scenario": s.two_state.label or s.id,
                "weak_values": [
                    {"observable": n, "re": v.real, "im": v.imag, "magnitude": abs(v)} for n, v in values
                ],
            }
        )
    if args.format == "csv":
        return _csv([[n, _raw(v.real), _raw(v.imag), _raw(abs(v))] for n, v in values],
                    ["observable", "re", "im", "magnitude"])
    width = max(len(n) for n, _ in values)
    return "".join(f"{n:<{width}}  {format_complex(v, args.tol)}\n" for n, v in values)


def _label_list(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else None


def cmd_hierarchy(args) -> str:
    s = load(args)
    fam_name = args.family or s.default_family
    if fam_name not in s.families:
        raise UsageError(f"scenario has no family {fam_name!r}")
    fam = s.families[fam_name]
    labels = _label_list(args.labels)
    if labels:
        unknown = set(labels) - set(fam.all_labels())
        if unknown:
            raise UsageError(f"unknown labels {sorted(unknown)}; family {fam_name} has {list(fam.all_labels())}")
    n = s.space.n_sites
    try:
        if args.keep:
            kept = [int(k) - 1 for k in args.keep.split(",")]
            if any(not 0 <= k < n for k in kept):
                raise UsageError(f"--keep sites must lie in 1..{n}")
            table = restrict_sites(s.two_state, fam, kept, labels, args.tol)
            report = table.report
        else:
            if args.max_order is not None and not 1 <= args.max_order <= n:
                raise UsageError(f"--max-order must lie in 1..{n}")
            table = enumerate_correlations(s.two_state, fam, args.max_order, labels, min_order=1)
            report = detect_hierarchy(table, args.tol)
    except (IncompleteTableError, IndexError) as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, InadmissibleTwoStateError):
            raise
        raise UsageError(str(exc)) from None

    entries = [(q, v) for q, v in table.entries.items() if q.order >= 1]
    sites = lambda q: " ".join(str(x + 1) for x in q.sites)
    labs = lambda q: " ".join(q.labels)
    if args.format == "json":
        return _dump_json(
            {
                "scenario": s.two_state.label or s.id,
                "family": fam_name,
                "labels": labels or list(fam.all_labels()),
                "kept_sites": [x + 1 for x in table.sites],
                "zero_tolerance": args.tol,
                "report": report.to_dict(),
                "entries": [
                    {"order": q.order, "sites": [x + 1 for x in q.sites], "labels": list(q.labels),
                     "re": v.real, "im": v.imag, "magnitude": abs(v)}
                    for q, v in entries
                ],
            }
        )
    if args.format == "csv":
        head = "".join(f"# {k}={_report_field(v)}\n" for k, v in report.to_dict().items())
        rows = [[q.order, sites(q), labs(q), _raw(v.real), _raw(v.imag), _raw(abs(v))] for q, v in entries]
        return head + _csv(rows, ["order", "sites", "labels", "re", "im", "magnitude"])
    out = [f"scenario {s.two_state.label or s.id}  family {fam_name}  labels {','.join(labels or fam.all_labels())}"]
    out.append(f"{'order':<6}{'sites':<16}{'labels':<16}weak value")
    for q, v in entries:
        out.append(f"{q.order:<6}{sites(q):<16}{labs(q):<16}{format_complex(v, args.tol)}")
    van = ", ".join(map(str, report.vanishing_orders)) or "none"
    out.append(f"vanishing orders: {van}")
    if report.emergence_order is None:
        out.append("emergence order: none")
    else:
        out.append(
            f"emergence order: {report.emergence_order}  value {format_complex(report.emergence_value, args.tol)}"
            f"  max |value| {report.max_magnitude_at_emergence:.12g}"
        )
    if report.note:
        out.append(f"note: {report.note}")
    return "\n".join(out) + "\n"


def _report_field(v):
    if isinstance(v, list):
        return ";".join(_raw(x) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return _raw(v)
    return "" if v is None else str(v)


def cmd_simulate(args) -> str:
    if args.g == 0:
        raise UsageError("--g must be nonzero")
    if args.sigma <= 0:
        raise UsageError("--sigma must be positive")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    s = load(args)
    op = resolve(s, args.obs)
    if not op.is_hermitian():
        raise NotHermitian(f"observable {args.obs!r} is not Hermitian; position readout needs a Hermitian observable")
    mix = couple(s.two_state, op, GaussianPointer(args.g, args.sigma))
    rec = sample(mix, args.trials, args.seed, workers=args.workers,
                 scenario_id=s.two_state.label or s.id, observable=args.obs)
    if args.readings:
        with open(args.readings, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(rec.to_csv())
    est, err = estimate_real_weak_value(rec)
    exact = weak_value(s.two_state, op)
    fields = {
        "scenario": s.two_state.label or s.id,
        "observable": args.obs,
        "g": float(args.g),
        "sigma": float(args.sigma),
        "trials": args.trials,
        "seed": args.seed,
        "estimate": est,
        "std_error": float(err),
        "post_selection_weight": mix.post_selection_weight,
        "weak_value_re": exact.real,
    }
    if args.format == "json":
        return _dump_json(fields)
    if args.format == "csv":
        return _csv([[v if isinstance(v, (str, int)) else _raw(v) for v in fields.values()]], list(fields))
    return (
        f"estimate Re<A>_w = {est:.12g} +- {err:.3g}  (exact {exact.real + 0.0:.12g})\n"
        f"post-selection weight {mix.post_selection_weight:.12g}  trials {args.trials}  seed {args.seed}\n"
    )


def cmd_abl(args) -> str:
    s = load(args)
    op = resolve(s, args.obs)
    if not op.is_hermitian():
        raise NotHermitian(f"observable {args.obs!r} is not Hermitian")
    spec = SpectralDecomposition.from_operator(op)
    if len(spec.eigenvalues) != 2:
        raise NotDichotomicError(
            f"observable {args.obs!r} has {len(spec.eigenvalues)} distinct eigenvalues; the certainty flag needs 2"
        )
    probs = abl_probabilities(s.two_state, spec)
    certain = dichotomic_certainty(s.two_state, op)
    wv = weak_value(s.two_state, op)
    if args.format == "json":
        return _dump_json(
            {
                "scenario": s.two_state.label or s.id,
                "observable": args.obs,
                "weak_value": [wv.real, wv.imag],
                "outcomes": [{"eigenvalue": e, "probability": float(p)} for e, p in zip(spec.eigenvalues, probs)],
                "certain_outcome": certain,
            }
        )
    if args.format == "csv":
        rows = [[_raw(e), _raw(p), "1" if certain is not None and e == certain else "0"]
                for e, p in zip(spec.eigenvalues, probs)]
        return _csv(rows, ["eigenvalue", "probability", "certain"])
    out = [f"P({e:.12g}) = {p:.12g}" for e, p in zip(spec.eigenvalues, probs)]
    out.append(f"weak value {format_complex(wv, args.tol)}")
    out.append("certain outcome: none" if certain is None else f"certain outcome: {certain:.12g}")
    return "\n".join(out) + "\n"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsvf", description="Weak values and correlation hierarchies of pre- and post-selected ensembles.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        sp.add_argument("--format", choices=("table", "csv", "json"), default="table")
        sp.add_argument("--out", help="write output here instead of stdout")
        if scenario:
            sp.add_argument("scenario", help="built-in id or path to a scenario file")
            sp.add_argument("--n", type=int, help="number of sites (n-body, photon, fock)")
            sp.add_argument("--c", type=parse_complex, help="post-selection coefficient C (n-body)")
            sp.add_argument("--tol", type=float, default=ZERO_TOLERANCE, help="zero tolerance")

    sp = sub.add_parser("list", help="list built-in scenarios")
    common(sp, scenario=False)
    sp.set_defaults(func=cmd_list)

    sp = sub.add_parser("weak", help="weak values of observables")
    common(sp)
    sp.add_argument("--obs", action="append", help="observable name or query, e.g. L1*L2, full-L, a1*a3")
    sp.set_defaults(func=cmd_weak)

    sp = sub.add_parser("hierarchy", help="correlation table and emergence order")
    common(sp)
    sp.add_argument("--labels", help="comma-separated projector labels")
    sp.add_argument("--family", help="projector family (default: the scenario's)")
    sp.add_argument("--max-order", type=int)
    sp.add_argument("--keep", help="comma-separated 1-based sites to keep; others carry the identity")
    sp.set_defaults(func=cmd_hierarchy)

    sp = sub.add_parser("simulate", help="Gaussian-pointer Monte-Carlo estimate of Re<A>_w")
    common(sp)
    sp.add_argument("--obs", required=True)
    sp.add_argument("--g", type=float, default=0.05, help="coupling strength")
    sp.add_argument("--sigma", type=float, default=1.0, help="pointer width")
    sp.add_argument("--trials", type=int, default=200_000, help="post-selected readings")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--readings", help="write raw readings CSV here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("abl", help="strong-measurement (ABL) probabilities and certainty")
    common(sp)
    sp.add_argument("--obs", required=True)
    sp.set_defaults(func=cmd_abl)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        emit(args, args.func(args))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tsvf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        InadmissibleTwoStateError,
        IncompatibleMeasurementError,
        NotDichotomicError,
        NotHermitian,
        GridResolutionError,
    ) as exc:
        print(f"tsvf: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
