"""Command line interface: ``napt <command> <file> [names...] [options]``.

Exit codes: 0 ok, 1 check failure, 2 parse error, 3 precondition failure,
4 infeasible, 5 validation refusal.
"""
from __future__ import annotations

import argparse
import sys

from . import io as nio
from .algebra import ModelMetric
from .complex import fmt_q, uniform_grid
from .energy import (
    appendix_constants,
    check_estimates,
    check_identities,
    energy_report,
    measure_energy,
    sample_size,
)
from .errors import NaptError, PreconditionError, ValidationRefusal
from .graph import PLMetric, envelope, orthogonality_defect
from .measure import AtomicMeasure, format_mass
from .render import render
from .sampling import battery_samples, rng_for, sampler_for
from .toric import (
    TropicalMetric,
    format_metric,
    obstacle_from_metric,
    t_envelope,
    t_ma,
    t_solve_detailed,
)

COMMANDS = ("ma", "solve", "energy", "measure-energy", "envelope", "check", "render")


def format_measure(mu: AtomicMeasure, engine) -> list:
    return [f"{engine.point_label(p)}: {format_mass(m)}" for p, m in mu.items()]


def format_any_metric(u) -> list:
    if isinstance(u, TropicalMetric):
        return [format_metric(u)]
    if isinstance(u, PLMetric):
        lines = [f"{v}: {fmt_q(x)}" for v, x in sorted(u.values.items())]
        for e, pts in sorted(u.breakpoints.items()):
            inner = ", ".join(f"{fmt_q(o)} -> {fmt_q(x)}" for o, x in pts)
            lines.append(f"{e}: [{inner}]")
        return lines
    if isinstance(u, ModelMetric):
        return ["[" + ", ".join(fmt_q(x) for x in u.coeffs) + "]"]
    return [repr(u)]


def _emit(lines):
    sys.stdout.write("\n".join(lines) + "\n")


def _write_svg(path, svg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)


def _metrics(pr, names):
    return [pr.metric(n) for n in names]


# -- commands -------------------------------------------------------------------------

def cmd_ma(pr, args) -> int:
    if not args.names:
        raise PreconditionError("ma needs a metric name")
    eng = pr.engine
    ms = _metrics(pr, args.names)
    if len(ms) == 1:
        mu = eng.ma(ms[0]) if pr.kind != "algebra" else eng.ma_mixed(ms * eng.n)
    elif len(ms) == eng.n:
        for u in ms:
            if not eng.is_psh(u):
                raise PreconditionError("mixed measure needs psh metrics")
        mu = eng.ma_mixed(ms)
    else:
        raise PreconditionError(f"give one metric or exactly {eng.n}")
    if pr.kind == "algebra" and not mu.is_positive():
        raise PreconditionError("metric is not psh: negative Monge-Ampère mass",
                                [p for p, m in mu.items() if m < 0])
    _emit(format_measure(mu, eng))
    if args.out:
        _write_svg(args.out, render(mu, eng, f"MA({', '.join(args.names)})"))
    return 0


def cmd_solve(pr, args) -> int:
    if len(args.names) != 1:
        raise PreconditionError("solve needs one measure name")
    eng = pr.engine
    mu = pr.measure(args.names[0])
    if not mu.is_probability():
        raise PreconditionError(f"target is not a probability measure (total mass {format_mass(mu.total_mass())})")
    if pr.kind == "toric":
        tol = args.tol if args.tol is not None else eng.tol
        res = t_solve_detailed(mu, eng.P, tol)
        u, resid, iters = res.metric, res.residual, res.iterations
    else:
        u = eng.solve(mu)
        resid, iters = eng.solve_residual(mu, u), 0
    lines = format_any_metric(u)
    lines.append(f"normalization: sup = {fmt_q(eng.sup_diff(u))}")
    lines.append(f"residual: {resid if isinstance(resid, float) else fmt_q(resid)}")
    if iters:
        lines.append(f"iterations: {iters}")
    _emit(lines)
    if args.out:
        _write_svg(args.out, render(u, eng, f"solve({args.names[0]})"))
    return 0


def cmd_energy(pr, args) -> int:
    if len(args.names) not in (1, 2):
        raise PreconditionError("energy needs one or two metric names")
    eng = pr.engine
    ms = _metrics(pr, args.names)
    for u in ms:
        if not eng.is_psh(u):
            raise PreconditionError("energy needs psh metrics")
    phi = ms[0]
    psi = ms[1] if len(ms) == 2 else None
    rep = energy_report(phi, psi, eng)
    lines = [f"E: {fmt_q(rep.E)}", f"I: {fmt_q(rep.I)}", f"J: {fmt_q(rep.J)}",
             f"I-J: {fmt_q(rep.I_minus_J)}"]
    for k, v in sorted(rep.margins.items()):
        lines.append(f"margin {k}: {fmt_q(v)}")
    _emit(lines)
    return 0


def cmd_measure_energy(pr, args) -> int:
    if len(args.names) != 1:
        raise PreconditionError("measure-energy needs one measure name")
    mu = pr.measure(args.names[0])
    if not mu.is_probability():
        raise PreconditionError("target is not a probability measure")
    _emit([f"E*: {fmt_q(measure_energy(mu, pr.engine))}"])
    return 0


def cmd_envelope(pr, args) -> int:
    if len(args.names) != 1:
        raise PreconditionError("envelope needs one obstacle name")
    name = args.names[0]
    eng = pr.engine
    if pr.kind == "metric_graph":
        psi = pr.metric(name)
        grid = uniform_grid(eng.graph, args.grid, psi.breakpoint_points())
        u = envelope(psi, grid)
        lines = format_any_metric(u)
        lines.append(f"orthogonality defect: {fmt_q(orthogonality_defect(psi, grid))}")
    elif pr.kind == "toric":
        if name in pr.obstacles:
            psi = pr.obstacles[name]
        elif name in pr.metrics:
            psi = obstacle_from_metric(pr.metrics[name])
        else:
            raise PreconditionError(f"unknown metric or obstacle {name!r}")
        u = t_envelope(psi, eng.P)
        defect = t_ma(u).integrate(lambda w: psi(w) - u(w))
        lines = format_any_metric(u) + [f"orthogonality defect: {fmt_q(defect)}"]
    else:
        raise PreconditionError("envelopes are not available on intersection-table data")
    _emit(lines)
    if args.out:
        _write_svg(args.out, render(u, eng, f"envelope({name})"))
    return 0


def cmd_check(pr, args) -> int:
    eng = pr.engine
    count = args.samples
    if count <= 0:
        _emit(["empty report: 0 samples", "status: PASS"])
        return 0
    if args.suite in ("estimates", "all") and getattr(eng, "certified", True) is False:
        diag = eng.validation
        note = "; ".join(diag.diagnostics) or "positivity form is not positive semidefinite"
        raise ValidationRefusal(f"estimates refused: the intersection data is not certified geometric ({note}); "
                                "run --suite identities for the algebraic checks")
    tol = args.tol if args.tol is not None else (1e-8 if pr.kind == "toric" else 0.0)
    rng = rng_for(args.seed)
    sampler = sampler_for(eng, rng)
    samples = battery_samples(sampler, count, sample_size(eng.n))
    lines = []
    ok = True
    if args.suite in ("identities", "all"):
        rows = check_identities(samples, eng, tol)
        lines.append("identities:")
        summary: dict = {}
        for r in rows:
            cur = summary.setdefault(r.name, [0, 0])
            cur[0] += 1
            cur[1] += int(not r.passed)
        for name, (n, bad) in sorted(summary.items()):
            lines.append(f"  {name:16s} samples={n} failures={bad} {'PASS' if not bad else 'FAIL'}")
            ok &= not bad
    if args.suite in ("estimates", "all"):
        rep = check_estimates(samples, eng, appendix_constants(eng.n), tol)
        lines.append("estimates:")
        lines.append("  constants:")
        lines += ["    " + c for c in rep.constant_lines()]
        if getattr(eng, "d_ref", None) is None:
            lines.append("  note: no D_ref available; sup-bound rows skipped")
        for name, s in rep.summary().items():
            flag = "PASS" if not s["failures"] else "FAIL"
            lines.append(f"  {name:16s} min_margin={s['min_margin']:.6g} samples={s['samples']} "
                         f"failures={s['failures']} {flag}")
        ok &= rep.passed
    lines.append(f"status: {'PASS' if ok else 'FAIL'}")
    _emit(lines)
    return 0 if ok else 1


def cmd_render(pr, args) -> int:
    if len(args.names) != 1:
        raise PreconditionError("render needs one object name")
    if pr.kind == "algebra":
        raise PreconditionError("intersection-table data has no geometric picture to render")
    name = args.names[0]
    if name in pr.metrics:
        obj = pr.metrics[name]
    elif name in pr.measures:
        obj = pr.measures[name]
    else:
        raise PreconditionError(f"unknown object {name!r}")
    svg = render(obj, pr.engine, name)
    if args.out:
        _write_svg(args.out, svg)
    else:
        sys.stdout.write(svg)
    return 0


HANDLERS = {
    "ma": cmd_ma,
    "solve": cmd_solve,
    "energy": cmd_energy,
    "measure-energy": cmd_measure_energy,
    "envelope": cmd_envelope,
    "check": cmd_check,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="napt", description="Exact non-Archimedean Monge-Ampère toolkit.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file")
    p.add_argument("names", nargs="*")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=8)
    p.add_argument("--out", default=None)
    p.add_argument("--suite", choices=("estimates", "identities", "all"), default="all")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        pr = nio.load(args.file)
        return HANDLERS[args.command](pr, args)
    except NaptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        viol = getattr(exc, "violations", None)
        if viol:
            print("violations: " + ", ".join(str(getattr(v, "label", v)) for v in viol), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
