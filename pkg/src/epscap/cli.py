"""``epsilon-cap`` command-line entry point.

Data (CSV, reports) goes to stdout or ``--out``; diagnostics go to stderr.
Exit codes: 0 ok, 2 bad input, 3 solver failure, 4 enumeration/atom caps.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .blocklength import TypeCapError, feinstein_max_rate, metaconverse_rate_bound
from .capacity import (
    EnumerationCapError,
    SolverError,
    epsilon_capacity,
    epsilon_capacity_curve,
    is_well_ordered,
)
from .channel import component_capacity
from .cost import capacity_cost_curve, cost_constrained_capacity
from .specfile import RunConfig, SpecError, parse_channel_spec
from .spectrum import AtomCapError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CAP = 0, 2, 3, 4
FLOAT_FMT = "{:.9f}"

PLOT_TEMPLATE = '''"""Plot {csv_name}; needs matplotlib."""
import csv
import matplotlib.pyplot as plt

with open({csv_path!r}) as fh:
    rows = list(csv.DictReader(fh))
{body}
plt.grid(True, alpha=0.3)
plt.tight_layout()
plt.savefig({png_path!r})
'''

PLOT_BODIES = {
    "curve": """for r in rows:
    lo, hi, c = float(r["eps_lo"]), float(r["eps_hi"]), float(r["capacity_bits"])
    plt.hlines(c, lo, hi, colors="C0")
    plt.plot([lo], [c], "o", color="C0")
    plt.plot([hi], [c], "o", mfc="white", color="C0")
plt.xlabel("eps")
plt.ylabel("C(eps) [bits/use]")""",
    "fbl": """n = [int(r["n"]) for r in rows]
for key in ("feinstein_rate", "metaconverse_rate", "single_letter_capacity"):
    plt.plot(n, [float(r[key]) for r in rows], "o-", label=key)
plt.legend()
plt.xlabel("blocklength n")
plt.ylabel("rate [bits/use]")""",
    "cost": """g = [float(r["gamma"]) for r in rows]
plt.plot(g, [float(r["capacity_bits"]) for r in rows], "o-")
plt.xlabel("cost budget")
plt.ylabel("C(eps, gamma) [bits/use]")""",
}


class SandwichError(RuntimeError):
    """Achievability exceeded the converse: a numerical bug, never a valid result."""


def _fmt(x: float) -> str:
    return FLOAT_FMT.format(float(x))


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        out = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from None
    if any(v < 1 for v in out):
        raise argparse.ArgumentTypeError("blocklengths must be positive")
    return out


@contextmanager
def _executor(cfg: RunConfig):
    if cfg.threads <= 1:
        yield None
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            yield pool


def _emit_csv(header, rows, out, kind: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    if out is None:
        sys.stdout.write(buf.getvalue())
        return
    path = Path(out)
    path.write_text(buf.getvalue())
    script = path.with_suffix(".plot.py")
    script.write_text(PLOT_TEMPLATE.format(
        csv_name=path.name, csv_path=str(path), png_path=str(path.with_suffix(".png")),
        body=PLOT_BODIES[kind],
    ))
    print(f"wrote {path} and {script}", file=sys.stderr)


def _subset_label(subset) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(subset)) + "}"


def cmd_capacity(args, cfg: RunConfig) -> int:
    ch = parse_channel_spec(args.spec)
    if args.curve:
        with _executor(cfg) as pool:
            step = epsilon_capacity_curve(ch, tol=cfg.tol, gamma=args.cost, cap=cfg.component_cap,
                                          seed=cfg.seed, executor=pool)
        rows = [(_fmt(lo), _fmt(hi), _fmt(v)) for lo, hi, v in step.intervals()]
        _emit_csv(["eps_lo", "eps_hi", "capacity_bits"], rows, args.out, "curve")
        return EXIT_OK
    if args.eps is None:
        raise SpecError("--eps is required unless --curve is given")
    if args.cost is not None:
        res = cost_constrained_capacity(ch, args.eps, args.cost, tol=cfg.tol,
                                        cap=cfg.component_cap, seed=cfg.seed)
    else:
        res = epsilon_capacity(ch, args.eps, tol=cfg.tol, cap=cfg.component_cap, seed=cfg.seed)
    lines = [
        f"{res.value:.5f} bits, S={_subset_label(res.subset)}",
        f"capacity_bits: {_fmt(res.value)}",
        "input_law: " + " ".join(_fmt(p) for p in res.input_law.probs),
        f"subset: {_subset_label(res.subset)}",
        f"subset_weight: {_fmt(res.feasible_weight)}",
        f"method: {res.method.value}",
        f"certified_tol: {res.certified_tol:.3e}",
    ]
    if args.cost is not None:
        lines.append(f"expected_cost: {_fmt(res.input_law.probs @ ch.cost)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fbl(args, cfg: RunConfig) -> int:
    ch = parse_channel_spec(args.spec)
    base = epsilon_capacity(ch, args.eps, tol=cfg.tol, cap=cfg.component_cap, seed=cfg.seed)
    law = base.input_law
    rows = []
    with _executor(cfg) as pool:
        for n in args.n:
            ach = feinstein_max_rate(ch, law, n, args.eps, merge_tol=cfg.merge_tol, cap=cfg.atom_cap)
            conv = metaconverse_rate_bound(ch, n, args.eps, args.delta, merge_tol=cfg.merge_tol,
                                           cap=cfg.atom_cap, type_cap=cfg.type_cap, executor=pool)
            if ach > conv:
                raise SandwichError(
                    f"n={n}: achievable rate {ach:.9f} exceeds converse bound {conv:.9f}"
                )
            rows.append((str(n), _fmt(ach), _fmt(conv), _fmt(base.value)))
    _emit_csv(["n", "feinstein_rate", "metaconverse_rate", "single_letter_capacity"],
              rows, args.out, "fbl")
    return EXIT_OK


def cmd_cost_curve(args, cfg: RunConfig) -> int:
    ch = parse_channel_spec(args.spec)
    if ch.cost is None:
        raise SpecError(f"{args.spec}: cost-curve needs a 'cost' vector")
    with _executor(cfg) as pool:
        curve = capacity_cost_curve(ch, args.eps, sorted(args.gamma), tol=cfg.tol,
                                    seed=cfg.seed, executor=pool)
    rows = [(_fmt(g), _fmt(v)) for g, v in zip(curve.gamma_grid, curve.values)]
    _emit_csv(["gamma", "capacity_bits"], rows, args.out, "cost")
    print(f"gamma_star: {_fmt(curve.gamma_star)}", file=sys.stderr)
    print(f"unconstrained_capacity: {_fmt(curve.unconstrained)}", file=sys.stderr)
    for line in curve.report.lines():
        print(line, file=sys.stderr)
    return EXIT_OK


def cmd_check(args, cfg: RunConfig) -> int:
    ch = parse_channel_spec(args.spec)
    ok, cert = is_well_ordered(ch, tol=cfg.tol)
    lines = [
        f"components: {ch.n_components}",
        f"alphabet: |X|={ch.n_inputs} |Y|={ch.n_outputs}",
        "weights: " + " ".join(_fmt(w) for w in ch.weights),
        f"cost: {'none' if ch.cost is None else ' '.join(_fmt(c) for c in ch.cost)}",
    ]
    for i, c in enumerate(ch.channels):
        cc = component_capacity(c.matrix)
        lines.append(f"C_{i + 1}: {_fmt(cc.value)} bits")
    status = "yes" if ok else ("unknown" if cert.unknown else "no")
    lines.append(f"well_ordered: {status}")
    lines.append("order: " + " ".join(str(i + 1) for i in cert.order))
    for l, bound in sorted(cert.failures.items()):
        lines.append(f"  component {l + 1}: compound capacity of its upper set <= {_fmt(bound)}"
                     f" < C_{l + 1} = {_fmt(cert.capacities[l])}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epsilon-cap",
        description="epsilon-capacity, capacity-cost curves and finite-blocklength bounds for "
                    "mixtures of discrete memoryless channels. Rates are in bits per channel use.",
    )
    parser.add_argument("--config", help="JSON run config (flags override it)")
    parser.add_argument("--seed", type=int, help="solver restart seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="C(eps) at one eps, or the whole step curve")
    p.add_argument("spec")
    p.add_argument("--eps", type=float)
    p.add_argument("--curve", action="store_true", help="emit the step function as CSV")
    p.add_argument("--cost", type=float, metavar="GAMMA", help="average cost budget")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("fbl", help="Feinstein and meta-converse rates at finite n")
    p.add_argument("spec")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--n", type=_ints, required=True, help="blocklengths, e.g. 200,500,2000")
    p.add_argument("--delta", type=float, help="converse slack parameter (default 1/n)")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fbl)

    p = sub.add_parser("cost-curve", help="C(eps, gamma) on a budget grid")
    p.add_argument("spec")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--gamma", type=_floats, required=True, help="budgets, e.g. 0,0.1,0.2")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cost_curve)

    p = sub.add_parser("check", help="validate a spec and test well-orderedness")
    p.add_argument("spec")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, tol=getattr(args, "tol", None), seed=args.seed)
        return args.func(args, cfg)
    except (EnumerationCapError, AtomCapError, TypeCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (SolverError, SandwichError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
