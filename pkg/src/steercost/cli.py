"""Command-line front end.

    steercost analyze --input box.json
    steercost sweep --family white --vmin 0 --vmax 1 --steps 11
    steercost decompose --input box.json
    steercost locc --preset coarse-grain --family white --V 0.9
    steercost box --family colored --V 0.4 --out box.json

Exit codes: 0 success, 2 input validation, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import lp
from .boxkit import Box, box_to_json, chsh_values, correlators, local_det_box, maximally_mixed_box, pr_box, read_box
from .errors import NumericalFailure, OutOfRange, ValidationError
from .locc import PRESETS, monotonicity_harness, preset
from .quantum import (
    assemblage_from,
    bb84_alice_measurements,
    colored_noise_state,
    mub_pair_standard,
    werner_state,
)
from .steering import (
    BB84_THRESHOLD,
    DEFAULT_GRID,
    TAU_GRID,
    SteeringDecomposition,
    bb84_lhv_model,
    colored_bb84_lhv_model,
    detect_family,
    family_box,
    family_cost,
    lhv_lhs_search,
    numeric_decomposition,
    optimal_decomposition_bb84,
    optimal_decomposition_colored,
    steering_cost_lower_bound,
    steering_cost_numeric,
    steering_functional,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

SWEEP_HEADER = ("V", "S_value", "cost_closed", "cost_lb", "cost_numeric", "chsh_max", "nonlocal_cost")


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _box_dict(box: Box) -> dict:
    return {"p": box.flat()}


# ---------------------------------------------------------------------------
# commands (each returns the text to emit)


def cmd_analyze(box: Box, grid_n: int = DEFAULT_GRID, certificate: bool = False) -> dict:
    chsh = chsh_values(box)
    chsh_max = max(chsh.values())
    S = steering_functional(box)
    cost = steering_cost_numeric(box, grid_n)
    c = correlators(box)
    report = {
        "box": _box_dict(box),
        "correlators": {"E": c.E.tolist(), "mA": c.mA.tolist(), "mB": c.mB.tolist()},
        "chsh": chsh,
        "chsh_max": chsh_max,
        "local": lp.nonlocal_cost(box) <= lp.TAU_LP,
        "nonlocal_cost": lp.nonlocal_cost(box),
        "steering_functional": S,
        "violates_steering_inequality": S > 2.0 + 1e-7,
        "steerable": cost > TAU_GRID,
        "steering_cost_lower_bound": steering_cost_lower_bound(box),
        "steering_cost_numeric": cost,
        "grid_n": grid_n,
        "family": None,
        "steering_cost_closed": None,
    }
    fam = detect_family(box)
    if fam is not None:
        report["family"] = {"name": fam[0], "V": fam[1]}
        report["steering_cost_closed"] = family_cost(*fam)
    if certificate:
        report["certificate"] = cmd_decompose(box, grid_n)
    return report


def _sweep_row(args) -> list[str]:
    family, V, grid_n = args
    box = family_box(family, V)
    return [
        _fmt(V),
        _fmt(steering_functional(box)),
        _fmt(family_cost(family, V)),
        _fmt(steering_cost_lower_bound(box)),
        _fmt(steering_cost_numeric(box, grid_n)),
        _fmt(max(chsh_values(box).values())),
        _fmt(lp.nonlocal_cost(box)),
    ]


def cmd_sweep(family: str, v_min: float, v_max: float, steps: int, grid_n: int = DEFAULT_GRID, jobs: int = 1) -> str:
    if family not in ("white", "colored"):
        raise ValidationError(f"unknown family {family!r}; expected 'white' or 'colored'")
    if not 0.0 <= v_min <= v_max <= 1.0:
        raise OutOfRange(f"need 0 <= vmin <= vmax <= 1, got vmin={v_min!r}, vmax={v_max!r}")
    if steps < 2:
        raise OutOfRange(f"steps must be >= 2, got {steps}")
    tasks = [(family, float(V), grid_n) for V in np.linspace(v_min, v_max, steps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))  # map keeps input order
    else:
        rows = [_sweep_row(t) for t in tasks]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def _decomposition_dict(dec: SteeringDecomposition, target: Box) -> dict:
    return {
        "kind": "steering-decomposition",
        "source": dec.source,
        "p_s": dec.p_s,
        "steerable": _box_dict(dec.steerable),
        "unsteerable": _box_dict(dec.unsteerable),
        "model": dec.model.to_dict() if dec.model is not None else None,
        "reconstruction_residual": dec.residual(target),
        "diagnostics": dec.diagnostics,
    }


def _model_dict(model, target: Box, source: str) -> dict:
    return {
        "kind": "lhv-lhs-model",
        "source": source,
        **model.to_dict(),
        "reconstruction_residual": model.residual(target),
    }


def cmd_decompose(box: Box, grid_n: int = DEFAULT_GRID) -> dict:
    """Closed-form certificates for the two known families, grid LP otherwise."""
    fam = detect_family(box)
    if fam is not None:
        name, V = fam
        if name == "white" and 0.0 < V < BB84_THRESHOLD:
            return {"family": name, "V": V, **_model_dict(bb84_lhv_model(V).model, box, "closed-form")}
        if name == "white" and V >= BB84_THRESHOLD:
            return {"family": name, "V": V, **_decomposition_dict(optimal_decomposition_bb84(V), box)}
        if name == "colored" and V == 0.0:
            return {"family": name, "V": V, **_model_dict(colored_bb84_lhv_model(0.0).model, box, "closed-form")}
        if name == "colored":
            return {"family": name, "V": V, **_decomposition_dict(optimal_decomposition_colored(V), box)}
    model = lhv_lhs_search(box, grid_n)
    if model is not None:
        return _model_dict(model, box, "grid-lp")
    return _decomposition_dict(numeric_decomposition(box, grid_n), box)


def cmd_locc(preset_name: str, family: str, V: float, grid_n: int = DEFAULT_GRID) -> dict:
    channel = preset(preset_name)
    if family == "white":
        state = werner_state(V)
    elif family == "colored":
        state = colored_noise_state(V)
    else:
        raise ValidationError(f"unknown family {family!r}; expected 'white' or 'colored'")
    asm = assemblage_from(state, bb84_alice_measurements())
    report = monotonicity_harness(asm, channel, mub_pair_standard().measurements(), grid_n)
    return {"preset": preset_name, "family": family, "V": V, "grid_n": grid_n, **report.to_dict()}


def cmd_box(args) -> Box:
    if args.family:
        if args.V is None:
            raise ValidationError("--family needs --V")
        return family_box(args.family, args.V)
    if args.pr is not None:
        return pr_box(*_bits(args.pr, 3))
    if args.det is not None:
        return local_det_box(*_bits(args.det, 4))
    return maximally_mixed_box()


def _bits(text: str, n: int) -> tuple[int, ...]:
    if len(text) != n or set(text) - {"0", "1"}:
        raise ValidationError(f"expected {n} bits like {'0' * n}, got {text!r}")
    return tuple(int(ch) for ch in text)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steercost", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
        if grid:
            sp.add_argument("--grid", type=int, default=DEFAULT_GRID, metavar="N", help="pure-state grid size (default 720)")

    sp = sub.add_parser("analyze", help="full report for a box file")
    sp.add_argument("--input", required=True, metavar="PATH")
    sp.add_argument("--certificate", action="store_true", help="include a decomposition certificate")
    common(sp)

    sp = sub.add_parser("sweep", help="CSV sweep over a noisy family")
    sp.add_argument("--family", choices=("white", "colored"), required=True)
    sp.add_argument("--vmin", type=float, default=0.0)
    sp.add_argument("--vmax", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=11)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    common(sp)

    sp = sub.add_parser("decompose", help="LHV-LHS model or steering decomposition")
    sp.add_argument("--input", required=True, metavar="PATH")
    common(sp)

    sp = sub.add_parser("locc", help="monotonicity check for a channel preset")
    sp.add_argument("--preset", required=True, metavar="NAME", help=", ".join(PRESETS))
    sp.add_argument("--family", choices=("white", "colored"), default="white")
    sp.add_argument("--V", type=float, required=True)
    common(sp)

    sp = sub.add_parser("box", help="write a box JSON file")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--family", choices=("white", "colored"))
    g.add_argument("--pr", metavar="ABG", help="PR box bits, e.g. 000")
    g.add_argument("--det", metavar="ABGE", help="local deterministic box bits, e.g. 0101")
    sp.add_argument("--V", type=float)
    common(sp, grid=False)
    return p


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(args) -> str:
    if getattr(args, "grid", DEFAULT_GRID) < 8:
        raise OutOfRange(f"--grid must be >= 8, got {args.grid}")
    if args.command == "analyze":
        return json.dumps(cmd_analyze(read_box(args.input), args.grid, args.certificate), indent=2)
    if args.command == "sweep":
        return cmd_sweep(args.family, args.vmin, args.vmax, args.steps, args.grid, args.jobs)
    if args.command == "decompose":
        return json.dumps(cmd_decompose(read_box(args.input), args.grid), indent=2)
    if args.command == "locc":
        return json.dumps(cmd_locc(args.preset, args.family, args.V, args.grid), indent=2)
    return box_to_json(cmd_box(args))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _emit(run(args), args.out)
    except (ValidationError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
