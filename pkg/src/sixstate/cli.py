"""Command-line front end.

Every subcommand is deterministic given its flags: reports are key=value
lines on stdout, errors go to stderr with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import attack, bell, infotheory, optimizer
from .protocol import Attack, SessionConfig, run_session
from .qcore import PureState, fidelity_pure, six_states

CURVE_HEADER = ("D", "I_AB", "I_AE_2bit", "I_AE_1bit", "I_AE_bb84_numeric")


def _fmt(value: float) -> str:
    """Nine significant digits; round-off below 1e-12 prints as 0."""
    return f"{round(float(value), 12) + 0.0:.9g}"


@dataclass
class CurveTable:
    rows: list[tuple[float, ...]]

    def __post_init__(self) -> None:
        self.rows = [tuple(float(_fmt(v)) for v in row) for row in self.rows]
        ds = [r[0] for r in self.rows]
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValueError("curve table D column must be strictly increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        writer.writerows([_fmt(v) for v in row] for row in self.rows)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurveTable":
        reader = csv.reader(io.StringIO(text))
        header = tuple(next(reader))
        if header != CURVE_HEADER:
            raise ValueError(f"unexpected header {header}")
        return cls([tuple(float(v) for v in row) for row in reader if row])


def compute_curves(d_min: float, d_max: float, steps: int, seed: int = 0) -> CurveTable:
    if not 0.0 <= d_min < d_max <= 0.5:
        raise ValueError("need 0 <= d_min < d_max <= 0.5")
    if steps < 2:
        raise ValueError("need at least 2 grid points")
    rows = []
    for d in np.linspace(d_min, d_max, steps):
        d = float(d)
        rows.append(
            (
                d,
                infotheory.i_ab(d),
                infotheory.i_ae_two_bit(d),
                infotheory.i_ae_one_bit(d),
                optimizer.bb84_maximum(d, seed),
            )
        )
    return CurveTable(rows)


def _emit(lines: list[str]) -> None:
    sys.stdout.write("".join(line + "\n" for line in lines))


def cmd_curves(args) -> int:
    table = compute_curves(args.d_min, args.d_max, args.steps, args.seed)
    text = table.to_csv()
    if args.out is None:
        sys.stdout.write(text)
        return 0
    try:
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    _emit([f"wrote={args.out}", f"rows={len(table.rows)}"])
    return 0


def cmd_intersect(args) -> int:
    d_star = optimizer.find_intersection(infotheory.i_ab, infotheory.i_ae_two_bit, 0.1, 0.2)
    bb84_star = optimizer.find_intersection(infotheory.i_ab, infotheory.i_ae_bb84_reference, 0.1, 0.2)
    chsh_dc = bell.critical_disturbance(2, seed=args.seed)
    _emit(
        [
            f"six_state_d_star={_fmt(d_star)}",
            f"six_state_i_at_d_star={_fmt(infotheory.i_ab(d_star))}",
            f"bb84_reference={_fmt(0.5 * (1 - 1 / np.sqrt(2)))}",
            f"bb84_d_star={_fmt(bb84_star)}",
            f"chsh_dc={_fmt(chsh_dc)}",
            f"d_star_exceeds_chsh_dc={str(d_star > chsh_dc).lower()}",
        ]
    )
    return 0


def cmd_simulate(args) -> int:
    cfg = SessionConfig(
        n_signals=args.signals,
        num_states=args.bases,
        disturbance=args.d,
        attack=Attack(args.attack),
        seed=args.seed,
    )
    stats = run_session(cfg)
    _emit(
        [f"bases={cfg.num_states}", f"attack={cfg.attack.value}", f"d={_fmt(cfg.disturbance)}", f"seed={cfg.seed}"]
        + stats.report_lines()
    )
    return 0


def cmd_bell(args) -> int:
    report = bell.bell_report(args.settings, args.d, seed=args.seed)
    _emit(
        [
            f"n={report.n}",
            f"d={_fmt(args.d)}",
            f"s_q={_fmt(report.s_q)}",
            f"s={_fmt(report.s)}",
            f"s_c={_fmt(report.s_c)}",
            f"ratio={_fmt(report.ratio)}",
            f"d_c={_fmt(report.d_c)}",
        ]
    )
    return 0


def cmd_optimize(args) -> int:
    constraints = optimizer.SIX_STATE if args.bases == 6 else optimizer.BB84
    result = optimizer.maximize_iae(args.d, constraints, seed=args.seed, restarts=args.restarts)
    reference = infotheory.i_ae_two_bit(args.d) if args.bases == 6 else infotheory.i_ae_bb84_reference(args.d)
    lines = [
        f"mode={constraints.mode.value}",
        f"d={_fmt(args.d)}",
        f"best_value={_fmt(result.best_value)}",
        f"closed_form={_fmt(reference)}",
        f"abs_error={float(abs(result.best_value - reference)):.3e}",
        f"max_residual={float(result.residuals.max()):.3e}",
        f"restarts={args.restarts}",
        f"success_fraction={_fmt(result.success_fraction())}",
    ]
    for name in "ac":
        w = result.weights(name)
        lines.append(f"weights_{name}=" + ",".join(_fmt(v) for v in w))
    _emit(lines)
    return 0


def cmd_attack_verify(args) -> int:
    lines = [f"d={_fmt(args.d)}"]
    probes = {"opt2": attack.build_optimal_probe(args.d), "opt1": attack.build_one_bit_probe(args.d)}
    rng = np.random.default_rng(args.seed)
    randoms = [PureState.normalized(rng.normal(size=2) + 1j * rng.normal(size=2)) for _ in range(args.samples)]
    for name, probe in probes.items():
        report = attack.check_constraints(probe)
        v = attack.to_isometry(probe)
        six = [fidelity_pure(s, attack.bob_state(v, s)) for _, _, s in six_states()]
        rand = [fidelity_pure(s, attack.bob_state(v, s)) for s in randoms]
        target = 1.0 - args.d
        lines += [
            f"{name}_residuals=" + ",".join(f"{r:.3e}" for r in report.as_tuple()),
            f"{name}_valid={str(report.valid).lower()}",
            f"{name}_isometry_error={v.isometry_error():.3e}",
            f"{name}_six_state_fidelity_dev={max(abs(f - target) for f in six):.3e}",
            f"{name}_random_fidelity_dev={max(abs(f - target) for f in rand):.3e}",
            f"{name}_z_information={_fmt(attack.measured_information(probe))}",
        ]
    _emit(lines)
    return 0


def _disturbance(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 0.5:
        raise argparse.ArgumentTypeError(f"disturbance {value} outside [0, 0.5]")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sixstate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", help="information curves as CSV")
    p.add_argument("--d-min", type=_disturbance, default=0.0)
    p.add_argument("--d-max", type=_disturbance, default=0.5)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("intersect", help="crossing of I_AB and I_AE versus the CHSH critical disturbance")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("simulate", help="Monte Carlo protocol session")
    p.add_argument("--bases", type=int, choices=(4, 6), default=6, help="number of states (4 or 6)")
    p.add_argument("--attack", choices=[a.value for a in Attack], default="none")
    p.add_argument("--d", type=_disturbance, default=0.0)
    p.add_argument("--signals", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bell", help="chained Bell correlation under attack")
    p.add_argument("--settings", type=int, default=2)
    p.add_argument("--d", type=_disturbance, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("optimize", help="numerical maximum of Eve's information at one D")
    p.add_argument("--d", type=_disturbance, default=0.1)
    p.add_argument("--bases", type=int, choices=(4, 6), default=6, help="6: six-state constraints, 4: BB84")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=_positive_int, default=optimizer.DEFAULT_RESTARTS)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("attack-verify", help="constraint and universality checks for the probes")
    p.add_argument("--d", type=_disturbance, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=_positive_int, default=1000)
    p.set_defaults(func=cmd_attack_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "settings", 2) < 2:
        parser.error("--settings must be at least 2")
    if args.command == "curves" and (args.d_min >= args.d_max or args.steps < 2):
        parser.error("need --d-min < --d-max and --steps >= 2")
    if getattr(args, "seed", 0) < 0:
        parser.error("--seed must be non-negative")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
