"""Command line entry point: ``vogps simulate | replay | analyze``.

Every flag may also be given in a ``--config`` file of ``key = value`` lines
(keys are flag names, with dashes or underscores). Flags on the command line
win over the file.

Exit codes: 0 success, 2 schema or validation error, 3 numeric-domain error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, csvio
from .errors import NumericDomainError, SchemaError
from .measurement import (
    DEFAULT_MIN_NORM,
    DEFAULT_MIN_VO_NORM,
    VelocityMode,
    displacement_from_velocity,
    normalize_direction,
)
from .observer import DEFAULT_PROJECTION_PERIOD, GainSpec
from .replay import GainMode, RunConfig, replay
from .sim import SimConfig, circle_trajectory, run_monte_carlo, synth_measurements
from .so3 import angle_of, rotation_to_euler

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_DOMAIN = 3


def _gain(text: str):
    """A scalar, or nine comma/space separated numbers for a row-major 3x3 matrix."""
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid gain {text!r}") from None
    if len(values) == 1:
        value = values[0]
    elif len(values) == 9:
        value = np.array(values).reshape(3, 3)
    else:
        raise argparse.ArgumentTypeError("gain must be a scalar or 9 matrix entries")
    try:
        GainSpec.coerce(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return value


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _add_measurement_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--velocity-mode", choices=[m.value for m in VelocityMode], default="linear")
    p.add_argument("--min-norm", type=_positive(float), default=DEFAULT_MIN_NORM,
                   help="minimum NED displacement (m) that defines a direction")
    p.add_argument("--min-vo-norm", type=_positive(float), default=DEFAULT_MIN_VO_NORM,
                   help="minimum VO translation (VO units) that defines a direction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vogps", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="key = value file mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="circular-trajectory Monte Carlo study")
    sim.add_argument("--radius", type=_positive(float), default=50.0)
    sim.add_argument("--speed", type=_positive(float), default=2 * math.pi)
    sim.add_argument("--dt", type=_positive(float), default=0.1)
    sim.add_argument("--steps", type=_positive(int), default=4000)
    sim.add_argument("--runs", type=_positive(int), default=20)
    sim.add_argument("--max-init-deg", type=float, default=179.0)
    sim.add_argument("--gain", type=float, default=0.5)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--scale-d", type=_positive(float), default=1.0)
    sim.add_argument("--noise-dir-deg", type=float, default=0.0)
    sim.add_argument("--noise-rot-deg", type=float, default=0.0)
    sim.add_argument("--threshold-deg", type=_positive(float), default=math.degrees(1e-3))
    sim.add_argument("--projection-period", type=_positive(int), default=DEFAULT_PROJECTION_PERIOD)
    sim.add_argument("--out-dir", type=Path, default=Path("sim_out"))
    sim.add_argument("--export-logs", action="store_true",
                     help="also write vo.csv, gps.csv and truth.csv for replay")
    _add_measurement_flags(sim)

    rep = sub.add_parser("replay", help="run the observer over VO and GPS logs")
    rep.add_argument("--vo", type=Path, required=True)
    rep.add_argument("--gps", type=Path, required=True)
    rep.add_argument("--truth", type=Path)
    rep.add_argument("--out", type=Path, default=Path("estimates.csv"))
    rep.add_argument("--gain", type=_gain, default=0.5)
    rep.add_argument("--gain-mode", choices=[m.value for m in GainMode], default="fixed")
    rep.add_argument("--pe-window", type=_positive(int), default=500)
    rep.add_argument("--projection-period", type=_positive(int), default=DEFAULT_PROJECTION_PERIOD)
    rep.add_argument("--init", choices=["identity", "truth"], default="identity")
    _add_measurement_flags(rep)

    ana = sub.add_parser("analyze", help="persistency of excitation and rate bound of a GPS log")
    ana.add_argument("--gps", type=Path, required=True)
    ana.add_argument("--window", type=_positive(int), default=500,
                     help="directions per window (T + 1)")
    ana.add_argument("--gain", type=float, help="scalar gain to evaluate the rate bound for")
    ana.add_argument("--out", type=Path, help="per-window beta CSV")
    ana.add_argument("--require-rate", action="store_true",
                     help="exit with status 3 when no rate bound exists")
    _add_measurement_flags(ana)
    return parser


def read_config(path: Path) -> dict[str, str]:
    values = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read config ({exc.strerror})") from exc
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{path}: line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("_", "-").lstrip("-")] = value
    return values


def _config_argv(config: dict[str, str], subparser: argparse.ArgumentParser) -> list[str]:
    known = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                known[opt[2:]] = action
    argv = []
    for key, value in config.items():
        action = known.get(key)
        if action is None or key == "help":
            raise SchemaError(f"unknown config key {key!r}")
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                argv.append(f"--{key}")
            elif value.lower() not in ("0", "false", "no", "off"):
                raise SchemaError(f"config key {key!r} expects a boolean")
        else:
            argv += [f"--{key}", value]
    return argv


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return parser.parse_args(rest)
    config = read_config(known.config)
    cmd = next((i for i, a in enumerate(rest) if a in COMMANDS), None)
    if cmd is None:
        return parser.parse_args(rest)
    subparser = parser._subparsers._group_actions[0].choices[rest[cmd]]
    # config values go first so that explicit flags override them
    return parser.parse_args(rest[: cmd + 1] + _config_argv(config, subparser) + rest[cmd + 1 :])


def cmd_simulate(args) -> int:
    cfg = SimConfig(
        radius=args.radius,
        speed=args.speed,
        dt=args.dt,
        steps=args.steps,
        scale_d=args.scale_d,
        init_error_max=math.radians(args.max_init_deg),
        runs=args.runs,
        seed=args.seed,
        gain=args.gain,
        noise_dir=math.radians(args.noise_dir_deg),
        noise_rot=math.radians(args.noise_rot_deg),
        velocity_mode=args.velocity_mode,
        min_norm=args.min_norm,
        min_vo_norm=args.min_vo_norm,
        projection_period=args.projection_period,
        threshold=math.radians(args.threshold_deg),
    )
    GainSpec.coerce(cfg.gain)
    res = run_monte_carlo(cfg)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    err_deg = np.degrees(res.errors)
    csvio.write_csv(
        out / "curves.csv",
        ["k", "t"] + [f"err_deg_{i}" for i in range(cfg.runs)],
        ((k, res.t[k], *err_deg[:, k]) for k in range(res.t.size)),
    )
    steps = res.steps_to_threshold
    csvio.write_csv(
        out / "summary.csv",
        ["run", "init_err_deg", "final_err_deg", "max_tail_err_deg", "steps_to_threshold"],
        (
            (i, err_deg[i, 0], err_deg[i, -1], err_deg[i, s:].max() if s is not None else None, s)
            for i, s in enumerate(steps)
        ),
    )
    if args.export_logs:
        traj = circle_trajectory(cfg)
        rels, vels = synth_measurements(traj, cfg)
        csvio.write_vo_csv(out / "vo.csv", (csvio.VoRecord(k, traj[k].t, r) for k, r in enumerate(rels)))
        csvio.write_gps_csv(out / "gps.csv", (csvio.GpsRecord(k, v) for k, v in enumerate(vels)))
        csvio.write_truth_csv(
            out / "truth.csv", (csvio.TruthRecord(k, s.t, s.r, s.p) for k, s in enumerate(traj))
        )
    n_conv = sum(s is not None for s in steps)
    print(f"{n_conv}/{cfg.runs} runs below {args.threshold_deg:.4g} deg by step {cfg.steps}")
    return EXIT_OK


def cmd_replay(args) -> int:
    vo = csvio.read_vo_csv(args.vo)
    gps = csvio.read_gps_csv(args.gps)
    truth = csvio.read_truth_csv(args.truth) if args.truth else []
    cfg = RunConfig(
        gain=args.gain,
        velocity_mode=args.velocity_mode,
        min_norm=args.min_norm,
        min_vo_norm=args.min_vo_norm,
        projection_period=args.projection_period,
        gain_mode=args.gain_mode,
        pe_window=args.pe_window,
    )
    truth_by_k = {r.k: r for r in truth}
    r0 = None
    if args.init == "truth":
        if vo[0].k not in truth_by_k:
            raise SchemaError(f"--init truth needs a truth row for k = {vo[0].k}")
        r0 = truth_by_k[vo[0].k].r
    epochs = replay(vo, gps, cfg, r0=r0, truth=truth)

    header = ["k", "t", "qw", "qx", "qy", "qz", "roll_deg", "pitch_deg", "yaw_deg", "gain"]
    if truth:
        header.append("err_deg")
    rows = []
    for ep in epochs:
        eul = rotation_to_euler(ep.r_hat)
        row = [ep.k, ep.t, *csvio.matrix_to_quat(ep.r_hat)]
        row += [math.degrees(eul.roll), math.degrees(eul.pitch), math.degrees(eul.yaw), ep.gain]
        if truth:
            tr = truth_by_k.get(ep.k)
            row.append(None if tr is None else math.degrees(angle_of(ep.r_hat @ tr.r.T)))
        rows.append(row)
    csvio.write_csv(args.out, header, rows)
    if truth and rows[-1][-1] is not None:
        print(f"final attitude error {rows[-1][-1]:.6g} deg")
    return EXIT_OK


def gps_directions(gps, mode, min_norm) -> list[np.ndarray]:
    dirs = []
    for a, b in zip(gps, gps[1:]):
        d = normalize_direction(displacement_from_velocity(a.sample, b.sample, mode), min_norm)
        if d is not None:
            dirs.append(d)
    return dirs


def cmd_analyze(args) -> int:
    gps = csvio.read_gps_csv(args.gps)
    dirs = gps_directions(gps, args.velocity_mode, args.min_norm)
    if args.window < 2:
        raise SchemaError("--window must be at least 2 (T >= 1)")
    if len(dirs) < args.window:
        raise SchemaError(f"window of {args.window} directions is longer than the log ({len(dirs)})")
    T = args.window - 1
    betas = analysis.pe_window_betas(dirs, T)
    stats = analysis.PEWindowStats(T, float(betas.min()))
    if args.out:
        csvio.write_csv(args.out, ["window_start", "beta"], enumerate(betas))

    lines = [
        f"gps samples        {len(gps)}",
        f"directions         {len(dirs)}",
        f"window (T + 1)     {args.window}",
        f"T                  {T}",
        f"beta               {stats.beta:.10g}",
    ]
    if not stats.persistent:
        lines.append("status             PE violated: no rate bound")
        print("\n".join(lines))
        return EXIT_DOMAIN if args.require_rate else EXIT_OK
    lines.append("status             PE satisfied")
    if args.gain is not None:
        rate = analysis.convergence_rate(args.gain, stats)
        lines += [
            f"gain l             {args.gain:.10g}",
            f"gamma              {rate.gamma:.10g}",
            f"alpha_bar          {rate.alpha_bar:.10g}",
            f"alpha              {rate.alpha:.10g}",
        ]
    l_opt = analysis.optimal_gain(stats)
    best = analysis.convergence_rate(l_opt, stats)
    lines += [
        f"optimal gain l*    {l_opt:.10g}",
        f"alpha_bar at l*    {best.alpha_bar:.10g}",
        f"alpha at l*        {best.alpha:.10g}",
    ]
    print("\n".join(lines))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "replay": cmd_replay, "analyze": cmd_analyze}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SchemaError as exc:
        print(f"vogps: error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        return COMMANDS[args.command](args)
    except (SchemaError, ValueError) as exc:
        print(f"vogps: error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericDomainError as exc:
        print(f"vogps: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
