"""Command-line front end.

Subcommands: ``pattern`` (beam-pattern grid), ``codebook dump``, ``train``
(per-trial training runs), ``simulate`` (scenario presets / config files),
``optimize-m`` (overhead-minimizing activation interval) and ``presets``.
Delimited output goes to ``--out`` (default stdout); report commands render
a matplotlib figure next to the CSV when ``--plot`` is given.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .geometry import (
    ArrayConfig,
    PolarPoint,
    SparseActivation,
    fresnel_distance,
    rayleigh_distance,
)
from .channel import sample_channel, substream
from .beampattern import pattern_grid
from .codebook import (
    build_dft_codebook,
    build_multi_beam_codebook,
    build_single_beam_codebook,
    sparse_codeword,
    polar_codeword,
)
from .training import (
    optimize_activation,
    run_exhaustive,
    run_farfield_dft,
    run_ls_training,
    run_proposed_multibeam,
    run_subarray_multibeam,
    run_two_phase,
)
from .simulate import (
    PRESETS,
    SimulationConfig,
    _Workspace,
    preset_config,
    run_scenario,
    write_csv,
)

TRAIN_SCHEMES = ("proposed", "exhaustive", "two-phase", "subarray", "dft", "ls")


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _array_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=257, help="number of antennas (odd)")
    p.add_argument("--f", type=float, default=30e9, help="carrier frequency in Hz")


def _cmd_pattern(args: argparse.Namespace) -> int:
    cfg = ArrayConfig(args.n, args.f)
    steer = PolarPoint(args.r, args.theta)
    if args.m > 1:
        act = SparseActivation.for_array(cfg, args.m)
        cw = sparse_codeword(steer, act, cfg)
    else:
        cw = polar_codeword(steer, cfg)
    thetas = np.linspace(-1.0, 1.0, args.theta_points)
    r_lo = args.r_min if args.r_min is not None else fresnel_distance(cfg)
    r_hi = args.r_max if args.r_max is not None else min(rayleigh_distance(cfg), 4.0 * args.r)
    ranges = np.geomspace(r_lo, r_hi, args.r_points)
    values = pattern_grid(thetas, ranges, cw, cfg)

    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["theta", "r", "value"])
        for i, r in enumerate(ranges):
            for j, t in enumerate(thetas):
                w.writerow([format(t, ".10g"), format(r, ".10g"), format(values[i, j], ".10g")])
    finally:
        if close:
            out.close()
    if args.plot:
        if args.out in (None, "-"):
            print("--plot requires --out", file=sys.stderr)
            return 2
        from .plotting import save_pattern_heatmap

        png = str(Path(args.out).with_suffix(".png"))
        save_pattern_heatmap(thetas, ranges, values, png, steer=(args.r, args.theta))
        print(f"wrote {png}", file=sys.stderr)
    return 0


def _cmd_codebook(args: argparse.Namespace) -> int:
    if args.action != "dump":
        print(f"unknown codebook action {args.action!r} (expected 'dump')", file=sys.stderr)
        return 2
    cfg = ArrayConfig(args.n, args.f)
    act = SparseActivation.for_array(cfg, args.m)
    rows = []
    if args.kind in ("single", "all"):
        book = build_single_beam_codebook(act, args.v, cfg)
        for s, v in book.indices():
            rows.append(["single", s, v, book.theta(s), book.range_m(s, v), cfg.n_antennas])
    if args.kind in ("multi", "all"):
        book = build_multi_beam_codebook(act, args.v, cfg)
        for s, v in book.indices():
            rows.append(["multi", s, v, book.theta(s), book.range_m(s, v), act.active_count])
    if args.kind in ("dft", "all"):
        dft = build_dft_codebook(cfg, args.grid_size or act.active_count * act.interval)
        for i, theta in enumerate(dft.thetas):
            rows.append(["dft", i + 1, 0, float(theta), "", cfg.n_antennas])
    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["kind", "s", "v", "theta", "r", "support_size"])
        for row in rows:
            w.writerow([format(x, ".10g") if isinstance(x, float) else x for x in row])
    finally:
        if close:
            out.close()
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = SimulationConfig(
        scenario="train",
        n_antennas=args.n,
        carrier_freq_hz=args.f,
        m=args.m,
        v=args.v,
        chi=args.chi,
        m_tilde=args.m_tilde,
        k_users=args.k,
        trials=args.trials,
        seed=args.seed,
        snr_db=args.snr_db,
        tx_power_dbm=args.tx_dbm if args.tx_dbm is not None else 30.0,
        noise_dbm=args.noise_dbm,
        rician_db=args.rician_db,
        n_nlos=args.nlos,
        schemes=(args.scheme,) if args.scheme != "ls" else ("ls",),
        theta_range=(args.theta_lo, args.theta_hi),
        range_range=(args.range_lo, args.range_hi),
        noiseless=args.noiseless,
    )
    config.validate()
    ws = _Workspace(config)

    out, close = _open_out(args.out)
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(
            ["trial", "user", "scheme", "pilots", "selected_s", "selected_v",
             "est_theta", "est_r", "success"]
        )
        for trial in range(args.trials):
            users = []
            rng_p = substream(args.seed, 0, trial, 0)
            for _ in range(args.k):
                theta = rng_p.uniform(args.theta_lo, args.theta_hi)
                r = rng_p.uniform(args.range_lo, args.range_hi)
                users.append(PolarPoint(r, theta))
            for u, user in enumerate(users):
                ch = sample_channel(user, ws.params, ws.cfg, substream(args.seed, 0, trial, 1, u))
                rng = substream(args.seed, 0, trial, 10, u)
                if args.scheme == "proposed":
                    o = run_proposed_multibeam(ch, ws.multi, ws.single, ws.model, rng, keep_trace=False)
                elif args.scheme == "exhaustive":
                    o = run_exhaustive(ch, ws.single, ws.model, rng, keep_trace=False)
                elif args.scheme == "two-phase":
                    o = run_two_phase(ch, ws.dft, ws.single, args.chi, ws.model, rng, keep_trace=False)
                elif args.scheme == "subarray":
                    o = run_subarray_multibeam(ch, args.m_tilde, ws.cfg, ws.model, rng, keep_trace=False)
                elif args.scheme == "dft":
                    o = run_farfield_dft(ch, ws.dft, ws.model, rng, keep_trace=False)
                else:
                    o = run_ls_training(ch, ws.model, rng)
                if ws.single is not None:
                    sel, theta_star = ws.oracle(ch.h)
                    if args.scheme in ("proposed", "exhaustive", "two-phase"):
                        success: object = int(o.selected == sel)
                    elif args.scheme in ("subarray", "dft"):
                        success = int(abs(o.estimate.angle - theta_star) <= ws.half_step)
                    else:
                        success = ""
                else:
                    success = ""
                sel_s, sel_v = o.selected if o.selected else ("", "")
                est_theta = format(o.estimate.angle, ".10g") if o.estimate else ""
                est_r = format(o.estimate.range_m, ".10g") if o.estimate else ""
                w.writerow([trial, u, args.scheme, o.pilots_used, sel_s, sel_v,
                            est_theta, est_r, success])
    finally:
        if close:
            out.close()
    return 0


def _parse_set(expr: str) -> tuple[str, object]:
    if "=" not in expr:
        raise ValueError(f"--set expects KEY=VALUE, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.preset:
        config = preset_config(args.preset)
    elif args.config:
        config = SimulationConfig.from_json(args.config)
    else:
        print("simulate needs --preset or --config", file=sys.stderr)
        return 2
    overrides: dict[str, object] = {}
    for expr in args.set or []:
        key, value = _parse_set(expr)
        overrides[key] = value
    for key, attr in (
        ("trials", "trials"), ("seed", "seed"), ("workers", "workers"),
        ("digital", "digital"),
    ):
        val = getattr(args, key)
        if val is not None:
            overrides[attr] = val
    if args.schemes:
        overrides["schemes"] = tuple(s.strip() for s in args.schemes.split(","))
    if overrides:
        known = {f.name for f in dataclasses.fields(SimulationConfig)}
        unknown = set(overrides) - known
        if unknown:
            print(f"unknown config keys: {sorted(unknown)}", file=sys.stderr)
            return 2
        data = config.to_dict()
        data.update(overrides)
        config = SimulationConfig.from_dict(data)
    config.validate()

    rows = run_scenario(config)
    out, close = _open_out(args.out)
    try:
        write_csv(rows, out)
    finally:
        if close:
            out.close()
    if args.plot:
        if args.out in (None, "-"):
            print("--plot requires --out", file=sys.stderr)
            return 2
        from .plotting import save_rate_figure

        png = str(Path(args.out).with_suffix(".png"))
        save_rate_figure(rows, png)
        print(f"wrote {png}", file=sys.stderr)
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    plan = optimize_activation(args.n, args.v, args.k)
    print(f"continuous optimum M* = {plan.m_continuous:.4f} "
          f"(abnormal-ring threshold {plan.m_threshold:.4f})")
    print("feasible intervals (M, overhead objective):")
    for m, f in plan.feasible:
        mark = " <- selected" if m == plan.m_selected else ""
        print(f"  M = {m:4d}   F = {f}{mark}")
    if plan.tied:
        ties = ", ".join(f"F({m}) = {dict(plan.feasible)[m]}" for m in plan.minimizers)
        print(f"objective tie: {ties}")
    print(f"selected M = {plan.m_selected}; worst-case pilots = {plan.pilots}")
    return 0


def _cmd_presets(_args: argparse.Namespace) -> int:
    for name in PRESETS:
        cfg = PRESETS[name]()
        print(f"{name}: sweep {cfg.sweep_var} over {list(cfg.sweep_values)}; "
              f"N={cfg.n_antennas}, f={cfg.carrier_freq_hz:g} Hz, "
              f"schemes={','.join(cfg.schemes)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlbeam",
        description="Near-field multi-beam training and rate simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="beam-pattern grid of one codeword")
    _array_args(p)
    p.add_argument("--m", type=int, default=16, help="activation interval (1 = dense)")
    p.add_argument("--theta", type=float, required=True, help="steer spatial angle")
    p.add_argument("--r", type=float, required=True, help="steer range in m")
    p.add_argument("--theta-points", type=int, default=401)
    p.add_argument("--r-points", type=int, default=200)
    p.add_argument("--r-min", type=float, default=None)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--plot", action="store_true", help="write a heatmap PNG next to the CSV")
    p.set_defaults(func=_cmd_pattern)

    p = sub.add_parser("codebook", help="dump codebook grids as CSV")
    p.add_argument("action", choices=["dump"])
    _array_args(p)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--v", type=int, default=4)
    p.add_argument("--kind", choices=["single", "multi", "dft", "all"], default="all")
    p.add_argument("--grid-size", type=int, default=None, help="DFT grid size (default QM)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_codebook)

    p = sub.add_parser("train", help="per-trial beam training runs")
    p.add_argument("--scheme", choices=TRAIN_SCHEMES, required=True)
    _array_args(p)
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--v", type=int, default=4)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--chi", type=int, default=3)
    p.add_argument("--m-tilde", type=int, default=4)
    p.add_argument("--snr-db", type=float, default=None)
    p.add_argument("--tx-dbm", type=float, default=None)
    p.add_argument("--noise-dbm", type=float, default=-70.0)
    p.add_argument("--rician-db", type=float, default=30.0)
    p.add_argument("--nlos", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--theta-lo", type=float, default=-1.0)
    p.add_argument("--theta-hi", type=float, default=1.0)
    p.add_argument("--range-lo", type=float, default=10.0)
    p.add_argument("--range-hi", type=float, default=20.0)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("simulate", help="run a scenario preset or config file")
    p.add_argument("--preset", default=None, choices=list(PRESETS), metavar="NAME")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config field (value parsed as JSON)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--digital", choices=["zf", "mmse"], default=None)
    p.add_argument("--schemes", default=None, help="comma-separated scheme list")
    p.add_argument("--out", default=None)
    p.add_argument("--plot", action="store_true", help="write a rate figure next to the CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize-m", help="overhead-minimizing activation interval")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("presets", help="list scenario presets")
    p.set_defaults(func=_cmd_presets)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
