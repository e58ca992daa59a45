"""Command-line frontend: every experiment as a deterministic subcommand.

Series data goes to CSV (or JSON with --format json), scalars and
summaries to JSON, and every file-producing run writes a manifest
echoing the resolved configuration so the run can be reproduced
byte-identically (timestamps live only in the manifest).  Exit codes:
0 success, 2 configuration error, 3 numerical failure.

Heavy imports happen inside the command handlers: --threads must be
able to set NUMBA_NUM_THREADS before numba is first imported.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys

from .errors import ConfigurationError, NumericalError

_PROTOCOL_PARAM_FLAGS = {
    "epsilon": "--epsilon",
    "alpha": "--alpha",
    "delta_time": "--delta-time",
    "width": "--width",
    "tau": "--tau",
    "lambda0": "--lambda0",
    "lambda_c": "--lambda-c",
}


def _tool_version() -> str:
    try:
        from importlib.metadata import version

        return version("topochain")
    except Exception:
        return "unknown"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _json_safe(obj):
    """Recursively replace non-finite floats with None for strict JSON."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2, sort_keys=True) + "\n"


def _write_text(path: str, text: str):
    """Build-then-rename so failures never leave a partial file."""
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row))
    return "\n".join(lines) + "\n"


def _series_text(columns, rows, fmt: str) -> str:
    if fmt == "json":
        return _dump_json({"columns": list(columns),
                           "rows": [[c if isinstance(c, str) else c for c in r]
                                    for r in rows]})
    return _csv_text(columns, rows)


def _series_path(base: str, fmt: str) -> str:
    return f"{base}.{'json' if fmt == 'json' else 'csv'}"


def _write_manifest(base: str, command: str, resolved: dict, outputs):
    manifest = {
        "command": command,
        "tool_version": _tool_version(),
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": sorted(outputs),
        **resolved,
    }
    _write_text(base + ".manifest.json", _dump_json(manifest))


def _model_from_args(args):
    from .protocols import DEFAULT_PARAMS, ChainModel

    params = {}
    for key in DEFAULT_PARAMS.get(args.protocol, {}):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    return ChainModel.create(args.protocol, args.n, total_time=args.t_total, **params)


def _model_manifest(model, args) -> dict:
    return {
        "protocol": model.protocol_id,
        "n_sites": model.n_sites,
        "total_time": model.total_time,
        "params": dict(model.params),
        "step_size": args.h,
    }


def cmd_evolve(args) -> int:
    from .analysis import average_fidelity, protocol_phase
    from .core import EvolutionConfig, evolve, evolve_converged, transition_amplitude
    from .metrics import wrap_phase

    model = _model_from_args(args)
    cfg = EvolutionConfig(step_size=args.h)
    converged, delta = evolve_converged(model, config=cfg)
    amp = transition_amplitude(converged.state)
    summary = {
        "amplitude": {"re": amp.real, "im": amp.imag},
        "magnitude": abs(amp),
        "phase": wrap_phase(math.atan2(amp.imag, amp.real)),
        "fidelity": average_fidelity(amp),
        "expected_phase": protocol_phase(model),
        "norm_drift": converged.norm_drift,
        "n_steps": converged.n_steps,
        "step_size": converged.step_size,
        "convergence_delta": delta,
    }
    outputs = []
    if args.out:
        times = [model.total_time * i / (args.samples - 1) for i in range(args.samples)]
        traced = evolve(model, config=EvolutionConfig(step_size=converged.step_size),
                        sample_times=times)
        columns = ["t"] + [f"site_{i}" for i in range(1, model.n_sites + 1)]
        rows = [[t] + list(p) for t, p in zip(traced.trace_times, traced.trace)]
        series = _series_path(args.out, args.format)
        _write_text(series, _series_text(columns, rows, args.format))
        _write_text(args.out + ".summary.json", _dump_json(summary))
        outputs = [series, args.out + ".summary.json"]
        _write_manifest(args.out, "evolve",
                        {**_model_manifest(model, args), "samples": args.samples,
                         "format": args.format},
                        outputs)
    sys.stdout.write(_dump_json(summary))
    return 0


def cmd_ensemble(args) -> int:
    from .analysis import protocol_phase
    from .core import EvolutionConfig
    from .ensemble import EnsembleSpec, run_ensemble

    model = _model_from_args(args)
    if args.delta_list is not None:
        strengths = tuple(float(s) for s in args.delta_list.split(","))
    else:
        strengths = tuple(args.delta_max * i / args.delta_steps
                          for i in range(1, args.delta_steps + 1))
    spec = EnsembleSpec(
        model=model,
        strengths=strengths,
        realizations=args.realizations,
        master_seed=args.seed,
        evolution=EvolutionConfig(step_size=args.h),
        expected_phase=protocol_phase(model),
    )
    result = run_ensemble(spec)
    columns = ["delta", "k", "sub_seed", "abs_A", "phase", "fidelity"]
    rows = [[r.strength, str(r.realization), str(r.sub_seed),
             r.magnitude, r.phase, r.fidelity] for r in result.records]
    summaries = [{
        "strength": s.strength,
        "n_realizations": s.n_realizations,
        "n_failed": s.n_failed,
        "mean_magnitude": s.mean_magnitude,
        "min_magnitude": s.min_magnitude,
        "max_magnitude": s.max_magnitude,
        "circular_mean": s.circular_mean,
        "resultant_length": s.resultant_length,
        "circular_std": s.circular_std,
        "class_counts": s.class_counts,
        "expected_fraction": s.expected_fraction,
        "step_size": s.step_size,
        "convergence_delta": s.convergence_delta,
    } for s in result.summaries]
    if args.out:
        series = _series_path(args.out, args.format)
        _write_text(series, _series_text(columns, rows, args.format))
        _write_text(args.out + ".summary.json", _dump_json(summaries))
        _write_manifest(args.out, "ensemble",
                        {**_model_manifest(model, args),
                         "strengths": list(strengths),
                         "realizations": args.realizations,
                         "master_seed": args.seed,
                         "format": args.format},
                        [series, args.out + ".summary.json"])
    else:
        sys.stdout.write(_dump_json(summaries))
    return 0


def cmd_bands(args) -> int:
    import numpy as np

    from .core import instantaneous_spectrum

    model = _model_from_args(args)
    if args.samples < 2:
        raise ConfigurationError("need at least 2 time samples")
    ts = np.linspace(0.0, model.total_time, args.samples)
    columns = ["t"] + [f"lambda_{i}" for i in range(1, model.n_sites + 1)]
    rows = [[float(t)] + list(instantaneous_spectrum(model, None, float(t)))
            for t in ts]
    text = _series_text(columns, rows, args.format)
    if args.out:
        series = _series_path(args.out, args.format)
        _write_text(series, text)
        _write_manifest(args.out, "bands",
                        {**_model_manifest(model, args), "samples": args.samples,
                         "format": args.format},
                        [series])
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep_period(args) -> int:
    from .analysis import critical_period_sweep
    from .core import EvolutionConfig

    sweep = critical_period_sweep(args.n, args.t_min, args.t_max, args.t_step,
                                  EvolutionConfig(step_size=args.h))
    peaks = [{"period": T, "probability": P} for T, P in sweep.peaks]
    if args.out:
        series = _series_path(args.out, args.format)
        rows = [[float(T), float(P)]
                for T, P in zip(sweep.periods, sweep.probabilities)]
        _write_text(series, _series_text(["T", "P"], rows, args.format))
        _write_text(args.out + ".peaks.json", _dump_json(peaks))
        _write_manifest(args.out, "sweep-period",
                        {"protocol": "sqrt_interface", "n_sites": args.n,
                         "t_min": args.t_min, "t_max": args.t_max,
                         "t_step": args.t_step, "step_size": args.h,
                         "format": args.format},
                        [series, args.out + ".peaks.json"])
    sys.stdout.write(_dump_json(peaks))
    return 0


def cmd_phase_gate(args) -> int:
    from .analysis import phase_correction
    from .metrics import z4_classify, z4_label

    if args.n < 2:
        raise ConfigurationError(f"need N >= 2, got {args.n}")
    corr = phase_correction(args.n)
    payload = {
        "n_sites": corr.n_sites,
        "phi0": corr.phi0,
        "gate_diag": [[corr.gate[0, 0].real, corr.gate[0, 0].imag],
                      [corr.gate[1, 1].real, corr.gate[1, 1].imag]],
        "z4_class": z4_label(z4_classify(corr.phi0, 0.1)),
    }
    if args.out:
        _write_text(args.out + ".json", _dump_json(payload))
        _write_manifest(args.out, "phase-gate", {"n_sites": args.n},
                        [args.out + ".json"])
    sys.stdout.write(_dump_json(payload))
    return 0


def _add_model_flags(parser, require_protocol=True):
    parser.add_argument("--protocol", required=require_protocol,
                        choices=["normal_ssh", "edge_cosine", "edge_exponential",
                                 "sqrt_interface", "gaussian_interface",
                                 "rice_mele", "christandl"])
    parser.add_argument("--n", type=int, required=True, help="number of sites")
    parser.add_argument("--t-total", type=float, default=None,
                        help="transfer window (default: the protocol's published value)")
    for key, flag in _PROTOCOL_PARAM_FLAGS.items():
        parser.add_argument(flag, dest=key, type=float, default=None)


def _add_output_flags(parser):
    parser.add_argument("--h", type=float, default=0.05, help="integration step")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap on parallel workers (results independent of it)")
    parser.add_argument("--out", default=None,
                        help="output base path (writes <out>.csv/.json + manifest)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topochain",
        description="State transfer in time-modulated topological chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="propagate |1> and record populations")
    _add_model_flags(p)
    _add_output_flags(p)
    p.add_argument("--samples", type=int, default=201,
                   help="population snapshots along the run")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("ensemble", help="disorder sweep with statistics")
    _add_model_flags(p)
    _add_output_flags(p)
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--delta-list", default=None,
                      help="comma-separated disorder strengths")
    grid.add_argument("--delta-max", type=float, default=None,
                      help="top of an evenly spaced strength grid")
    p.add_argument("--delta-steps", type=int, default=6,
                   help="number of grid points up to --delta-max")
    p.add_argument("--realizations", type=int, default=200)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("bands", help="instantaneous spectrum over the window")
    _add_model_flags(p)
    _add_output_flags(p)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_bands)

    p = sub.add_parser("sweep-period", help="transfer probability vs period")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t-min", type=float, default=30.0)
    p.add_argument("--t-max", type=float, default=80.0)
    p.add_argument("--t-step", type=float, default=1.0)
    _add_output_flags(p)
    p.set_defaults(func=cmd_sweep_period)

    p = sub.add_parser("phase-gate", help="the compensating receiver gate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_phase_gate)

    return parser


def _configure_threads(n):
    if n is None:
        return
    if n < 1:
        raise ConfigurationError(f"--threads must be >= 1, got {n}")
    if "numba" in sys.modules:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    else:
        os.environ["NUMBA_NUM_THREADS"] = str(n)


def main(argv=None) -> int:
    # The pure-python work queue needs no external runtime and keeps
    # results identical for any worker count.
    os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _configure_threads(getattr(args, "threads", None))
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
