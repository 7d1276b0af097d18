"""Command-line pipeline: simulate, fit, eval, predict, ppc, scatter.

Every command is a pure function of its input files, flags, and seed;
re-running writes byte-identical files.  Each run drops a run_meta.json with
the resolved flags next to its outputs.

Kernel decays may be given as explicit rates in the data's time units
("1,5,25") or as physical time scales ("hour,day,week").  Time scales are
converted through --duration, the real-world duration of the dataset, so the
decays are exact on rescaled timestamps.  The same conversion backs
--window auto:14d for link prediction.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import KernelSpec, SlopeConstraint, build_pair_histories
from .errors import LshError, ValidationError
from .estimation import FitConfig, FitResult, fit
from .evaluation import (
    SplitSpec,
    dynamic_link_prediction,
    ppc_ensemble,
    ppc_stats,
    split_events,
    test_loglik_per_event,
)
from .figures import save_auc_boxplot, save_nll_trace, save_ppc_histograms
from .io import (
    DatasetManifest,
    EVAL_SCHEMA,
    FIT_SCHEMA,
    read_events,
    read_fit,
    write_auc_table,
    write_events,
    write_fit,
    write_ppc_samples,
    write_results,
    emit_latent_scatter,
)
from .likelihood import IntegrationMode
from .simulation import GenConfig, sample_params, simulate_network
from ._parallel import default_threads

_SECONDS = {
    "s": 1.0,
    "min": 60.0,
    "h": 3600.0,
    "d": 86400.0,
    "w": 604800.0,
    "mo": 86400.0 * 365.25 / 12.0,
    "y": 86400.0 * 365.25,
}
_SCALE_NAMES = {"second": 1.0, "minute": 60.0, "hour": 3600.0, "day": 86400.0, "week": 604800.0}


def parse_timespan(text: str) -> float:
    """Parse '14d', '8mo', '3600' (bare seconds) into seconds."""
    text = text.strip()
    for suffix in sorted(_SECONDS, key=len, reverse=True):
        if text.endswith(suffix):
            return float(text[: -len(suffix)]) * _SECONDS[suffix]
    return float(text)


def resolve_kernel(spec: str, horizon_units: float, duration: str | None) -> KernelSpec:
    """Build a KernelSpec from '--kernel' and the unit-conversion context."""
    tokens = [t.strip() for t in spec.split(",") if t.strip()]
    if not tokens:
        raise ValidationError("kernel spec is empty")
    try:
        betas = [float(t) for t in tokens]
    except ValueError:
        if duration is None:
            raise ValidationError(
                "named kernel time scales require --duration to convert to data units")
        duration_s = parse_timespan(duration)
        scales_s = [_SCALE_NAMES.get(t) or parse_timespan(t) for t in tokens]
        betas = [duration_s / (horizon_units * s) for s in scales_s]
    weights = np.full(len(betas), 1.0 / len(betas))
    return KernelSpec(betas=np.asarray(betas), weights=weights)


def resolve_window(spec: str, horizon_units: float, duration: str | None) -> float:
    if spec.startswith("auto:"):
        if duration is None:
            raise ValidationError("--window auto:... requires --duration")
        return horizon_units * parse_timespan(spec[5:]) / parse_timespan(duration)
    return float(spec)


def _load_events(args):
    manifest = DatasetManifest(
        path=args.events,
        delimiter=args.delimiter,
        rescale_target=args.rescale,
    )
    return read_events(manifest, horizon=args.horizon)


def _write_meta(out_dir: Path, command: str, args: argparse.Namespace, outputs: list) -> None:
    # the output directory is not part of the run's identity
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    meta = {
        "command": command,
        "flags": flags,
        "version": __version__,
        "schemas": {"fit": FIT_SCHEMA, "results": EVAL_SCHEMA},
        "outputs": sorted(str(o) for o in outputs),
    }
    (out_dir / "run_meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n",
                                           encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    out = _out_dir(args)
    kernel = resolve_kernel(args.kernel, args.horizon, None)
    sig_z, sig_d, sig_g = (float(x) for x in args.sigmas.split(","))
    config = GenConfig(
        n_nodes=args.nodes, dimension=args.dim, horizon=args.horizon, kernel=kernel,
        theta1=args.theta1, theta2=args.theta2, alpha1=args.alpha1, alpha2=args.alpha2,
        sigma_z=sig_z, sigma_delta=sig_d, sigma_gamma=sig_g, seed=args.seed,
        max_events_per_pair=args.max_events,
    )
    params = sample_params(config)
    events = simulate_network(config, params=params, threads=args.threads)
    write_events(out / "events.csv", events)
    write_fit(out / "fit.json", FitResult(params=params, trace=[], converged=True,
                                          outer_iters=0), kernel, config=None)
    _write_meta(out, "simulate", args, ["events.csv", "fit.json"])
    print(f"simulated {len(events)} events over {args.nodes} nodes -> {out}")
    return 0


def cmd_fit(args):
    out = _out_dir(args)
    events, _ = _load_events(args)
    kernel = resolve_kernel(args.kernel, events.horizon, args.duration)
    s_theta, s_z = (int(x) for x in args.steps.split(","))
    config = FitConfig(
        dimension=args.dim,
        constraint={"pos": SlopeConstraint.POSITIVE, "neg": SlopeConstraint.NEGATIVE,
                    "free": SlopeConstraint.UNCONSTRAINED}[args.slope],
        s_theta=s_theta, s_z=s_z, max_outer=args.max_outer, rel_tol=args.tol,
        seed=args.seed, mode=IntegrationMode(args.mode),
    )
    result = fit(events, kernel, config, threads=args.threads)
    write_fit(out / "fit.json", result, kernel, config)
    with open(out / "trace.csv", "w", encoding="utf-8") as fh:
        fh.write("outer,nll\n")
        for i, v in result.trace:
            fh.write(f"{i},{v!r}\n")
    save_nll_trace(result.trace, out / "nll_trace.svg")
    _write_meta(out, "fit", args, ["fit.json", "trace.csv", "nll_trace.svg"])
    final = result.trace[-1][1] if result.trace else float("nan")
    print(f"fit {'converged' if result.converged else 'stopped'} after "
          f"{result.outer_iters} outer iterations, NLL {final:.4f} -> {out}")
    return 0


def cmd_eval(args):
    out = _out_dir(args)
    events, _ = _load_events(args)
    result, kernel, _ = read_fit(args.fit)
    train, test, split_time = split_events(events, SplitSpec(args.train_frac))
    value = test_loglik_per_event(result.params, kernel, train, test, events.horizon)
    record = {
        "test_loglik_per_event": value,
        "n_train": len(train),
        "n_test": len(test),
        "split_time": split_time,
        "horizon": events.horizon,
    }
    write_results(out / "results.json", record)
    _write_meta(out, "eval", args, ["results.json"])
    print(f"test log-likelihood per event: {value:.4f} ({len(test)} test events) -> {out}")
    return 0


def cmd_predict(args):
    out = _out_dir(args)
    events, _ = _load_events(args)
    result, kernel, _ = read_fit(args.fit)
    _, _, split_time = split_events(events, SplitSpec(args.train_frac))
    window = resolve_window(args.window, events.horizon, args.duration)
    lp = dynamic_link_prediction(
        result.params, kernel, events, split_time, events.horizon,
        window_len=window, n_points=args.points, seed=args.seed, threads=args.threads,
    )
    record = {
        "mean_auc": lp.mean_auc,
        "std_auc": lp.std_auc,
        "n_points": args.points,
        "n_skipped": lp.n_skipped,
        "window_len": window,
        "split_time": split_time,
    }
    write_results(out / "results.json", record)
    write_auc_table(out / "auc_points.csv", lp)
    save_auc_boxplot(lp, out / "auc_boxplot.svg")
    _write_meta(out, "predict", args, ["results.json", "auc_points.csv", "auc_boxplot.svg"])
    print(f"dynamic link prediction AUC {lp.mean_auc:.3f} (sd {lp.std_auc:.3f}, "
          f"window {window:g}, skipped {lp.n_skipped}) -> {out}")
    return 0


def cmd_ppc(args):
    out = _out_dir(args)
    events, _ = _load_events(args)
    result, kernel, _ = read_fit(args.fit)
    actual = ppc_stats(events)
    ensemble = ppc_ensemble(
        result.params, kernel, events.horizon, n_sims=args.sims, seed=args.seed,
        actual=actual, threads=args.threads, max_events_per_pair=args.max_events,
    )
    record = {
        "n_sims": args.sims,
        "stats": {
            name: {"actual": s.actual, "mean": s.mean, "samples": s.samples}
            for name, s in ensemble.items()
        },
    }
    write_results(out / "results.json", record)
    write_ppc_samples(out / "ppc_samples.csv", ensemble)
    figures = save_ppc_histograms(ensemble, out)
    _write_meta(out, "ppc", args,
                ["results.json", "ppc_samples.csv"] + [f.name for f in figures])
    lines = ", ".join(f"{k}={v.mean:.3g}" for k, v in ensemble.items())
    print(f"ppc means over {args.sims} simulations: {lines} -> {out}")
    return 0


def cmd_scatter(args):
    out = _out_dir(args)
    result, _, _ = read_fit(args.fit)
    params = result.params
    labels = None
    highlights = []
    if args.events:
        events, label_map = _load_events(args)
        inverse = {i: lab for lab, i in label_map.items()}
        labels = [str(inverse.get(i, i)) for i in range(params.n_nodes)]
        hist = build_pair_histories(events)
        by_count = sorted(hist.pairs(), key=lambda p: (-len(hist.times(*p)), p))
        highlights = by_count[: args.top_edges]
    emit_latent_scatter(params.Z, labels=labels, highlights=highlights,
                        path=out / "scatter.svg")
    _write_meta(out, "scatter", args, ["scatter.svg"])
    print(f"latent scatter with {len(highlights)} highlighted edges -> {out}")
    return 0


def _add_common_io(p, with_fit=True):
    p.add_argument("--events", required=True, help="events CSV (sender,receiver,time)")
    if with_fit:
        p.add_argument("--fit", required=True, help="fit.json from `lsh fit`")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--rescale", nargs="?", type=float, const=1000.0, default=None,
                   help="affinely map timestamps onto [0, TARGET] (default 1000)")
    p.add_argument("--horizon", type=float, default=None,
                   help="observation window end (default: last event time)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsh",
        description="Fit, simulate, and evaluate latent-space Hawkes relational-event models.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic network")
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--theta1", type=float, default=1.0)
    p.add_argument("--theta2", type=float, default=-3.2)
    p.add_argument("--alpha1", type=float, default=0.01)
    p.add_argument("--alpha2", type=float, default=0.02)
    p.add_argument("--sigmas", default="1,1,1", help="sigma_z,sigma_delta,sigma_gamma")
    p.add_argument("--kernel", default="1,5,25", help="decay rates in simulation time units")
    p.add_argument("--max-events", type=int, default=10_000_000,
                   help="per-pair acceptance cap before declaring instability")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="estimate parameters by alternating minimization")
    _add_common_io(p, with_fit=False)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--slope", choices=("pos", "neg", "free"), default="free")
    p.add_argument("--kernel", default="hour,day,week",
                   help="decay rates ('1,5,25') or time scales ('hour,day,week')")
    p.add_argument("--duration", default=None,
                   help="real-world duration of the data (e.g. 243d), for named time scales")
    p.add_argument("--steps", default="2,2", help="inner iterations per block: s_theta,s_z")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-outer", type=int, default=500)
    p.add_argument("--mode", choices=[m.value for m in IntegrationMode], default="horizon")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="held-out log-likelihood per event")
    _add_common_io(p)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="dynamic link prediction AUC")
    _add_common_io(p)
    p.add_argument("--train-frac", type=float, default=0.7)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--window", default="auto:14d",
                   help="window length in data units, or auto:<timespan> via --duration")
    p.add_argument("--duration", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ppc", help="posterior predictive checks on network statistics")
    _add_common_io(p)
    p.add_argument("--sims", type=int, default=15)
    p.add_argument("--max-events", type=int, default=10_000_000)
    p.set_defaults(func=cmd_ppc)

    p = sub.add_parser("scatter", help="2-D latent position plot")
    p.add_argument("--fit", required=True)
    p.add_argument("--events", default=None, help="events CSV for labels and edge highlights")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--rescale", nargs="?", type=float, const=1000.0, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--top-edges", type=int, default=10,
                   help="highlight this many most-frequent ordered pairs")
    p.set_defaults(func=cmd_scatter)

    for name, sp in sub.choices.items():
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=default_threads(),
                        help="worker threads; results are identical for any value")
        sp.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LshError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
