"""Command line entry points: sample, fit, experiment, rates.

Exit codes: 0 success, 1 configuration error, 2 input/output error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .discretize import discretized_fit, grid_from_spec, project_to_grid
from .estimator import FitConfig, coordinate_descent_fit, estimate_mu_bar
from .harness import STUDIES, ConfigError, _line_of, config_from_dict, run_experiment
from .metrics import RATE_KINDS, error_report, rate_predictor
from .model import NodeParams
from .sampler import KINDS, ParamSpec, derive_seed, gen_params, read_edgelist, sample_network, write_edgelist

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _read_json(path):
    """Parse a JSON file, returning (object, text) or raising ConfigError with a line number."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    return obj, text


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out_dir, name: str):
    if out_dir is None:
        sys.stdout.write(text)
    else:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)


def cmd_sample(args) -> int:
    raw, text = ({}, "") if args.config is None else _read_json(args.config)
    raw = dict(raw)
    if args.kind is not None:
        raw["kind"] = args.kind
    if args.n is not None:
        raw["n"] = args.n
    allowed = {f.name for f in fields(ParamSpec)}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"{args.config}:{_line_of(text, key)}: unknown key {key!r}")
    try:
        spec = ParamSpec(**raw)
        params, globals_ = gen_params(spec, derive_seed(args.seed, 1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config or '<args>'}:1: {exc}") from None
    network = sample_network(params, globals_, derive_seed(args.seed, 2))
    truth = {"alpha": params.alpha.tolist(), "beta": params.beta.tolist(),
             "rho": globals_.rho, "mu": globals_.mu, "seed": args.seed}
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_edgelist(network, out / "network.txt")
    (out / "truth.json").write_text(_dump(truth))
    return EXIT_OK


def _fit_config(args, truth):
    raw, text = ({}, "") if args.config is None else _read_json(args.config)
    raw = dict(raw)
    grid_spec = raw.pop("grid", None)
    init_kind = raw.pop("init", "zeros")
    if init_kind not in ("zeros", "truth"):
        raise ConfigError(f"{args.config}:{_line_of(text, 'init')}: init must be 'zeros' or 'truth'")
    allowed = {f.name for f in fields(FitConfig)}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"{args.config}:{_line_of(text, key)}: unknown key {key!r}")
    if "mu" not in raw and truth is not None:
        raw["mu"] = truth["mu"]
    try:
        cfg = FitConfig(**raw)
    except (TypeError, ValueError) as exc:
        key = next((k for k in raw if k in str(exc)), "")
        raise ConfigError(f"{args.config or '<args>'}:{_line_of(text, key) if key else 1}: {exc}") from None
    if init_kind == "truth" and truth is None:
        raise ConfigError(f"{args.config}:{_line_of(text, 'init')}: init 'truth' needs --truth")
    return cfg, grid_spec, init_kind


def cmd_fit(args) -> int:
    network = read_edgelist(args.network)
    truth = None
    if args.truth is not None:
        truth, _ = _read_json(args.truth)
        for key in ("alpha", "beta", "rho", "mu"):
            if key not in truth:
                raise ConfigError(f"{args.truth}:1: missing {key!r}")
    cfg, grid_spec, init_kind = _fit_config(args, truth)
    n = network.n
    if init_kind == "truth":
        init = NodeParams(np.asarray(truth["alpha"], float), np.asarray(truth["beta"], float))
        rho0 = float(truth["rho"])
    else:
        init = NodeParams(np.zeros(n), np.zeros(n))
        rho0 = 0.0
    if args.discretize or grid_spec is not None:
        mu = estimate_mu_bar(network) if cfg.mu == "plugin" else cfg.mu
        try:
            grid = grid_from_spec(grid_spec or {"h": "optimal"}, n, mu)
        except ValueError as exc:
            raise ConfigError(f"{args.config or '<args>'}:1: {exc}") from None
        clipped = NodeParams(np.clip(init.alpha, -grid.B, grid.B), np.clip(init.beta, -grid.B, grid.B))
        result = discretized_fit(network, (project_to_grid(clipped, grid), rho0), grid, cfg)
        payload = result.to_dict()
        payload["grid"] = grid.to_dict()
    else:
        result = coordinate_descent_fit(network, (init, rho0), cfg)
        payload = result.to_dict()
    _emit(_dump(payload), args.out, "fit.json")
    if truth is not None:
        true_params = NodeParams(np.asarray(truth["alpha"], float), np.asarray(truth["beta"], float))
        est = result.params.shifted(result.params.alpha[0] - true_params.alpha[0])
        report = error_report(est, true_params, result.rho, float(truth["rho"]))
        _emit(_dump(report.to_dict()), args.out, "report.json")
    return EXIT_OK


def cmd_experiment(args) -> int:
    raw, text = ({}, "") if args.config is None else _read_json(args.config)
    if "study" in raw and raw["study"] != args.study:
        raise ConfigError(f"{args.config}:{_line_of(text, 'study')}: study {raw['study']!r} "
                          f"contradicts command line study {args.study!r}")
    raw = dict(raw)
    raw.pop("study", None)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    if args.out is not None:
        raw["output_dir"] = args.out
    if args.discretize and raw.get("grid") is None:
        raw["grid"] = {"h": "optimal"}
    config = config_from_dict(raw, args.study, source=(str(args.config or "<args>"), text))
    run_experiment(config, jobs=args.jobs)
    return EXIT_OK


def cmd_rates(args) -> int:
    kinds = [args.kind] if args.kind else list(RATE_KINDS)
    lines = ["# shape only: unit constants, compare slopes not levels", "kind\tn\tmu\tvalue"]
    try:
        for kind in kinds:
            for n in args.n:
                lines.append(f"{kind}\t{n}\t{args.mu!r}\t{rate_predictor(kind, n, args.mu)!r}")
    except ValueError as exc:
        raise ConfigError(f"<args>:1: {exc}") from None
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def _size(text):
    v = float(text)
    return int(v) if v.is_integer() else v


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="expnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw parameters and a network")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--config", help="JSON ParamSpec fields")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--out", help="directory for network.txt and truth.json")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a network edge list")
    p.add_argument("network")
    p.add_argument("--truth", help="truth.json sidecar; adds report.json")
    p.add_argument("--config", help="JSON FitConfig fields, optional 'grid' and 'init'")
    p.add_argument("--seed", type=_u64, default=0, help="accepted for symmetry; fitting is deterministic")
    p.add_argument("--out")
    p.add_argument("--discretize", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("experiment", help="run a simulation study")
    p.add_argument("study", choices=STUDIES)
    p.add_argument("--config")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--discretize", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("rates", help="tabulate rate shapes")
    p.add_argument("--kind", choices=RATE_KINDS)
    p.add_argument("--n", type=_size, nargs="+", required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.set_defaults(func=cmd_rates)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
