"""Replicated simulation studies with seed-replayable CSV/JSON output.

Three preset studies exist:

* ``normality``: dense groups, Newton-Raphson fits started at the truth, and
  the seven scaled-error statistics per replication;
* ``consistency``: sparse networks with mu = 10 n^(-2/3), gradient fits,
  mean-square and uniform error bounds;
* ``overfit``: sparse networks fitted from one perturbed start under several
  outer tolerances e, compared pairwise.

The parameter draw is fixed per (group, n) cell; replication r of size n uses
network seed ``derive_seed(master_seed, n, r)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import stats

from .discretize import discretized_fit, grid_from_spec, project_to_grid
from .estimator import FitConfig, coordinate_descent_fit, fit_statistics
from .metrics import RATE_KINDS, error_report, rate_predictor
from .model import NodeParams
from .sampler import KINDS, ParamSpec, derive_seed, gen_params, perturb_params, sample_network, sparse_mu

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "study", "group", "n", "e", "rep", "seed", "converged", "outer_iters", "rho_hat",
    "rho_err_sq", "delta_alpha", "delta_beta", "mse_bound", "uniform_bound", "adj_mse",
    "adj_uniform", "stat_a2", "stat_amid", "stat_an", "stat_b1", "stat_bmid", "stat_bn",
    "stat_rho",
)
STAT_COLUMNS = CSV_COLUMNS[16:]
ERROR_COLUMNS = ("rho_err_sq", "mse_bound", "uniform_bound", "adj_mse", "adj_uniform")
STUDIES = ("normality", "consistency", "overfit", "custom")

_PARAM_TAG = 1
_INIT_TAG = 2


class ConfigError(ValueError):
    """Malformed experiment or fit configuration."""


@dataclass
class ExperimentConfig:
    study: str
    groups: list
    n_list: list
    replications: int
    fit: FitConfig
    master_seed: int = 0
    output_dir: str = "results"
    e_values: Optional[list] = None
    init_perturbation: float = 0.0
    grid: Optional[dict] = None
    B: float = 1.0

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ConfigError(f"unknown study {self.study!r}")
        for g in self.groups:
            if g not in KINDS or g == "explicit":
                raise ConfigError(f"unknown parameter group {g!r}")
        if not self.n_list or any(int(n) < 2 for n in self.n_list):
            raise ConfigError("n_list must hold sizes >= 2")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.init_perturbation < 0:
            raise ConfigError("init_perturbation must be non-negative")
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")

    @property
    def tolerances(self) -> list:
        return list(self.e_values) if self.e_values else [self.fit.outer_tol]

    @classmethod
    def preset(cls, study: str, **overrides) -> "ExperimentConfig":
        if study == "normality":
            base = dict(groups=["group1", "group2", "group3"], n_list=[100, 200, 400],
                        replications=200, fit=FitConfig.newton_raphson())
        elif study == "consistency":
            base = dict(groups=["sparse_uniform"], n_list=[400, 1400, 5000], replications=30,
                        fit=FitConfig.gradient_ascent(0.05))
        elif study == "overfit":
            base = dict(groups=["sparse_uniform"], n_list=[1000, 2000], replications=30,
                        fit=FitConfig.gradient_ascent(0.08), e_values=[0.08, 0.02],
                        init_perturbation=0.5)
        elif study == "custom":
            base = dict(groups=["group1"], n_list=[100], replications=10,
                        fit=FitConfig.newton_raphson())
        else:
            raise ConfigError(f"unknown study {study!r}")
        base.update(overrides)
        return cls(study=study, **base)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit"] = asdict(self.fit)
        # the destination is not part of the experiment; leaving it out keeps outputs relocatable
        d.pop("output_dir")
        return d


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return 1


def load_config(path, study: Optional[str] = None) -> ExperimentConfig:
    """Read a JSON experiment file on top of the study preset.

    Errors name the offending line as ``path:line: message``.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    return config_from_dict(raw, study, source=(str(path), text))


def config_from_dict(raw: dict, study: Optional[str] = None, source=("<config>", "")) -> ExperimentConfig:
    path, text = source
    raw = dict(raw)
    study = study or raw.pop("study", "custom")
    raw.pop("study", None)
    allowed = {f.name for f in fields(ExperimentConfig)} - {"study"}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"{path}:{_line_of(text, key)}: unknown key {key!r}")
    try:
        if "fit" in raw:
            fit_raw = raw.pop("fit")
            if not isinstance(fit_raw, dict):
                raise ConfigError(f"{path}:{_line_of(text, 'fit')}: 'fit' must be an object")
            base = ExperimentConfig.preset(study).fit
            unknown = set(fit_raw) - {f.name for f in fields(FitConfig)}
            if unknown:
                key = sorted(unknown)[0]
                raise ConfigError(f"{path}:{_line_of(text, key)}: unknown fit key {key!r}")
            try:
                raw["fit"] = replace(base, **fit_raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{_line_of(text, 'fit')}: {exc}") from None
        return ExperimentConfig.preset(study, **raw)
    except ConfigError as exc:
        if str(exc).startswith(path):
            raise
        key = next((k for k in raw if k in str(exc)), "study")
        raise ConfigError(f"{path}:{_line_of(text, key)}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}:1: {exc}") from None


@dataclass(frozen=True)
class _Task:
    config: ExperimentConfig
    group: str
    n: int
    rep: int


def cell_truth(config: ExperimentConfig, group: str, n: int):
    spec = ParamSpec(group, n, B=config.B)
    seed = derive_seed(config.master_seed, _PARAM_TAG, KINDS.index(group), n)
    return gen_params(spec, seed)


def cell_init(config: ExperimentConfig, group: str, n: int, truth: NodeParams) -> NodeParams:
    if config.init_perturbation == 0:
        return truth
    seed = derive_seed(config.master_seed, _INIT_TAG, KINDS.index(group), n)
    return perturb_params(truth, config.init_perturbation, seed)


def _pinned(params: NodeParams) -> NodeParams:
    # representative of the shift class with alpha_1 = 0
    return params.shifted(params.alpha[0])


def run_replication(task: _Task) -> list:
    """Rows (one per tolerance e) for one replication of one cell."""
    cfg = task.config
    truth, globals_ = cell_truth(cfg, task.group, task.n)
    init = cell_init(cfg, task.group, task.n, truth)
    seed = derive_seed(cfg.master_seed, task.n, task.rep)
    network = sample_network(truth, globals_, seed)
    fit_mu = cfg.fit.mu if cfg.fit.mu == "plugin" else globals_.mu
    rows = []
    for e in cfg.tolerances:
        fit_cfg = replace(cfg.fit, outer_tol=e, mu=fit_mu)
        row = {"study": cfg.study, "group": task.group, "n": task.n, "e": e, "rep": task.rep, "seed": seed}
        try:
            if cfg.grid is not None:
                grid = grid_from_spec({"B": cfg.B, **cfg.grid}, task.n, globals_.mu)
                clipped = NodeParams(np.clip(init.alpha, -grid.B, grid.B), np.clip(init.beta, -grid.B, grid.B))
                result = discretized_fit(network, (project_to_grid(clipped, grid), globals_.rho), grid, fit_cfg)
            else:
                result = coordinate_descent_fit(network, (init, globals_.rho), fit_cfg)
        except (ValueError, FloatingPointError) as exc:
            logger.warning("fit failed for %s n=%d rep=%d: %s", task.group, task.n, task.rep, exc)
            row.update(converged=False)
            rows.append(row)
            continue
        est = _pinned(result.params)
        report = error_report(est, truth, result.rho, globals_.rho)
        row.update(
            converged=result.converged,
            outer_iters=result.outer_iters,
            rho_hat=result.rho,
            rho_err_sq=report.rho_error_sq,
            delta_alpha=report.delta_alpha,
            delta_beta=report.delta_beta,
            mse_bound=report.mse_bound,
            uniform_bound=report.uniform_bound,
            adj_mse=report.shift_adjusted_mse,
            adj_uniform=report.shift_adjusted_uniform,
        )
        if cfg.study == "normality":
            pinned_result = replace(result, params=est)
            row.update(fit_statistics(pinned_result, (truth, globals_.rho)))
        rows.append(row)
    return rows


def _tasks(config: ExperimentConfig):
    return [_Task(config, g, int(n), r) for g in config.groups for n in config.n_list
            for r in range(config.replications)]


def collect_rows(config: ExperimentConfig, jobs: int = 1) -> list:
    """Run every replication; the row order never depends on ``jobs``."""
    tasks = _tasks(config)
    if jobs <= 1:
        batches = [run_replication(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(run_replication, tasks, chunksize=1))
    return [row for batch in batches for row in batch]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_rows(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(v):
    if v is None or v == "":
        return None
    return float(v)


def _describe(values) -> dict:
    x = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    return {"median": float(med), "mean": float(x.mean()), "iqr": float(q3 - q1), "count": int(x.size)}


def qq_correlation(values) -> float:
    """Correlation of the sorted sample with standard normal quantiles."""
    x = np.asarray(values, dtype=float)
    if x.size < 3 or np.ptp(x) == 0:
        return float("nan")
    return float(stats.probplot(x, dist="norm")[1][2])


def qq_pairs(values):
    """(theoretical normal quantile, sorted sample) pairs, Filliben positions."""
    osm, osr = stats.probplot(np.asarray(values, dtype=float), dist="norm", fit=False)
    return list(zip(osm.tolist(), osr.tolist()))


def _cell_mu(group: str, n: int) -> float:
    return sparse_mu(n) if group == "sparse_uniform" else 1.0


def summarize(rows) -> dict:
    """Per-(group, n, e) medians, means and IQRs of the error columns, normal Q-Q
    correlations of the statistics, rate-shape overlays, and paired differences
    across tolerances within each (group, n)."""
    if not rows:
        raise ValueError("nothing to summarize")
    cells = {}
    for row in rows:
        key = (str(row["group"]), int(row["n"]), float(row["e"]))
        cells.setdefault(key, []).append(row)
    out = {"cells": [], "paired": []}
    for (group, n, e), cell_rows in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1], -kv[0][2])):
        entry = {"group": group, "n": n, "e": e, "replications": len(cell_rows),
                 "converged": sum(str(r.get("converged")).lower() == "true" for r in cell_rows)}
        for col in ERROR_COLUMNS + STAT_COLUMNS:
            vals = [_num(r.get(col)) for r in cell_rows]
            vals = [v for v in vals if v is not None]
            if vals:
                entry[col] = _describe(vals)
                if col in STAT_COLUMNS:
                    entry[col]["qq_corr"] = qq_correlation(vals)
        mu = _cell_mu(group, n)
        entry["rate_shape_only"] = {k: rate_predictor(k, n, mu) for k in RATE_KINDS}
        out["cells"].append(entry)
    out["paired"] = _paired_differences(cells)
    return out


def _paired_differences(cells) -> list:
    by_size = {}
    for (group, n, e), cell_rows in cells.items():
        by_size.setdefault((group, n), {})[e] = {int(r["rep"]): r for r in cell_rows}
    result = []
    for (group, n), per_e in sorted(by_size.items()):
        if len(per_e) < 2:
            continue
        base_e = max(per_e)
        base = per_e[base_e]
        for e in sorted(per_e, reverse=True):
            if e == base_e:
                continue
            entry = {"group": group, "n": n, "baseline_e": base_e, "e": e}
            for col in ("mse_bound", "uniform_bound", "adj_mse", "adj_uniform"):
                pairs = [(_num(per_e[e][r].get(col)), _num(base[r].get(col))) for r in per_e[e] if r in base]
                pairs = [(a, b) for a, b in pairs if a is not None and b is not None]
                if not pairs:
                    continue
                diffs = np.array([a - b for a, b in pairs])
                base_median = float(np.median([b for _, b in pairs]))
                med = float(np.median(diffs))
                entry[col] = {
                    "median_diff": med,
                    "median_abs_diff": float(np.median(np.abs(diffs))),
                    "baseline_median": base_median,
                    "relative_abs_diff": float(np.median(np.abs(diffs)) / base_median) if base_median else None,
                    "direction": "lower" if med < 0 else "higher" if med > 0 else "equal",
                }
            result.append(entry)
    return result


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> dict:
    """Run the study and write ``rows.csv``, ``summary.json`` and ``config.json``
    (plus ``qq.csv`` for the normality study) into ``config.output_dir``."""
    rows = collect_rows(config, jobs)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rows.csv").write_text(rows_to_csv(rows))
    summary = summarize(rows)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    if config.study == "normality":
        (out / "qq.csv").write_text(_qq_csv(rows))
    return summary


def _qq_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "n", "stat", "k", "theoretical", "empirical"])
    cells = {}
    for row in rows:
        cells.setdefault((row["group"], int(row["n"])), []).append(row)
    for (group, n), cell_rows in sorted(cells.items()):
        for col in STAT_COLUMNS:
            vals = [_num(r.get(col)) for r in cell_rows]
            vals = [v for v in vals if v is not None]
            if len(vals) < 2:
                continue
            for k, (th, em) in enumerate(qq_pairs(vals), start=1):
                writer.writerow([group, n, col, k, repr(th), repr(em)])
    return buf.getvalue()
