"""Command-line front end: simulation studies, real-data feature selection
with split reproducibility, limit-law sweeps, mismatch reports, and
discrete-posterior overlap.

Every subcommand is deterministic given its configuration and seed, and
writes plot-ready CSV/JSON files plus a manifest describing their schemas;
``schema-check`` re-validates a result directory against the manifest.

Exit codes: 0 success, 1 usage error, 2 data error, 3 resource-guard
rejection.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import core
from .asymptotics import (
    STRONG_FAVOR_THRESHOLD,
    KModelLaw,
    TwoModelLaw,
    mvn_cdf_at_zero,
    reduce_to_contrasts,
    sample_ubb_K,
    std_limit_bernoulli_2,
    three_model_scenarios,
    ubb_cdf,
    ubb_density,
)
from .compare import average_posteriors, hpd_overlap, load_posterior_samples, overlap_ci
from .core import BootstrapConfig, bagged_model_posterior, standard_model_posterior
from .errors import (
    BayesBagError,
    IngestionError,
    InvalidArgumentError,
    ResourceLimitError,
)
from .linreg import (
    NIGHyperparams,
    RegressionDataset,
    enumerate_models,
    log_priors,
    make_evaluator,
    model_log_marginals,
    param_moments_from_stats,
    pips,
    weighted_stats,
)
from .mismatch import mismatch_index_proj
from .simgen import SimConfig, sample_dataset

log = logging.getLogger("bayesbag")

SCHEMA_VERSION = 1

# column kinds: int, float, str; "float?" permits an empty cell
SCHEMAS = {
    "pips-v1": [("replicate", "int"), ("method", "str"), ("component", "int"), ("pip", "float")],
    "pip-summary-v1": [
        ("method", "str"),
        ("component", "int"),
        ("pip_mean", "float"),
        ("pip_var", "float"),
        ("frac_mid", "float"),
    ],
    "pips-full-v1": [("method", "str"), ("component", "int"), ("pip", "float")],
    "pips-splits-v1": [
        ("split", "int"),
        ("method", "str"),
        ("component", "int"),
        ("pip", "float"),
    ],
    "reproducibility-v1": [
        ("method", "str"),
        ("component", "int"),
        ("pip_min", "float"),
        ("pip_max", "float"),
        ("pip_range", "float"),
    ],
    "two-model-events-v1": [
        ("delta", "float"),
        ("c", "float"),
        ("p_std_wrong", "float"),
        ("threshold", "float"),
        ("p_bagged_below", "float"),
    ],
    "two-model-density-v1": [("delta", "float"), ("c", "float"), ("u", "float"), ("density", "float")],
    "three-model-curves-v1": [
        ("scenario", "str"),
        ("value", "float"),
        ("c", "float"),
        ("p_std_wrong", "float"),
        ("p_std_wrong_se", "float"),
        ("threshold", "float"),
        ("frac_bagged_below", "float"),
        ("frac_bagged_below_se", "float"),
    ],
    "checkpoint-v1": [("name", "str"), ("value", "float")],
    "overlap-v1": [
        ("label_a", "str"),
        ("label_b", "str"),
        ("level", "float"),
        ("mass_a", "float"),
        ("mass_b", "float"),
        ("mass_avg", "float"),
        ("count", "int"),
        ("ci_lo", "float?"),
        ("ci_hi", "float?"),
    ],
}

MISMATCH_REPORT_SCHEMA = "mismatch-report-v1"
MISMATCH_REPORT_KEYS = ("overall", "per_coordinate", "b", "m", "seed", "n", "d")

# generated datasets: columns z1..zD then y, every cell a float
DATASET_SCHEMA = "dataset-v1"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(value) -> str:
    return format(float(value), ".12g")


def _child_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _child_seed(seed: int, *key: int) -> int:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return int(seq.generate_state(1, np.uint64)[0])


def _resolve_m(token: str, n: int) -> int:
    """Bootstrap size flag: a positive integer, or the literal "N" meaning
    the size of the dataset (or split) being analyzed."""
    if token.strip().upper() == "N":
        return n
    try:
        m = int(token)
    except ValueError:
        raise InvalidArgumentError(f"--M must be a positive integer or 'N', got {token!r}") from None
    if m < 1:
        raise InvalidArgumentError(f"--M must be >= 1, got {m}")
    return m


def _parse_grid(text: str) -> np.ndarray:
    """Grid syntax: comma-separated values, or start:stop:step (inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidArgumentError(f"grid ranges need start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise InvalidArgumentError("grid step must be positive")
        return np.arange(start, stop + 0.5 * step, step)
    try:
        return np.array([float(p) for p in text.split(",") if p.strip() != ""])
    except ValueError:
        raise InvalidArgumentError(f"cannot parse grid {text!r}") from None


def _read_config_file(path: str) -> dict[str, str]:
    """Plain key=value configuration, '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise IngestionError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# config keys may use the flag spellings; map them onto argparse dests
_CONFIG_ALIASES = {"D": "d", "N": "n", "B": "b_reps", "M": "m_size", "lambda": "lam"}


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill unset options from --config; explicit flags win."""
    if not getattr(args, "config", None):
        return
    values = _read_config_file(args.config)
    for key, raw in values.items():
        for candidate in (_CONFIG_ALIASES.get(key), key, key.lower()):
            if candidate is not None and hasattr(args, candidate):
                if getattr(args, candidate) is None:
                    setattr(args, candidate, raw)
                break
        else:
            raise _UsageError(f"unknown config key {key!r}")


def _coerce(args: argparse.Namespace, name: str, kind, default=None):
    value = getattr(args, name, None)
    if value is None:
        return default
    if isinstance(value, str) and kind is not str:
        try:
            if kind is bool:
                return value.lower() in ("1", "true", "yes", "on")
            return kind(value)
        except ValueError:
            raise _UsageError(f"option {name} expects {kind.__name__}, got {value!r}") from None
    return value


# ---------------------------------------------------------------------------
# result files


def _write_csv(path: Path, schema: str, rows) -> None:
    columns = [name for name, _ in SCHEMAS[schema]]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _cell(value, kind: str) -> str:
    if value is None:
        return ""
    if kind == "int":
        return str(int(value))
    if kind == "str":
        return str(value)
    return _fmt(value)


def _rows(schema: str, records) -> list[list[str]]:
    kinds = [kind for _, kind in SCHEMAS[schema]]
    return [[_cell(v, k) for v, k in zip(record, kinds)] for record in records]


def _write_manifest(outdir: Path, command: str, files: dict[str, str], config: dict) -> None:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "bayesbag",
        "command": command,
        "files": files,
        "config": config,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# CSV ingestion


def read_regression_csv(path, target: str) -> tuple[RegressionDataset, list[str]]:
    """Read a header-first CSV into regressors/response, with line-numbered
    parse errors.  Returns the dataset and the regressor column names."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if target not in header:
            raise IngestionError(f"{path}: target column {target!r} not in header {header}")
        t_idx = header.index(target)
        z_rows: list[list[float]] = []
        y_vals: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise IngestionError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise IngestionError(f"{path}:{lineno}: {exc}") from None
            y_vals.append(values[t_idx])
            z_rows.append([v for i, v in enumerate(values) if i != t_idx])
    if not z_rows:
        raise IngestionError(f"{path}: no data rows")
    names = [h for i, h in enumerate(header) if i != t_idx]
    return RegressionDataset(z=np.array(z_rows), y=np.array(y_vals)), names


def _write_dataset_csv(path: Path, data: RegressionDataset) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"z{j}" for j in range(1, data.d + 1)] + ["y"])
        for i in range(data.n):
            writer.writerow([_fmt(v) for v in data.z[i]] + [_fmt(data.y[i])])


def standardize_regressors(data: RegressionDataset, names) -> RegressionDataset:
    """Center and scale each regressor to mean 0, variance 1."""
    mean = data.z.mean(axis=0)
    sd = data.z.std(axis=0)
    dead = np.flatnonzero(sd == 0.0)
    if dead.size:
        bad = ", ".join(names[i] for i in dead)
        raise IngestionError(f"zero-variance column(s) cannot be standardized: {bad}")
    return RegressionDataset(z=(data.z - mean) / sd, y=data.y)


# ---------------------------------------------------------------------------
# shared selection machinery


def _selection_hyper(
    args, d: int, default_q0: float, default_lam: float, default_k_star: int
) -> NIGHyperparams:
    k_star = _coerce(args, "k_star", int, default_k_star)
    return NIGHyperparams(
        a0=_coerce(args, "a0", float, 2.0),
        b0=_coerce(args, "b0", float, 1.0),
        lam=_coerce(args, "lam", float, default_lam),
        q0=_coerce(args, "q0", float, default_q0),
        k_star=min(k_star, d),
    )


def _selection_run(
    data: RegressionDataset, models, hyper, m: int, b: int, boot_seed: int, n_jobs: int = 1
):
    """Standard and bagged posterior inclusion probabilities for one dataset."""
    log_prior = log_priors(models, hyper)
    stats = weighted_stats(data, np.ones(data.n))
    standard = standard_model_posterior(
        model_log_marginals(stats, models, hyper), log_prior
    )
    bagged = bagged_model_posterior(
        make_evaluator(data, models, hyper),
        data.n,
        log_prior,
        BootstrapConfig(m=m, b=b, seed=boot_seed),
        n_jobs=n_jobs,
    )
    return pips(standard, models), pips(bagged.mean_probs, models)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    d = _coerce(args, "d", int)
    k = _coerce(args, "k", int)
    n = _coerce(args, "n", int)
    response = _coerce(args, "response", str, "linear")
    replicates = _coerce(args, "replicates", int, 50)
    h = _coerce(args, "h", float, 10.0)
    seed = _coerce(args, "seed", int, 0)
    b = _coerce(args, "b_reps", int, core.DEFAULT_REPLICATES)
    n_jobs = _coerce(args, "jobs", int, 1)
    if d is None or k is None or n is None:
        raise _UsageError("simulate requires --D, --k and --N")
    hyper = _selection_hyper(args, d, default_q0=k / d, default_lam=16.0, default_k_star=2)
    config = SimConfig(d=d, k=k, n=n, response_kind=response, h=h, seed=seed)

    models = enumerate_models(d, hyper.k_star)
    m = _resolve_m(_coerce(args, "m_size", str, "N"), n)
    log.info(
        "runtime guard: %d models x %d posterior evaluations x %d replicates "
        "= %d weighted-likelihood evaluations",
        models.shape[0], b + 1, replicates, models.shape[0] * (b + 1) * replicates,
    )

    outdir = _outdir(args)
    exported: dict[str, str] = {}
    pip_records = []
    by_key: dict[tuple[str, int], list[float]] = {}
    for r in range(replicates):
        data = sample_dataset(config, rng=_child_rng(seed, r, 0))
        if args.export_data:
            name = f"dataset_{r:03d}.csv"
            _write_dataset_csv(outdir / name, data)
            exported[name] = DATASET_SCHEMA
        std_pips, bag_pips = _selection_run(
            data, models, hyper, m=m, b=b, boot_seed=_child_seed(seed, r, 1),
            n_jobs=n_jobs,
        )
        for method, values in (("standard", std_pips), ("bayesbag", bag_pips)):
            for comp in range(1, d + 1):
                value = float(values[comp - 1])
                pip_records.append((r, method, comp, value))
                by_key.setdefault((method, comp), []).append(value)

    summary_records = []
    for (method, comp), values in sorted(by_key.items()):
        arr = np.array(values)
        frac_mid = float(np.mean((arr > 0.1) & (arr < 0.9)))
        summary_records.append(
            (method, comp, arr.mean(), arr.var(ddof=1) if arr.size > 1 else 0.0, frac_mid)
        )

    _write_csv(outdir / "pips.csv", "pips-v1", _rows("pips-v1", pip_records))
    _write_csv(outdir / "summary.csv", "pip-summary-v1", _rows("pip-summary-v1", summary_records))
    _write_manifest(
        outdir,
        "simulate",
        {"pips.csv": "pips-v1", "summary.csv": "pip-summary-v1", **exported},
        {
            "d": d, "k": k, "n": n, "response": response, "h": h,
            "replicates": replicates, "a0": hyper.a0, "b0": hyper.b0,
            "lambda": hyper.lam, "q0": hyper.q0, "k_star": hyper.k_star,
            "m": m, "b": b, "seed": seed,
        },
    )
    log.info("wrote %s", outdir)
    return 0


def _split_indices(n: int, n_splits: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Seeded random partition into parts whose sizes differ by at most 1."""
    perm = rng.permutation(n)
    base, extra = divmod(n, n_splits)
    sizes = [base + 1 if i < extra else base for i in range(n_splits)]
    parts, start = [], 0
    for size in sizes:
        parts.append(np.sort(perm[start : start + size]))
        start += size
    return parts


def cmd_select(args) -> int:
    if not args.data or not args.target:
        raise _UsageError("select requires --data and --target")
    n_splits = _coerce(args, "splits", int, 3)
    seed = _coerce(args, "seed", int, 0)
    b = _coerce(args, "b_reps", int, core.DEFAULT_REPLICATES)
    n_jobs = _coerce(args, "jobs", int, 1)
    data, names = read_regression_csv(args.data, args.target)
    if args.standardize:
        data = standardize_regressors(data, names)
    if data.n < data.d:
        log.warning("N=%d < D=%d: marginal likelihoods rely heavily on the prior", data.n, data.d)
    # q0 = 3/D, clamped so the default stays a valid probability for tiny D
    hyper = _selection_hyper(
        args, data.d, default_q0=min(3.0 / data.d, 0.5), default_lam=1.0,
        default_k_star=data.d,
    )
    models = enumerate_models(data.d, hyper.k_star)
    log.info(
        "runtime guard: %d models x %d posterior evaluations x %d runs",
        models.shape[0], b + 1, n_splits + 1,
    )

    m_token = _coerce(args, "m_size", str, "N")
    full_std, full_bag = _selection_run(
        data, models, hyper, m=_resolve_m(m_token, data.n), b=b,
        boot_seed=_child_seed(seed, 0, 1), n_jobs=n_jobs,
    )
    full_records = []
    for method, values in (("standard", full_std), ("bayesbag", full_bag)):
        for comp in range(1, data.d + 1):
            full_records.append((method, comp, float(values[comp - 1])))

    split_records = []
    split_values: dict[tuple[str, int], list[float]] = {}
    parts = _split_indices(data.n, n_splits, _child_rng(seed, 99))
    for s, idx in enumerate(parts):
        sub = RegressionDataset(z=data.z[idx], y=data.y[idx])
        std_pips, bag_pips = _selection_run(
            sub, models, hyper, m=_resolve_m(m_token, sub.n), b=b,
            boot_seed=_child_seed(seed, s + 1, 1), n_jobs=n_jobs,
        )
        for method, values in (("standard", std_pips), ("bayesbag", bag_pips)):
            for comp in range(1, data.d + 1):
                value = float(values[comp - 1])
                split_records.append((s, method, comp, value))
                split_values.setdefault((method, comp), []).append(value)

    repro_records = []
    for (method, comp), values in sorted(split_values.items()):
        lo, hi = min(values), max(values)
        repro_records.append((method, comp, lo, hi, hi - lo))

    outdir = _outdir(args)
    _write_csv(outdir / "pips_full.csv", "pips-full-v1", _rows("pips-full-v1", full_records))
    _write_csv(outdir / "pips_splits.csv", "pips-splits-v1", _rows("pips-splits-v1", split_records))
    _write_csv(
        outdir / "reproducibility.csv", "reproducibility-v1", _rows("reproducibility-v1", repro_records)
    )
    _write_manifest(
        outdir,
        "select",
        {
            "pips_full.csv": "pips-full-v1",
            "pips_splits.csv": "pips-splits-v1",
            "reproducibility.csv": "reproducibility-v1",
        },
        {
            "data": str(args.data), "target": args.target,
            "standardize": bool(args.standardize), "splits": n_splits,
            "a0": hyper.a0, "b0": hyper.b0, "lambda": hyper.lam,
            "q0": hyper.q0, "k_star": hyper.k_star, "m": m_token, "b": b,
            "seed": seed,
        },
    )
    log.info("wrote %s", outdir)
    return 0


def cmd_asymptotics(args) -> int:
    seed = _coerce(args, "seed", int, 0)
    threshold = _coerce(args, "threshold", float, STRONG_FAVOR_THRESHOLD)
    n_samples = _coerce(args, "n_samples", int, 4000)
    inner_samples = _coerce(args, "inner_samples", int, 2000)
    delta_grid = _parse_grid(_coerce(args, "delta_grid", str, "0:3:0.25"))
    c_grid = _parse_grid(_coerce(args, "c_grid", str, "0.25,0.5,1,2,4"))
    u_grid = _parse_grid(_coerce(args, "u_grid", str, "0.02:0.98:0.02"))
    three_model_c = _coerce(args, "three_model_c", float, 1.0)

    event_records = []
    density_records = []
    for delta in delta_grid:
        p_std_wrong = 1.0 - std_limit_bernoulli_2(TwoModelLaw(delta, 1.0))
        for c in c_grid:
            law = TwoModelLaw(float(delta), float(c))
            event_records.append((delta, c, p_std_wrong, threshold, ubb_cdf(threshold, law)))
            for u, f in zip(u_grid, ubb_density(u_grid, law)):
                density_records.append((delta, c, u, f))

    checkpoint_law = TwoModelLaw(2.0, 1.0)
    checkpoints = [
        ("p_std_wrong_delta2", 1.0 - std_limit_bernoulli_2(checkpoint_law)),
        ("ubb_cdf_0.1_delta2_c1", ubb_cdf(0.1, checkpoint_law)),
    ]
    for name, value in checkpoints:
        log.info("checkpoint %s = %s", name, _fmt(value))

    scenario_grids = {
        "vary_mean": _parse_grid(_coerce(args, "mu3_grid", str, "-2:2:0.5")),
        "vary_variance": _parse_grid(_coerce(args, "sigma3_grid", str, "0.5,0.75,1,1.5,2,3")),
        "vary_correlation": _parse_grid(_coerce(args, "rho_grid", str, "-0.4,-0.2,0,0.2,0.4,0.6,0.8")),
    }
    scenario_records = []
    row = 0
    for kind, grid in scenario_grids.items():
        for value, (mu_prime, sigma_prime) in zip(grid, three_model_scenarios(kind, grid)):
            mu, sigma = reduce_to_contrasts(mu_prime, sigma_prime, anchor=0)
            pick, se = mvn_cdf_at_zero(-mu, sigma, n_samples, _child_seed(seed, 1, row))
            samples = sample_ubb_K(
                KModelLaw(mu, sigma, three_model_c), n_samples, inner_samples, _child_seed(seed, 2, row)
            )
            frac = float(np.mean(samples < threshold))
            frac_se = float(np.sqrt(frac * (1.0 - frac) / samples.size))
            scenario_records.append((kind, value, three_model_c, 1.0 - pick, se, threshold, frac, frac_se))
            row += 1

    outdir = _outdir(args)
    _write_csv(outdir / "two_model_events.csv", "two-model-events-v1", _rows("two-model-events-v1", event_records))
    _write_csv(outdir / "two_model_density.csv", "two-model-density-v1", _rows("two-model-density-v1", density_records))
    _write_csv(outdir / "three_model_curves.csv", "three-model-curves-v1", _rows("three-model-curves-v1", scenario_records))
    _write_csv(outdir / "checkpoints.csv", "checkpoint-v1", _rows("checkpoint-v1", checkpoints))
    _write_manifest(
        outdir,
        "asymptotics",
        {
            "two_model_events.csv": "two-model-events-v1",
            "two_model_density.csv": "two-model-density-v1",
            "three_model_curves.csv": "three-model-curves-v1",
            "checkpoints.csv": "checkpoint-v1",
        },
        {
            "threshold": threshold, "n_samples": n_samples,
            "inner_samples": inner_samples, "three_model_c": three_model_c, "seed": seed,
        },
    )
    log.info("wrote %s", outdir)
    return 0


def cmd_mismatch(args) -> int:
    seed = _coerce(args, "seed", int, 0)
    b = _coerce(args, "b_reps", int, core.DEFAULT_REPLICATES)
    if args.data:
        if not args.target:
            raise _UsageError("--data requires --target")
        data, names = read_regression_csv(args.data, args.target)
        if args.standardize:
            data = standardize_regressors(data, names)
        source = {"data": str(args.data), "target": args.target}
    else:
        d = _coerce(args, "d", int)
        k = _coerce(args, "k", int)
        n = _coerce(args, "n", int)
        if d is None or k is None or n is None:
            raise _UsageError("mismatch requires --data/--target or --D/--k/--N")
        config = SimConfig(
            d=d, k=k, n=n,
            response_kind=_coerce(args, "response", str, "linear"),
            h=_coerce(args, "h", float, 10.0),
            seed=seed,
        )
        data = sample_dataset(config, rng=_child_rng(seed, 0))
        source = {"d": d, "k": k, "n": n, "response": config.response_kind}

    hyper = NIGHyperparams(
        a0=_coerce(args, "a0", float, 2.0),
        b0=_coerce(args, "b0", float, 1.0),
        lam=_coerce(args, "lam", float, 16.0 if not args.data else 1.0),
        q0=0.5,  # unused by the full-model moments
        k_star=data.d,
    )
    gamma_full = np.ones(data.d, dtype=np.uint8)
    m = data.n  # the index is defined with M = N
    standard = param_moments_from_stats(
        weighted_stats(data, np.ones(data.n)), gamma_full, hyper
    )
    pvec = np.full(data.n, 1.0 / data.n)
    boot_seed = _child_seed(seed, 1)
    replicate_moments = []
    for i in range(b):
        counts = core.replicate_rng(boot_seed, i).multinomial(m, pvec)
        replicate_moments.append(
            param_moments_from_stats(weighted_stats(data, counts), gamma_full, hyper)
        )
    overall, per_coord = mismatch_index_proj(standard, replicate_moments)

    report = {
        "schema": MISMATCH_REPORT_SCHEMA,
        "overall": overall.value,
        "per_coordinate": {label: item.value for label, item in per_coord.items()},
        "b": b,
        "m": m,
        "seed": seed,
        "n": data.n,
        "d": data.d,
        "source": source,
    }
    outdir = _outdir(args)
    with open(outdir / "mismatch.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(outdir, "mismatch", {"mismatch.json": MISMATCH_REPORT_SCHEMA}, report)
    log.info("overall mismatch index: %s", "NA" if overall.is_na else _fmt(overall.value))
    return 0


def cmd_overlap(args) -> int:
    level = _coerce(args, "level", float, 0.99)
    seed = _coerce(args, "seed", int, 0)
    n_boot = _coerce(args, "n_boot", int, 1000)
    ci_level = _coerce(args, "ci_level", float, 0.8)
    posts_a = [load_posterior_samples(p) for p in args.a]
    posts_b = [load_posterior_samples(p) for p in args.b]
    post_a = posts_a[0] if len(posts_a) == 1 else average_posteriors(posts_a)
    post_b = posts_b[0] if len(posts_b) == 1 else average_posteriors(posts_b)
    result = hpd_overlap(post_a, post_b, level)

    ci_lo = ci_hi = None
    if args.ci:
        if len(posts_a) < 2:
            raise _UsageError("--ci needs at least 2 replicate files for side a")
        b_arg = posts_b if len(posts_b) > 1 else posts_b[0]
        ci_lo, ci_hi = overlap_ci(
            posts_a, b_arg, level, n_boot=n_boot, ci_level=ci_level, seed=seed
        )

    label_a = ";".join(Path(p).name for p in args.a)
    label_b = ";".join(Path(p).name for p in args.b)
    records = [
        (label_a, label_b, level, result.mass_a, result.mass_b, result.mass_avg,
         result.count, ci_lo, ci_hi)
    ]
    outdir = _outdir(args)
    _write_csv(outdir / "overlap.csv", "overlap-v1", _rows("overlap-v1", records))
    _write_manifest(
        outdir,
        "overlap",
        {"overlap.csv": "overlap-v1"},
        {"a": [str(p) for p in args.a], "b": [str(p) for p in args.b],
         "level": level, "ci": bool(args.ci), "n_boot": n_boot,
         "ci_level": ci_level, "seed": seed},
    )
    log.info(
        "overlap mass_avg=%s count=%d%s",
        _fmt(result.mass_avg), result.count,
        f" ci=({_fmt(ci_lo)}, {_fmt(ci_hi)})" if ci_lo is not None else "",
    )
    return 0


def _check_cell(value: str, kind: str, where: str) -> None:
    if kind == "str":
        return
    if value == "":
        if kind.endswith("?"):
            return
        raise IngestionError(f"{where}: empty cell not allowed")
    try:
        int(value) if kind == "int" else float(value)
    except ValueError:
        raise IngestionError(f"{where}: {value!r} is not {kind}") from None


def cmd_schema_check(args) -> int:
    outdir = Path(args.out)
    manifest_path = outdir / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot load {manifest_path}: {exc}") from exc
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise IngestionError(
            f"manifest schema_version {manifest.get('schema_version')} != {SCHEMA_VERSION}"
        )
    for filename, schema in manifest.get("files", {}).items():
        path = outdir / filename
        if not path.exists():
            raise IngestionError(f"{path} listed in manifest but missing")
        if schema == MISMATCH_REPORT_SCHEMA:
            report = json.loads(path.read_text(encoding="utf-8"))
            missing = [key for key in MISMATCH_REPORT_KEYS if key not in report]
            if missing:
                raise IngestionError(f"{path}: missing keys {missing}")
            continue
        if schema == DATASET_SCHEMA:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader, None) or []
                d = len(header) - 1
                if d < 1 or header != [f"z{j}" for j in range(1, d + 1)] + ["y"]:
                    raise IngestionError(f"{path}: header {header} does not match {schema}")
                for lineno, row in enumerate(reader, start=2):
                    if len(row) != d + 1:
                        raise IngestionError(f"{path}:{lineno}: wrong field count")
                    for value in row:
                        _check_cell(value, "float", f"{path}:{lineno}")
            log.info("%s conforms to %s", path, schema)
            continue
        if schema not in SCHEMAS:
            raise IngestionError(f"{path}: unknown schema {schema!r}")
        spec = SCHEMAS[schema]
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != [name for name, _ in spec]:
                raise IngestionError(f"{path}: header {header} does not match {schema}")
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(spec):
                    raise IngestionError(f"{path}:{lineno}: wrong field count")
                for (name, kind), value in zip(spec, row):
                    _check_cell(value, kind, f"{path}:{lineno}:{name}")
        log.info("%s conforms to %s", path, schema)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: _Parser) -> None:
    p.add_argument("--config", help="key=value configuration file; flags override it")
    p.add_argument("--seed", default=None, help="base random seed (default 0)")
    p.add_argument("--out", default=None, help="output directory")


def _add_hyper(p: _Parser) -> None:
    p.add_argument("--q0", default=None, help="prior inclusion probability")
    p.add_argument("--a0", default=None, help="inverse-gamma shape (default 2)")
    p.add_argument("--b0", default=None, help="inverse-gamma scale (default 1)")
    p.add_argument("--lambda", dest="lam", default=None, help="coefficient precision scale")
    p.add_argument("--k-star", dest="k_star", default=None, help="max regressors per model")


def _add_bootstrap(p: _Parser) -> None:
    p.add_argument("--M", dest="m_size", default=None,
                   help="bootstrap dataset size; integer or 'N' (default N)")
    p.add_argument("--B", dest="b_reps", default=None,
                   help=f"bootstrap replicates (default {core.DEFAULT_REPLICATES})")
    p.add_argument("--jobs", dest="jobs", default=None,
                   help="worker threads for replicate evaluation (default 1); "
                        "results are identical at any setting")


def build_parser() -> _Parser:
    parser = _Parser(prog="bayesbag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthetic feature-selection study")
    p.add_argument("--D", dest="d", default=None, help="number of regressors")
    p.add_argument("--k", dest="k", default=None, help="number of causal components")
    p.add_argument("--N", dest="n", default=None, help="dataset size per replicate")
    p.add_argument("--response", choices=["linear", "nonlinear"], default=None)
    p.add_argument("--replicates", default=None, help="replicate datasets (default 50)")
    p.add_argument("--h", dest="h", default=None, help="chi-squared dof of the scale mixture")
    p.add_argument("--export-data", dest="export_data", action="store_true",
                   help="also write each generated dataset (columns z1..zD, y)")
    _add_hyper(p)
    _add_bootstrap(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="feature selection on a CSV dataset with splits")
    p.add_argument("--data", default=None, help="CSV file with a header row")
    p.add_argument("--target", default=None, help="response column name")
    p.add_argument("--standardize", dest="standardize", action="store_true", default=True)
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.add_argument("--splits", default=None, help="number of random splits (default 3)")
    _add_hyper(p)
    _add_bootstrap(p)
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("asymptotics", help="limit-law curve sweeps")
    p.add_argument("--delta-grid", dest="delta_grid", default=None)
    p.add_argument("--c-grid", dest="c_grid", default=None)
    p.add_argument("--u-grid", dest="u_grid", default=None)
    p.add_argument("--threshold", default=None, help="'strongly favors' cutoff (default 0.1)")
    p.add_argument("--mu3-grid", dest="mu3_grid", default=None)
    p.add_argument("--sigma3-grid", dest="sigma3_grid", default=None)
    p.add_argument("--rho-grid", dest="rho_grid", default=None)
    p.add_argument("--three-model-c", dest="three_model_c", default=None)
    p.add_argument("--n-samples", dest="n_samples", default=None)
    p.add_argument("--inner-samples", dest="inner_samples", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("mismatch", help="model-data mismatch report (full model)")
    p.add_argument("--data", default=None, help="CSV file (otherwise simulate)")
    p.add_argument("--target", default=None)
    p.add_argument("--standardize", dest="standardize", action="store_true", default=True)
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.add_argument("--D", dest="d", default=None)
    p.add_argument("--k", dest="k", default=None)
    p.add_argument("--N", dest="n", default=None)
    p.add_argument("--response", choices=["linear", "nonlinear"], default=None)
    p.add_argument("--h", dest="h", default=None)
    p.add_argument("--a0", default=None)
    p.add_argument("--b0", default=None)
    p.add_argument("--lambda", dest="lam", default=None)
    p.add_argument("--B", dest="b_reps", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_mismatch)

    p = sub.add_parser("overlap", help="HPD-region overlap of discrete posteriors")
    p.add_argument("--a", nargs="+", required=True, help="sample file(s) for side a")
    p.add_argument("--b", nargs="+", required=True, help="sample file(s) for side b")
    p.add_argument("--level", default=None, help="HPD level (default 0.99)")
    p.add_argument("--ci", action="store_true", help="bootstrap CI over side-a replicates")
    p.add_argument("--n-boot", dest="n_boot", default=None)
    p.add_argument("--ci-level", dest="ci_level", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("schema-check", help="validate a result directory against its manifest")
    p.add_argument("--out", required=True, help="result directory to validate")
    p.set_defaults(func=cmd_schema_check)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args)
        if getattr(args, "out", None) is None and args.command != "schema-check":
            raise _UsageError("--out is required")
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except InvalidArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return 3
    except IngestionError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except BayesBagError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
