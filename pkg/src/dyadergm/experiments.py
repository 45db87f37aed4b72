"""Monte Carlo harness: Wald-interval coverage and sampling-distribution checks.

Replicate ``r`` of the grid cell with ``N`` vertices draws from the stream
``Seed(master).generator(N, r)``, so any cell can be reproduced on its own and
results do not depend on the number of worker processes.  Workers only draw
censuses; fitting and tabulation happen afterwards, vectorised, in replicate
order.
"""

from __future__ import annotations

import csv
import io
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, DyadErgmError, NonexistentMLEError, UnsupportedVariantError
from .inference import critical_value, mean_value_to_natural, mle_arrays, plugin_std_errors
from .model import (
    MeanValueTargets,
    ModelVariant,
    NaturalParams,
    Variant,
    asymptotic_covariance,
    _check_n,
)
from .rng import Seed, as_seed
from .sampler import _census_probabilities, _draw_census

THREADS_ENV = "DYADERGM_THREADS"
BLOCK_SIZE = 2000

CSV_COLUMNS = (
    "config_id",
    "n_vertices",
    "level",
    "parameter",
    "coverage",
    "nonexistence_rate",
    "replicates_used",
    "coverage_unconditional",
    "mean_width",
)


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV, "1")
    try:
        threads = int(value)
    except ValueError:
        raise DomainError(f"{THREADS_ENV}={value!r} is not an integer") from None
    if threads < 1:
        raise DomainError(f"{THREADS_ENV} must be >= 1, got {threads}")
    return threads


# -- replicate sampling ------------------------------------------------------


def _census_block(task):
    n_vertices, p_mutual, p_asym, master, start, stop = task
    seed = Seed(master)
    out = np.empty((stop - start, 3), dtype=np.int64)
    for row, r in enumerate(range(start, stop)):
        out[row] = _draw_census(n_vertices, p_mutual, p_asym, seed.generator(n_vertices, r))
    return out


def _tasks(params, variant, n_vertices, seed, replicates):
    p_mutual, p_asym = _census_probabilities(params, variant, n_vertices)
    return [
        (n_vertices, p_mutual, p_asym, seed.master, start, min(start + BLOCK_SIZE, replicates))
        for start in range(0, replicates, BLOCK_SIZE)
    ]


def _run_tasks(tasks, threads):
    if threads <= 1 or len(tasks) <= 1:
        return [_census_block(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order
        return list(pool.map(_census_block, tasks))


def sample_censuses(params, variant, n_vertices, seed, replicates, threads=1) -> np.ndarray:
    """``(replicates, 3)`` array of ``(n_null, n_asym, n_mutual)`` draws."""
    tasks = _tasks(params, variant, _check_n(n_vertices), as_seed(seed), replicates)
    blocks = _run_tasks(tasks, threads)
    return np.concatenate(blocks) if blocks else np.empty((0, 3), dtype=np.int64)


# -- coverage study ------------------------------------------------------------


@dataclass(frozen=True)
class CoverageConfig:
    targets: MeanValueTargets
    n_vertices_grid: tuple[int, ...]
    levels: tuple[float, ...]
    replicates: int
    seed: Seed
    variant: ModelVariant
    config_id: str = ""
    report_n_vertices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "n_vertices_grid", tuple(int(n) for n in self.n_vertices_grid))
        object.__setattr__(self, "levels", tuple(float(x) for x in self.levels))
        object.__setattr__(self, "report_n_vertices", tuple(int(n) for n in self.report_n_vertices))
        object.__setattr__(self, "seed", as_seed(self.seed))
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise DomainError(f"replicates must be a positive integer, got {self.replicates!r}")
        if not self.n_vertices_grid:
            raise DomainError("n_vertices_grid is empty")
        if any(n < 2 for n in self.n_vertices_grid):
            raise DomainError("every n_vertices_grid entry must be >= 2")
        if len(set(self.n_vertices_grid)) != len(self.n_vertices_grid):
            raise DomainError("n_vertices_grid has duplicates")
        if not self.levels or any(not 0 < x < 1 for x in self.levels):
            raise DomainError("levels must be non-empty and inside (0, 1)")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise DomainError("levels must be strictly increasing")
        if self.variant.tag is Variant.BASELINE or not self.variant.fittable:
            raise UnsupportedVariantError(
                f"coverage study needs sparse-recip or sparse-density without reciprocity, got {self.variant}"
            )

    @property
    def parameters(self) -> tuple[str, ...]:
        return ("alpha", "beta") if self.variant.reciprocity else ("alpha",)


@dataclass(frozen=True)
class CoverageCell:
    n_vertices: int
    level: float
    parameter: str
    coverage: float
    coverage_unconditional: float
    mean_width: float


@dataclass(frozen=True)
class SizeSummary:
    """Per-``N`` bookkeeping; ``error`` is set when target inversion failed."""

    n_vertices: int
    replicates: int
    nonexistent: int = 0
    params: Optional[NaturalParams] = None
    error: str = ""

    @property
    def replicates_used(self) -> int:
        return self.replicates - self.nonexistent

    @property
    def nonexistence_rate(self) -> float:
        return self.nonexistent / self.replicates if self.replicates else math.nan


@dataclass(frozen=True)
class CoverageReport:
    config: CoverageConfig
    sizes: tuple[SizeSummary, ...]
    cells: tuple[CoverageCell, ...] = field(default=())

    def size(self, n_vertices: int) -> SizeSummary:
        for s in self.sizes:
            if s.n_vertices == n_vertices:
                return s
        raise KeyError(n_vertices)

    def coverage(self, n_vertices: int, level: float, parameter: str) -> float:
        for c in self.cells:
            if c.n_vertices == n_vertices and c.parameter == parameter and math.isclose(c.level, level):
                return c.coverage
        return math.nan

    def rows(self):
        """CSV rows; cells of a size whose target inversion failed are left blank."""
        cfg = self.config
        for size in self.sizes:
            for level in cfg.levels:
                for parameter in cfg.parameters:
                    row = {
                        "config_id": cfg.config_id,
                        "n_vertices": size.n_vertices,
                        "level": _fmt(level),
                        "parameter": parameter,
                    }
                    if size.error:
                        row.update(dict.fromkeys(CSV_COLUMNS[4:], ""))
                    else:
                        cell = self._cell(size.n_vertices, level, parameter)
                        row.update(
                            coverage=_fmt(cell.coverage),
                            nonexistence_rate=_fmt(size.nonexistence_rate),
                            replicates_used=size.replicates_used,
                            coverage_unconditional=_fmt(cell.coverage_unconditional),
                            mean_width=_fmt(cell.mean_width),
                        )
                    yield row

    def _cell(self, n_vertices, level, parameter):
        for c in self.cells:
            if c.n_vertices == n_vertices and c.level == level and c.parameter == parameter:
                return c
        raise KeyError((n_vertices, level, parameter))

    def to_csv(self, stream=None) -> str:
        buf = io.StringIO(newline="")
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text

    def table(self, n_vertices: Sequence[int] = ()) -> str:
        """Plain-text table of coverage percentages, one row per ``N``."""
        cfg = self.config
        wanted = list(n_vertices) or list(cfg.report_n_vertices) or [s.n_vertices for s in self.sizes]
        header = ["N_v"] + [f"{100 * lv:.1f}% {p}" for lv in cfg.levels for p in cfg.parameters]
        header.append("no-MLE")
        lines = ["  ".join(f"{h:>13}" for h in header)]
        for n in wanted:
            size = self.size(n)
            values = [str(n)]
            for lv in cfg.levels:
                for p in cfg.parameters:
                    values.append("--" if size.error else f"{100 * self._cell(n, lv, p).coverage:.1f}%")
            values.append("--" if size.error else f"{100 * size.nonexistence_rate:.2f}%")
            lines.append("  ".join(f"{v:>13}" for v in values))
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def run_coverage(config: CoverageConfig, threads: Optional[int] = None) -> CoverageReport:
    """Simulate Wald-interval coverage over the configured grid of network sizes.

    Coverage is conditional on the MLE existing; replicates without an MLE
    are counted in ``nonexistence_rate`` and excluded from ``coverage`` (but
    count as misses in ``coverage_unconditional``).
    """
    threads = default_threads() if threads is None else int(threads)
    variant = config.variant
    z = {level: critical_value(level) for level in config.levels}

    plans = []
    tasks = []
    for n in config.n_vertices_grid:
        try:
            params = mean_value_to_natural(config.targets, n, variant)
        except DyadErgmError as exc:
            plans.append((n, None, str(exc), 0))
            continue
        cell_tasks = _tasks(params, variant, n, config.seed, config.replicates)
        plans.append((n, params, "", len(cell_tasks)))
        tasks.extend(cell_tasks)
    blocks = iter(_run_tasks(tasks, threads))

    sizes, cells = [], []
    for n, params, error, n_tasks in plans:
        if params is None:
            sizes.append(SizeSummary(n, config.replicates, error=error))
            continue
        draws = np.concatenate([next(blocks) for _ in range(n_tasks)])
        exists, a_hat, b_hat = mle_arrays(n, draws[:, 0], draws[:, 1], draws[:, 2], variant)
        se = plugin_std_errors(a_hat, b_hat, n, variant.reciprocity)
        used = int(exists.sum())
        sizes.append(SizeSummary(n, config.replicates, config.replicates - used, params))
        truth = {"alpha": params.alpha, "beta": params.beta}
        est = {"alpha": a_hat, "beta": b_hat}
        for level in config.levels:
            for k, name in enumerate(config.parameters):
                half = z[level] * se[k][exists]
                hits = int(np.count_nonzero(np.abs(est[name][exists] - truth[name]) <= half))
                cells.append(
                    CoverageCell(
                        n,
                        level,
                        name,
                        coverage=hits / used if used else math.nan,
                        coverage_unconditional=hits / config.replicates,
                        mean_width=float(2 * half.mean()) if used else math.nan,
                    )
                )
    return CoverageReport(config, tuple(sizes), tuple(cells))


# -- sampling-distribution checks ---------------------------------------------


class SamplingCheck(NamedTuple):
    empirical_cov_scaled: np.ndarray
    theory_cov: np.ndarray
    mean_bias: np.ndarray
    n_used: int


def sampling_distribution_check(
    params: NaturalParams,
    variant: ModelVariant,
    n_vertices: int,
    replicates: int,
    seed,
    threads: int = 1,
) -> SamplingCheck:
    """Compare ``N * Cov(theta_hat)`` over replicates with the limit covariance."""
    if replicates < 1000:
        raise DomainError(f"need at least 1000 replicates, got {replicates}")
    theory = asymptotic_covariance(params, variant)
    draws = sample_censuses(params, variant, n_vertices, seed, replicates, threads)
    exists, a_hat, b_hat = mle_arrays(n_vertices, draws[:, 0], draws[:, 1], draws[:, 2], variant)
    if not exists.any():
        raise NonexistentMLEError("no replicate produced an MLE")
    k = variant.n_params
    est = np.stack([a_hat[exists], b_hat[exists]], axis=1)[:, :k]
    emp = n_vertices * np.atleast_2d(np.cov(est, rowvar=False))
    bias = est.mean(axis=0) - params.as_array()[:k]
    return SamplingCheck(emp, theory, bias, int(exists.sum()))


# -- manifests -----------------------------------------------------------------


def versions() -> dict:
    from . import __version__

    import scipy

    return {
        "dyadergm": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
        "platform": platform.platform(),
    }


def config_to_dict(config: CoverageConfig) -> dict:
    d = asdict(config)
    d["seed"] = config.seed.master
    d["variant"] = str(config.variant)
    return d


def build_manifest(subcommand: str, config: dict, seed, argv=None, outputs=None, extra=None) -> dict:
    manifest = {
        "subcommand": subcommand,
        "argv": list(argv) if argv is not None else None,
        "config": config,
        "seed": None if seed is None else as_seed(seed).master,
        "rng": "Philox4x64, key = SplitMix64-chain(master, keys...)",
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "versions": versions(),
        "outputs": outputs or [],
    }
    if extra:
        manifest.update(extra)
    return manifest


# -- config files ----------------------------------------------------------------

CONFIG_KEYS = {
    "config_id": str,
    "variant": str,
    "edges_per_vertex": (int, float),
    "mutuals_per_vertex": (int, float),
    "n_vertices": list,
    "n_vertices_range": list,
    "levels": list,
    "replicates": int,
    "seed": int,
    "report_n_vertices": list,
}


class ConfigError(DomainError):
    """Coverage config violates the schema."""


def coverage_config_from_dict(raw: dict) -> CoverageConfig:
    """Validate a flat key/value mapping (as parsed from TOML) into a config.

    The grid is either ``n_vertices = [...]`` or
    ``n_vertices_range = [start, stop, step]`` (stop inclusive).
    """
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for key, typ in CONFIG_KEYS.items():
        if key in raw and (not isinstance(raw[key], typ) or isinstance(raw[key], bool)):
            raise ConfigError(f"config key {key!r} has wrong type {type(raw[key]).__name__}")
    for key in ("variant", "edges_per_vertex", "levels", "replicates", "seed"):
        if key not in raw:
            raise ConfigError(f"missing required config key {key!r}")
    if ("n_vertices" in raw) == ("n_vertices_range" in raw):
        raise ConfigError("give exactly one of 'n_vertices' or 'n_vertices_range'")
    if "n_vertices" in raw:
        grid = raw["n_vertices"]
    else:
        rng = raw["n_vertices_range"]
        if len(rng) != 3 or not all(isinstance(x, int) for x in rng) or rng[2] < 1:
            raise ConfigError("n_vertices_range must be [start, stop, step] integers with step >= 1")
        grid = list(range(rng[0], rng[1] + 1, rng[2]))
    if not all(isinstance(n, int) and not isinstance(n, bool) for n in grid):
        raise ConfigError("n_vertices entries must be integers")
    if raw["replicates"] < 1:
        raise ConfigError(f"replicates must be >= 1, got {raw['replicates']}")
    try:
        variant = ModelVariant.parse(raw["variant"], reciprocity=raw["variant"] == "sparse-recip")
        return CoverageConfig(
            targets=MeanValueTargets(raw["edges_per_vertex"], raw.get("mutuals_per_vertex", 0.0)),
            n_vertices_grid=tuple(grid),
            levels=tuple(raw["levels"]),
            replicates=raw["replicates"],
            seed=Seed(raw["seed"]),
            variant=variant,
            config_id=raw.get("config_id", ""),
            report_n_vertices=tuple(raw.get("report_n_vertices", ())),
        )
    except (DyadErgmError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_coverage_config(path, **overrides) -> CoverageConfig:
    """Read a TOML coverage config; ``overrides`` replace keys after parsing."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return coverage_config_from_dict(raw)
