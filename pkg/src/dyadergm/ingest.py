"""Edge-list input, induced subnetworks and the size-scaling regime diagnostic.

File formats
------------
Edge file
    UTF-8 text, one directed edge per line: ``from_id`` and ``to_id``
    separated by a tab, a comma or other whitespace.  Lines starting with
    ``#`` are comments, except that ``# n_vertices=N`` declares the vertex
    set ``0 .. N-1`` when no vertex file is given (isolated vertices are
    otherwise invisible).
Vertex file
    Comma-separated with header ``id,<level1>,<level2>,...``; each level
    column holds a subdivision label, e.g. village, ward, neighbourhood.
"""

from __future__ import annotations

import csv
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, ParseError
from .inference import FitResult, fit_mle
from .model import BASELINE, ModelVariant, NaturalParams
from .rng import as_seed
from .sampler import Network, census, sample_network

_DIRECTIVE = re.compile(r"#\s*n_vertices\s*[=:]\s*(\d+)\s*$")

SIGNATURES = {
    "baseline": (0.0, 0.0),
    "sparse-density": (-1.0, 0.0),
    "sparse-with-reciprocity": (-1.0, 1.0),
}

CAVEAT = (
    "subnetworks overlap, so the fitted points are dependent; "
    "slopes are descriptive, not a formal test"
)

FIT_COLUMNS = (
    "label",
    "level",
    "n_vertices",
    "alpha_hat",
    "beta_hat",
    "se_alpha",
    "se_beta",
    "exists",
    "within_tie_fraction",
    "within_mutual_fraction",
)


@dataclass(frozen=True)
class VertexTable:
    """Vertex ids (in file order) and one label column per subdivision level."""

    ids: tuple[str, ...]
    levels: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(str(v) for v in self.ids))
        object.__setattr__(self, "levels", {k: tuple(map(str, v)) for k, v in self.levels.items()})
        if len(set(self.ids)) != len(self.ids):
            raise DomainError("vertex ids are not unique")
        for name, labels in self.levels.items():
            if len(labels) != len(self.ids):
                raise DomainError(f"level {name!r} has {len(labels)} labels for {len(self.ids)} vertices")

    @property
    def level_names(self) -> tuple[str, ...]:
        return tuple(self.levels)

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.ids)}

    def labels(self, level: str) -> tuple[str, ...]:
        try:
            return self.levels[level]
        except KeyError:
            raise DomainError(f"unknown level {level!r}; available: {', '.join(self.levels) or 'none'}") from None


def load_vertex_table(path) -> VertexTable:
    path = Path(path)
    ids, rows, header = [], [], None
    seen = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            row = [c.strip() for c in row]
            if header is None:
                if row[0] != "id":
                    raise ParseError(path, lineno, f"header must start with 'id', got {row[0]!r}")
                header = row
                continue
            if len(row) != len(header):
                raise ParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            if row[0] in seen:
                raise ParseError(path, lineno, f"duplicate vertex id {row[0]!r} (first on line {seen[row[0]]})")
            seen[row[0]] = lineno
            ids.append(row[0])
            rows.append(row[1:])
    if header is None:
        raise ParseError(path, 0, "missing header row")
    levels = {name: tuple(r[k] for r in rows) for k, name in enumerate(header[1:])}
    return VertexTable(tuple(ids), levels)


def _split_edge(line: str):
    if "\t" in line:
        parts = line.split("\t")
    elif "," in line:
        parts = line.split(",")
    else:
        parts = line.split()
    return [p.strip() for p in parts]


def read_edge_list(path, table: Optional[VertexTable] = None):
    """Parse an edge file.

    Returns ``(network, table, n_duplicates)``.  Without ``table`` the vertex
    set comes from the ``# n_vertices=N`` directive if present, else from the
    endpoints in order of first appearance.
    """
    path = Path(path)
    raw = []
    declared = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                match = _DIRECTIVE.match(text)
                if match:
                    declared = int(match.group(1))
                continue
            parts = _split_edge(text)
            if len(parts) != 2 or not all(parts):
                raise ParseError(path, lineno, f"expected 'from_id<TAB or comma>to_id', got {text!r}")
            raw.append((lineno, parts[0], parts[1]))

    if table is None and declared is not None:
        table = VertexTable(tuple(str(i) for i in range(declared)))
    if table is not None:
        index = table.index()
        grow = False
    else:
        index = {}
        grow = True

    pairs = []
    for lineno, u, v in raw:
        ends = []
        for vid in (u, v):
            if vid not in index:
                if not grow:
                    raise ParseError(path, lineno, f"edge endpoint {vid!r} is not a listed vertex")
                index[vid] = len(index)
            ends.append(index[vid])
        if ends[0] == ends[1]:
            raise ParseError(path, lineno, f"self-loop on vertex {u!r}")
        pairs.append(ends)

    if table is None:
        table = VertexTable(tuple(index))
    n = len(table.ids)
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    keys = edges[:, 0] * n + edges[:, 1]
    unique_keys, first = np.unique(keys, return_index=True)
    n_dup = len(keys) - len(unique_keys)
    return Network(n, edges[np.sort(first)]), table, n_dup


def load_network(edge_path, vertex_path=None):
    """Read a network and its vertex table; duplicate edges are collapsed with a warning."""
    table = load_vertex_table(vertex_path) if vertex_path is not None else None
    network, table, n_dup = read_edge_list(edge_path, table)
    if n_dup:
        warnings.warn(f"{edge_path}: collapsed {n_dup} duplicate edge(s)", stacklevel=2)
    return network, table


def write_edge_list(path, network: Network, ids: Optional[Sequence[str]] = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if ids is None:
            fh.write(f"# n_vertices={network.n_vertices}\n")
        for i, j in network.edges.tolist():
            if ids is None:
                fh.write(f"{i}\t{j}\n")
            else:
                fh.write(f"{ids[i]}\t{ids[j]}\n")


def write_vertex_table(path, table: VertexTable):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("id",) + table.level_names)
        for k, vid in enumerate(table.ids):
            writer.writerow([vid] + [table.levels[name][k] for name in table.level_names])


# -- subnetworks -------------------------------------------------------------


@dataclass(frozen=True)
class Subnetwork:
    label: str
    level: str
    vertices: np.ndarray
    network: Network
    within_tie_fraction: float
    within_mutual_fraction: float


def _reciprocated(network: Network) -> np.ndarray:
    n = network.n_vertices
    e = network.edges
    return np.isin(e[:, 1] * n + e[:, 0], e[:, 0] * n + e[:, 1])


def _fraction(num: int, den: int) -> float:
    # no ties touching the group: nothing was cut, vacuously 1
    return num / den if den else 1.0


def _group_codes(table: VertexTable, level: str):
    labels = table.labels(level)
    names = sorted(set(labels))
    lookup = {name: k for k, name in enumerate(names)}
    return names, np.array([lookup[x] for x in labels], dtype=np.int64)


def level_within_fractions(network: Network, table: VertexTable, level: str) -> tuple[float, float]:
    """Fractions of all ties, and of reciprocated ties, lying inside one subdivision."""
    _, codes = _group_codes(table, level)
    e = network.edges
    within = codes[e[:, 0]] == codes[e[:, 1]]
    recip = _reciprocated(network)
    return (
        _fraction(int(within.sum()), len(e)),
        _fraction(int((within & recip).sum()), int(recip.sum())),
    )


def extract_subnetworks(network: Network, table: VertexTable, level: str) -> list[Subnetwork]:
    """Induced subnetwork of every subdivision at ``level``, ordered by label.

    Each carries the fraction of ties (and reciprocated ties) touching the
    subdivision that stay inside it.
    """
    names, codes = _group_codes(table, level)
    e = network.edges
    src, dst = codes[e[:, 0]], codes[e[:, 1]]
    recip = _reciprocated(network)
    out = []
    for k, name in enumerate(names):
        members = np.flatnonzero(codes == k)
        local = np.full(network.n_vertices, -1, dtype=np.int64)
        local[members] = np.arange(len(members))
        inside = (src == k) & (dst == k)
        touching = (src == k) | (dst == k)
        sub = Network(len(members), local[e[inside]])
        out.append(
            Subnetwork(
                label=name,
                level=level,
                vertices=members,
                network=sub,
                within_tie_fraction=_fraction(int(inside.sum()), int(touching.sum())),
                within_mutual_fraction=_fraction(int((inside & recip).sum()), int((touching & recip).sum())),
            )
        )
    return out


@dataclass(frozen=True)
class SubnetFit:
    label: str
    level: str
    n_vertices: int
    fit: FitResult
    within_tie_fraction: float = 1.0
    within_mutual_fraction: float = 1.0


def fit_subnetworks(
    network: Network,
    table: VertexTable,
    levels: Iterable[str],
    variant: ModelVariant = BASELINE,
    include_whole: bool = True,
) -> list[SubnetFit]:
    """Fit ``variant`` to the whole network and to every subdivision at each level."""
    fits = []
    if include_whole:
        fits.append(SubnetFit("all", "all", network.n_vertices, fit_mle(census(network), variant)))
    for level in levels:
        for sub in extract_subnetworks(network, table, level):
            fit = fit_mle(census(sub.network), variant)
            fits.append(
                SubnetFit(sub.label, level, sub.network.n_vertices, fit,
                          sub.within_tie_fraction, sub.within_mutual_fraction)
            )
    return fits


# -- regression --------------------------------------------------------------


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    n_points: int


def ols(x, y) -> RegressionResult:
    """Least-squares line ``y ~ intercept + slope * x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) < 2:
        raise DomainError(f"need at least 2 points for a regression, got {len(x)}")
    design = np.column_stack([np.ones_like(x), x])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise DomainError("degenerate regression design: all points have the same log N_v")
    return RegressionResult(float(coef[1]), float(coef[0]), len(x))


@dataclass(frozen=True)
class RegimeDiagnostic:
    slope_alpha: RegressionResult
    slope_beta: RegressionResult
    verdict: str
    n_excluded: int
    caveat: str = CAVEAT

    @property
    def distances(self) -> dict:
        point = np.array([self.slope_alpha.slope, self.slope_beta.slope])
        return {name: float(np.linalg.norm(point - sig)) for name, sig in SIGNATURES.items()}


INTERPRETATION = (
    "slopes near (0, 0): baseline; near (-1, 0): sparse-density; "
    "near (-1, +1): sparse-with-reciprocity"
)


def nearest_signature(slope_alpha: float, slope_beta: float) -> str:
    point = np.array([slope_alpha, slope_beta])
    return min(SIGNATURES, key=lambda name: np.linalg.norm(point - SIGNATURES[name]))


def regime_diagnostic(fits: Sequence[SubnetFit]) -> RegimeDiagnostic:
    """Regress ``alpha_hat`` and ``beta_hat`` on ``log N_v`` and name the nearest regime.

    Fits whose MLE does not exist are dropped and counted in ``n_excluded``.
    """
    usable = [f for f in fits if f.fit.exists]
    x = [math.log(f.n_vertices) for f in usable]
    a = ols(x, [f.fit.params_hat.alpha for f in usable])
    b = ols(x, [f.fit.params_hat.beta for f in usable])
    return RegimeDiagnostic(a, b, nearest_signature(a.slope, b.slope), len(fits) - len(usable))


def fits_rows(fits: Sequence[SubnetFit]):
    for f in fits:
        ok = f.fit.exists
        yield {
            "label": f.label,
            "level": f.level,
            "n_vertices": f.n_vertices,
            "alpha_hat": repr(f.fit.params_hat.alpha) if ok else "",
            "beta_hat": repr(f.fit.params_hat.beta) if ok else "",
            "se_alpha": repr(f.fit.std_errors[0]) if ok else "",
            "se_beta": repr(f.fit.std_errors[1]) if ok else "",
            "exists": str(ok).lower(),
            "within_tie_fraction": repr(f.within_tie_fraction),
            "within_mutual_fraction": repr(f.within_mutual_fraction),
        }


def write_fits_csv(path, fits: Sequence[SubnetFit]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(fits_rows(fits))


def write_regression_csv(path, diag: RegimeDiagnostic):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["response", "slope", "intercept", "n_points", "n_excluded", "verdict"])
        for name, reg in (("alpha_hat", diag.slope_alpha), ("beta_hat", diag.slope_beta)):
            writer.writerow([name, repr(reg.slope), repr(reg.intercept), reg.n_points,
                             diag.n_excluded, diag.verdict])


# -- synthetic data ------------------------------------------------------------


def synthetic_hierarchy(
    sizes: Sequence[int],
    params: NaturalParams,
    variant: ModelVariant,
    seed,
    level: str = "block",
):
    """Disjoint union of independently sampled blocks, one label per block.

    Block ``k`` is drawn from ``Seed.generator(k)``.  Returns
    ``(network, table)`` with vertex ids ``v0, v1, ...``.
    """
    seed = as_seed(seed)
    edges, labels = [], []
    offset = 0
    for k, n in enumerate(sizes):
        block = sample_network(params, variant, n, seed.generator(k))
        edges.append(block.edges + offset)
        labels.extend([f"b{k:03d}"] * n)
        offset += n
    table = VertexTable(tuple(f"v{i}" for i in range(offset)), {level: tuple(labels)})
    return Network(offset, np.concatenate(edges) if edges else np.empty((0, 2))), table
