"""Study metrics over fronts: cardinality, trade-off curves, overlap, hypervolume agreement,
edge similarity. Plain CSV and SVG writers, no plotting dependency."""
from __future__ import annotations

import bisect
import csv
import io
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from html import escape
from itertools import combinations

import numpy as np

from .equity import EquityFunction
from .errors import UsageError
from .model import Resource
from .pareto import ALL_SPECS, ObjectiveSpec, ParetoArchive, make_entry

# -- hypervolume ------------------------------------------------------------------------


def hypervolume(front, ref) -> float:
    """Area dominated by the (cost, balance) points and bounded by ref, both minimized.

    Points on or past the reference in either coordinate add nothing.
    """
    rc, rb = ref
    pts = sorted((c, b) for c, b in front if c < rc and b < rb)
    area = 0.0
    best = rb
    for c, b in pts:
        if b < best:
            area += float(rc - c) * float(best - b)
            best = b
    return area


def nadir(points) -> tuple:
    pts = list(points)
    return max(c for c, _ in pts), max(b for _, b in pts)


def lex_rank_points(entries, reference) -> list:
    """(cost, rank) with rank = 1 + number of reference Lex keys strictly better than the key."""
    keys = sorted(e.key for e in reference)
    return [(e.cost, bisect.bisect_left(keys, e.key) + 1) for e in entries]


def front_points(archive: ParetoArchive, reference: ParetoArchive | None = None) -> list:
    if archive.spec.function is EquityFunction.LEX:
        return lex_rank_points(archive.entries, reference if reference is not None else archive)
    return archive.points()


# -- cross agreement --------------------------------------------------------------------


def reevaluate(archive: ParetoArchive, spec: ObjectiveSpec) -> ParetoArchive:
    """The archive's solutions under another spec, dominated ones discarded."""
    out = ParetoArchive(spec)
    for e in sorted(archive.entries, key=lambda e: e.solution.canonical_key()):
        out.insert_entry(make_entry(e.solution, spec))
    return out


def agreement_cell(source: ParetoArchive, target: ParetoArchive):
    """Percent of the target front's hypervolume that the re-evaluated source front attains,
    both measured against the target's nadir; None when the target front has no area.
    Returns (value, clipped) where clipped flags a raw ratio above 100."""
    if source.spec == target.spec:
        return 100.0, False
    ref_pts = front_points(target)
    ref = nadir(ref_pts)
    base = hypervolume(ref_pts, ref)
    if base <= 0:
        return None, False
    re = reevaluate(source, target.spec)
    got = hypervolume(front_points(re, target), ref)
    pct = 100.0 * got / base
    return min(pct, 100.0), pct > 100.0 + 1e-9


@dataclass
class AgreementMatrix:
    specs: list
    cells: np.ndarray        # mean percent over instances where defined, nan if never defined
    defined: np.ndarray      # instances contributing to each cell
    undefined: int = 0       # (instance, cell) pairs skipped for a degenerate target front
    clipped: int = 0         # (instance, cell) pairs whose raw ratio exceeded 100

    def cell(self, a: ObjectiveSpec, b: ObjectiveSpec) -> float:
        return float(self.cells[self.specs.index(a), self.specs.index(b)])

    def _mean(self, same_resource: bool) -> float:
        vals = [self.cells[i, j] for i, a in enumerate(self.specs) for j, b in enumerate(self.specs)
                if i != j and (a.resource == b.resource) == same_resource and not math.isnan(self.cells[i, j])]
        return float(np.mean(vals)) if vals else math.nan

    def intra_mean(self) -> float:
        return self._mean(True)

    def inter_mean(self) -> float:
        return self._mean(False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source\\target"] + [s.label for s in self.specs])
        for i, s in enumerate(self.specs):
            w.writerow([s.label] + ["" if math.isnan(v) else f"{v:.2f}" for v in self.cells[i]])
        return buf.getvalue()


def cross_agreement(fronts_per_instance) -> AgreementMatrix:
    """fronts_per_instance: iterable of {spec: ParetoArchive}, one map per instance, each with
    the same specs. Row = source spec, column = target spec."""
    maps = list(fronts_per_instance)
    if not maps:
        raise UsageError("no instances to compare")
    specs = [s for s in ALL_SPECS if s in maps[0]]
    for m in maps:
        if set(m) != set(specs):
            raise UsageError("every instance needs the same set of fronts")
    S = len(specs)
    total = np.zeros((S, S))
    count = np.zeros((S, S), dtype=int)
    undefined = clipped = 0
    for m in maps:
        for i, a in enumerate(specs):
            for j, b in enumerate(specs):
                v, clip = agreement_cell(m[a], m[b])
                if v is None:
                    undefined += 1
                    continue
                clipped += clip
                total[i, j] += v
                count[i, j] += 1
    with np.errstate(invalid="ignore"):
        cells = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    np.fill_diagonal(cells, 100.0)
    return AgreementMatrix(specs, cells, count, undefined, clipped)


# -- overlap ----------------------------------------------------------------------------


def identity(entry, resource: Resource) -> tuple:
    return entry.cost, tuple(sorted(entry.solution.workloads(resource).values, reverse=True))


@dataclass
class OverlapReport:
    resource: Resource | None
    union_size: int
    counts: dict     # function -> {"A": n, "B": n, "C": n, "D": n}

    def shares(self, f) -> dict:
        return {k: v / self.union_size for k, v in self.counts[f].items()} if self.union_size else {}


def overlap_from_identities(members: dict, resource=None) -> OverlapReport:
    """members: function -> set of solution identities."""
    union = set().union(*members.values()) if members else set()
    counts = {}
    for f, mine in members.items():
        c = {"A": 0, "B": 0, "C": 0, "D": 0}
        for u in union:
            holders = sum(u in s for s in members.values())
            if u not in mine:
                c["D"] += 1
            elif holders == len(members):
                c["A"] += 1
            elif holders == 1:
                c["C"] += 1
            else:
                c["B"] += 1
        counts[f] = c
    return OverlapReport(resource, len(union), counts)


def overlap_categories(fronts_by_function: dict, resource: Resource) -> OverlapReport:
    members = {f: {identity(e, resource) for e in a} for f, a in fronts_by_function.items()}
    return overlap_from_identities(members, resource)


# -- edge similarity --------------------------------------------------------------------


def edge_similarity(a, b) -> float:
    if a.instance != b.instance:
        raise UsageError("edge similarity needs two solutions of the same instance")
    if a.K != b.K:
        raise UsageError("edge similarity needs the same number of routes")
    shared = Counter(a.edges()) & Counter(b.edges())
    return sum(shared.values()) / (a.instance.n + a.K)


HIST_BINS = 20


def histogram(percentages, bins: int = HIST_BINS) -> list:
    # counts per equal-width bin over [0, 100]; 100 falls in the last bin
    out = [0] * bins
    for p in percentages:
        out[min(int(p * bins / 100.0), bins - 1)] += 1
    return out


@dataclass
class SimilarityReport:
    all_pairs: list = field(default_factory=list)      # percentages
    consecutive: list = field(default_factory=list)
    empty: bool = False

    @property
    def all_median(self):
        return statistics.median(self.all_pairs) if self.all_pairs else None

    @property
    def consecutive_median(self):
        return statistics.median(self.consecutive) if self.consecutive else None

    def histograms(self, bins: int = HIST_BINS):
        return histogram(self.all_pairs, bins), histogram(self.consecutive, bins)


def similarity_distributions(front: ParetoArchive) -> SimilarityReport:
    sols = [e.solution for e in sorted(front.entries, key=lambda e: e.cost)]
    if len(sols) < 2:
        return SimilarityReport(empty=True)
    allp = [100.0 * edge_similarity(x, y) for x, y in combinations(sols, 2)]
    cons = [100.0 * edge_similarity(x, y) for x, y in zip(sols, sols[1:])]
    return SimilarityReport(allp, cons)


# -- trade-off and cardinality ----------------------------------------------------------


def tradeoff_normalize(front: ParetoArchive, cost_optimum) -> list:
    """(relative cost increase, balance scaled to [0, 1] over the front) per entry."""
    if cost_optimum is None or cost_optimum <= 0:
        raise UsageError("cost optimum must be positive")
    if not front.entries:
        raise UsageError("empty front")
    ys = [b for _, b in front.points()]
    lo, hi = min(ys), max(ys)
    span = hi - lo
    return [((e.cost - cost_optimum) / cost_optimum, 0.0 if span == 0 else float((y - lo) / span))
            for e, y in zip(front.entries, ys)]


def cardinality_table(fronts_per_instance) -> dict:
    """spec -> (mean, min, max) front size over instances."""
    sizes = {}
    for m in fronts_per_instance:
        for s, a in m.items():
            sizes.setdefault(s, []).append(len(a))
    return {s: (float(np.mean(v)), min(v), max(v)) for s, v in sizes.items()}


def cardinality_csv(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["spec", "mean", "min", "max"])
    for s in ALL_SPECS:
        if s in table:
            m, lo, hi = table[s]
            w.writerow([s.label, f"{m:.2f}", lo, hi])
    return buf.getvalue()


def overlap_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["resource", "function", "union", "A", "B", "C", "D"])
    for rep in reports:
        for f, c in rep.counts.items():
            w.writerow([rep.resource.tag if rep.resource else "", f.tag, rep.union_size,
                        c["A"], c["B"], c["C"], c["D"]])
    return buf.getvalue()


def similarity_csv(report: SimilarityReport, bins: int = HIST_BINS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "all_pairs", "consecutive"])
    ha, hc = report.histograms(bins)
    for i in range(bins):
        w.writerow([100 * i // bins, 100 * (i + 1) // bins, ha[i], hc[i]])
    return buf.getvalue()


def tradeoff_csv(rows) -> str:
    """rows: (instance, spec label, x, y)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "spec", "cost_increase", "balance_norm"])
    for inst, lab, x, y in rows:
        w.writerow([inst, lab, f"{x:.6f}", f"{y:.6f}"])
    return buf.getvalue()


# -- SVG --------------------------------------------------------------------------------

_W, _H, _M = 480, 320, 40


def _frame(title, body, xlabel="", ylabel=""):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'font-family="sans-serif" font-size="11">\n'
            f'<rect width="{_W}" height="{_H}" fill="white"/>\n'
            f'<text x="{_W / 2}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>\n'
            f'<line x1="{_M}" y1="{_H - _M}" x2="{_W - 10}" y2="{_H - _M}" stroke="black"/>\n'
            f'<line x1="{_M}" y1="{_H - _M}" x2="{_M}" y2="24" stroke="black"/>\n'
            f'<text x="{_W / 2}" y="{_H - 8}" text-anchor="middle">{escape(xlabel)}</text>\n'
            f'<text x="12" y="{_H / 2}" transform="rotate(-90 12 {_H / 2})" '
            f'text-anchor="middle">{escape(ylabel)}</text>\n'
            + body + "</svg>\n")


def svg_scatter(points, title="", xlabel="relative cost increase", ylabel="normalized balance") -> str:
    pts = list(points)
    xmax = max([x for x, _ in pts] + [1e-9])
    pw, ph = _W - _M - 10, _H - _M - 24
    dots = "".join(f'<circle cx="{_M + pw * x / xmax:.1f}" cy="{_H - _M - ph * y:.1f}" r="2" '
                   f'fill="steelblue" fill-opacity="0.6"/>\n' for x, y in pts)
    ticks = (f'<text x="{_W - 10}" y="{_H - _M + 14}" text-anchor="end">{xmax:.3g}</text>\n'
             f'<text x="{_M - 4}" y="28" text-anchor="end">1</text>\n')
    return _frame(title, ticks + dots, xlabel, ylabel)


def svg_stacked_bars(report: OverlapReport, title="") -> str:
    colors = {"A": "#1b9e77", "B": "#7570b3", "C": "#d95f02", "D": "#cccccc"}
    funcs = list(report.counts)
    pw, ph = _W - _M - 10, _H - _M - 24
    bw = pw / max(len(funcs), 1)
    body = []
    for k, f in enumerate(funcs):
        y = _H - _M
        for cat in "ABCD":
            share = report.counts[f][cat] / report.union_size if report.union_size else 0
            h = ph * share
            y -= h
            body.append(f'<rect x="{_M + k * bw + 4:.1f}" y="{y:.1f}" width="{bw - 8:.1f}" height="{h:.1f}" '
                        f'fill="{colors[cat]}"><title>{cat}: {report.counts[f][cat]}</title></rect>\n')
        body.append(f'<text x="{_M + (k + 0.5) * bw:.1f}" y="{_H - _M + 14}" text-anchor="middle">'
                    f'{escape(f.tag)}</text>\n')
    return _frame(title, "".join(body), "", "share of union")


def svg_histograms(report: SimilarityReport, title="", bins: int = HIST_BINS) -> str:
    ha, hc = report.histograms(bins)
    na, nc = max(sum(ha), 1), max(sum(hc), 1)
    fa = [v / na for v in ha]
    fc = [v / nc for v in hc]
    top = max(fa + fc + [1e-9])
    pw, ph = _W - _M - 10, _H - _M - 24
    bw = pw / bins
    body = []
    for i in range(bins):
        for off, frac, col in ((0, fa[i], "#999999"), (0.5, fc[i], "steelblue")):
            h = ph * frac / top
            body.append(f'<rect x="{_M + (i + off) * bw:.1f}" y="{_H - _M - h:.1f}" width="{bw / 2:.1f}" '
                        f'height="{h:.1f}" fill="{col}"/>\n')
    body.append(f'<text x="{_M}" y="{_H - _M + 14}">0%</text>'
                f'<text x="{_W - 10}" y="{_H - _M + 14}" text-anchor="end">100%</text>\n')
    return _frame(title, "".join(body), "shared edges (grey: all pairs, blue: consecutive)", "share of pairs")
