"""CVRPLIB instances: parsing, writing, and derivation of small sub-instances."""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleInstanceError, ParseError, StructureError, UnsupportedFormatError


class DerivationWarning(UserWarning):
    pass


def euc_2d(a, b) -> int:
    # TSPLIB EUC_2D: nearest integer, halves rounded up
    return int(math.floor(math.hypot(a[0] - b[0], a[1] - b[1]) + 0.5))


def distance_matrix(points) -> np.ndarray:
    m = len(points)
    d = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        for j in range(i + 1, m):
            d[i, j] = d[j, i] = euc_2d(points[i], points[j])
    return d


@dataclass(frozen=True, eq=False)
class Instance:
    """Depot at node 0, customers at nodes 1..n."""
    name: str
    depot: tuple
    coords: tuple  # customer points, index i-1 for node i
    demands: tuple
    K: int
    Q: int
    dist: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "depot", tuple(self.depot))
        object.__setattr__(self, "coords", tuple(tuple(p) for p in self.coords))
        object.__setattr__(self, "demands", tuple(int(q) for q in self.demands))
        if len(self.coords) != len(self.demands):
            raise StructureError("coordinate and demand counts differ")
        if self.dist is None:
            d = distance_matrix((self.depot,) + self.coords)
        else:
            d = np.array(self.dist, dtype=np.int64)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        self._validate()

    def _validate(self):
        n = self.n
        d = self.dist
        if d.shape != (n + 1, n + 1):
            raise StructureError(f"distance matrix shape {d.shape} does not match {n} customers")
        if not np.array_equal(d, d.T) or np.any(np.diag(d) != 0) or np.any(d < 0):
            raise StructureError("distance matrix must be symmetric, nonnegative, zero on the diagonal")
        if self.K < 1 or self.Q < 1:
            raise StructureError("vehicle count and capacity must be positive")
        if any(q < 0 for q in self.demands):
            raise StructureError("demands must be nonnegative")
        if n < self.K:
            raise InfeasibleInstanceError(f"{n} customers cannot occupy {self.K} vehicles")
        if sum(self.demands) > self.K * self.Q:
            raise InfeasibleInstanceError(
                f"total demand {sum(self.demands)} exceeds fleet capacity {self.K}*{self.Q}")
        if max(self.demands, default=0) > self.Q:
            raise InfeasibleInstanceError("a single demand exceeds the vehicle capacity")

    @property
    def n(self) -> int:
        return len(self.demands)

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    def demand(self, i: int) -> int:
        return self.demands[i - 1]

    @property
    def total_demand(self) -> int:
        return sum(self.demands)

    def points(self):
        return (self.depot,) + self.coords

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.name == other.name and self.depot == other.depot and self.coords == other.coords
                and self.demands == other.demands and self.K == other.K and self.Q == other.Q
                and np.array_equal(self.dist, other.dist))

    def __hash__(self):
        return hash((self.name, self.depot, self.coords, self.demands, self.K, self.Q))


_SECTIONS = ("NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION")


def vehicles_from_name(name: str):
    m = re.search(r"-k(\d+)$", name) or re.search(r"-k(\d+)(?!\d)", name)
    return int(m.group(1)) if m else None


def _number(tok, lineno):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", lineno) from None
    return int(v) if v.is_integer() else v


def parse_cvrplib(text, name: str | None = None) -> Instance:
    """Parse TSPLIB/CVRPLIB text; accepts a string or a readable stream."""
    if not isinstance(text, str):
        text = text.read()
    spec = {}
    coords, demands, depots = {}, {}, []
    order = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split()[0].rstrip(":")
        if head in _SECTIONS:
            section = head
            continue
        if ":" in line and not line[0].isdigit() and not line[0] == "-":
            key, _, val = line.partition(":")
            spec[key.strip().upper()] = val.strip()
            section = None
            continue
        toks = line.split()
        if section == "NODE_COORD_SECTION":
            if len(toks) != 3:
                raise ParseError("coordinate line needs 'id x y'", lineno)
            i = _number(toks[0], lineno)
            if i in coords:
                raise ParseError(f"node {i} listed twice", lineno)
            coords[i] = (_number(toks[1], lineno), _number(toks[2], lineno))
            order.append(i)
        elif section == "DEMAND_SECTION":
            if len(toks) != 2:
                raise ParseError("demand line needs 'id demand'", lineno)
            q = _number(toks[1], lineno)
            if not isinstance(q, int) or q < 0:
                raise ParseError(f"demand must be a nonnegative integer, got {toks[1]}", lineno)
            demands[_number(toks[0], lineno)] = q
        elif section == "DEPOT_SECTION":
            for t in toks:
                v = _number(t, lineno)
                if v == -1:
                    section = None
                    break
                depots.append(v)
        else:
            raise ParseError(f"unexpected content {line!r}", lineno)

    ewt = spec.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()
    if ewt != "EUC_2D":
        raise UnsupportedFormatError(f"edge weight type {ewt} is not supported (EUC_2D only)")
    name = spec.get("NAME", name or "unnamed")
    if "CAPACITY" not in spec:
        raise StructureError("missing CAPACITY")
    Q = int(spec["CAPACITY"])
    if not depots:
        raise StructureError("no depot given (DEPOT_SECTION missing or empty)")
    if len(depots) > 1:
        raise StructureError("multiple depots are not supported")
    dep = depots[0]
    if dep not in coords:
        raise StructureError(f"depot node {dep} has no coordinates")
    missing = [i for i in order if i not in demands]
    if missing:
        raise StructureError(f"nodes without demand: {missing[:5]}")
    if "DIMENSION" in spec and int(spec["DIMENSION"]) != len(order):
        raise StructureError(f"DIMENSION {spec['DIMENSION']} but {len(order)} coordinates")
    K = None
    for key in ("VEHICLES", "VEHICLE", "NUMBER_OF_VEHICLES"):
        if key in spec:
            K = int(spec[key])
    if K is None:
        K = vehicles_from_name(name)
    if K is None:
        raise StructureError("vehicle count missing: no VEHICLES field and no '-kN' name suffix")
    cust = [i for i in order if i != dep]
    return Instance(name=name, depot=coords[dep], coords=[coords[i] for i in cust],
                    demands=[demands[i] for i in cust], K=K, Q=Q)


def read_instance(path) -> Instance:
    path = Path(path)
    return parse_cvrplib(path.read_text(), name=path.stem)


def _fmt(v):
    return str(v) if isinstance(v, int) else repr(float(v))


def write_cvrplib(inst: Instance) -> str:
    lines = [
        f"NAME : {inst.name}",
        "TYPE : CVRP",
        f"DIMENSION : {inst.n + 1}",
        "EDGE_WEIGHT_TYPE : EUC_2D",
        f"CAPACITY : {inst.Q}",
        f"VEHICLES : {inst.K}",
        "NODE_COORD_SECTION",
    ]
    for i, p in enumerate(inst.points(), 1):
        lines.append(f"{i} {_fmt(p[0])} {_fmt(p[1])}")
    lines.append("DEMAND_SECTION")
    lines.append("1 0")
    for i, q in enumerate(inst.demands, 2):
        lines.append(f"{i} {q}")
    lines += ["DEPOT_SECTION", "1", "-1", "EOF", ""]
    return "\n".join(lines)


def save_instance(inst: Instance, path) -> Path:
    path = Path(path)
    path.write_text(write_cvrplib(inst))
    return path


def capacity_for(total_demand: int, K: int) -> int:
    # smallest-fleet capacity: ceil(total / (K-1)) - 1, so K-1 vehicles never suffice
    return -(-total_demand // (K - 1)) - 1


def derive_small_instances(base: Instance, block_size: int = 21, vehicles: int = 5) -> list:
    """Cut the base customers into consecutive blocks; each block's first node is its depot."""
    if block_size < vehicles + 1:
        raise ValueError("block_size must exceed the vehicle count")
    if vehicles < 2:
        raise ValueError("the capacity formula needs at least two vehicles")
    nodes = list(zip(base.coords, base.demands))
    if len(nodes) < block_size:
        raise ValueError(f"base has {len(nodes)} customer nodes, fewer than block_size {block_size}")
    out = []
    for b in range(len(nodes) // block_size):
        block = nodes[b * block_size:(b + 1) * block_size]
        depot = block[0][0]
        cust = block[1:]
        dem = [q for _, q in cust]
        Q = capacity_for(sum(dem), vehicles)
        name = f"{base.name}-blk{b + 1}"
        if Q < 1 or max(dem) > Q:
            warnings.warn(f"{name}: skipped, a demand exceeds the derived capacity {Q}", DerivationWarning)
            continue
        out.append(Instance(name=name, depot=depot, coords=[p for p, _ in cust], demands=dem,
                            K=vehicles, Q=Q))
    return out


def random_base_instance(n_customers: int, demand_range=(1, 100), seed: int = 0, name=None,
                         grid: int = 1000, vehicles: int = 5) -> Instance:
    """Uniform random points on an integer grid, uniform integer demands.

    Stands in for CVRPLIB base files when those are not at hand. The capacity follows the
    same rule as derived blocks (one vehicle's worth of slack), so the fleet always fits.
    """
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, grid + 1, size=(n_customers + 1, 2))
    lo, hi = demand_range
    dem = rng.integers(lo, hi + 1, size=n_customers)
    K = max(vehicles, 2)
    Q = max(int(dem.max()), capacity_for(int(dem.sum()), K))
    name = name or f"R{lo}-{hi}-n{n_customers + 1}-k{K}"
    return Instance(name=name, depot=tuple(int(v) for v in pts[0]),
                    coords=[tuple(int(v) for v in p) for p in pts[1:]],
                    demands=[int(q) for q in dem], K=K, Q=Q)
