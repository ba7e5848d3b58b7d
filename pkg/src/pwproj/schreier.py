"""Labeled Schreier graphs of finitely many generators acting on an orbit.

For a 2-prechain pair the graph restricted to [b, c] is a rooted binary
tree (left child g^-1(x), right child f(x)) with one-sided rays hanging
outside; a doubly stochastic comparison kernel on the graph majorizes the
simple random walk and certifies transience.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exactnum import (
    ExtendedPoint,
    QuadraticNumber,
    canonical_key,
    point_to_text,
    qn_compare,
)
from .piecewise import PiecewiseProjectiveMap, Prechain, SortableQn


class StructureViolationError(AssertionError):
    def __init__(self, vertex, reason: str):
        super().__init__(f"structure violation at {vertex}: {reason}")
        self.vertex = vertex
        self.reason = reason


class PreconditionViolatedError(ValueError):
    pass


class NotARayError(ValueError):
    pass


_RAY_CAP = 1_000_000


@dataclass
class OrbitGraph:
    """BFS-enumerated orbit of a root point under generators and inverses."""

    generators: List[PiecewiseProjectiveMap]
    labels: List[str]
    root: tuple
    points: Dict[tuple, ExtendedPoint] = field(default_factory=dict)
    edges: List[Dict[tuple, tuple]] = field(default_factory=list)
    truncated: bool = False
    incomplete: set = field(default_factory=set)
    regions: Optional[Dict[tuple, str]] = None

    def order(self) -> int:
        return len(self.points)

    def neighbors(self, key: tuple) -> List[Tuple[str, tuple]]:
        out: List[Tuple[str, tuple]] = []
        for gi, emap in enumerate(self.edges):
            if key in emap:
                out.append((self.labels[gi], emap[key]))
        for gi, emap in enumerate(self.edges):
            for src, dst in emap.items():
                if dst == key:
                    out.append((self.labels[gi] + "^-1", src))
        return out

    def sorted_keys(self) -> List[tuple]:
        return [
            canonical_key(p)
            for p in sorted(self.points.values(), key=SortableQn)
        ]


def build_orbit_graph(
    gens: Sequence[PiecewiseProjectiveMap],
    root: ExtendedPoint,
    max_vertices: int,
    labels: Optional[Sequence[str]] = None,
) -> OrbitGraph:
    """Deterministic BFS orbit enumeration, stopping at the vertex cap."""
    if max_vertices < 1:
        raise ValueError("max_vertices must be at least 1")
    if labels is None:
        labels = [f"g{i}" for i in range(len(gens))]
    graph = OrbitGraph(
        generators=list(gens),
        labels=list(labels),
        root=canonical_key(root),
    )
    graph.edges = [dict() for _ in gens]
    graph.points[graph.root] = root
    inverses = [g.inverse() for g in gens]
    queue = [graph.root]
    qi = 0
    while qi < len(queue):
        key = queue[qi]
        qi += 1
        point = graph.points[key]
        for gi, gen in enumerate(gens):
            for mapped, forward in ((gen.apply(point), True), (inverses[gi].apply(point), False)):
                mkey = canonical_key(mapped)
                known = mkey in graph.points
                if not known:
                    if len(graph.points) >= max_vertices:
                        graph.truncated = True
                        graph.incomplete.add(key)
                        continue
                    graph.points[mkey] = mapped
                    queue.append(mkey)
                if forward:
                    graph.edges[gi][key] = mkey
                else:
                    graph.edges[gi][mkey] = key
    return graph


# -- 2-prechain structure ---------------------------------------------------


def _in_closed(x: ExtendedPoint, lo: QuadraticNumber, hi: QuadraticNumber) -> bool:
    return qn_compare(x, lo) >= 0 and qn_compare(x, hi) <= 0


def first_entry_steps(
    f: PiecewiseProjectiveMap,
    x: QuadraticNumber,
    lo: QuadraticNumber,
    hi: QuadraticNumber,
    cap: int = _RAY_CAP,
) -> int:
    """min(n >= 0 | f^n(x) in [lo, hi]) by exact iteration."""
    n = 0
    cur = x
    while not _in_closed(cur, lo, hi):
        cur = f.apply(cur)
        n += 1
        if n > cap:
            raise PreconditionViolatedError("iteration cap hit while entering [b, c]")
    return n


def attach_regions(graph: OrbitGraph, pre: Prechain) -> None:
    """Tag vertices as A, B, C inside [b, c] or Ray(label, index) outside."""
    f, g = pre.f, pre.g
    b, c = pre.b, pre.c
    g_inv_c = g.inverse().apply(c)
    f_b = f.apply(b)
    regions: Dict[tuple, str] = {}
    for key, p in graph.points.items():
        if _in_closed(p, b, g_inv_c):
            regions[key] = "A"
        elif _in_closed(p, f_b, c):
            regions[key] = "B"
        elif _in_closed(p, b, c):
            regions[key] = "C"
        elif qn_compare(p, b) < 0:
            n = first_entry_steps(f, p, b, c)
            regions[key] = f"Ray(f,{n})"
        else:
            n = first_entry_steps(g.inverse(), p, b, c)
            regions[key] = f"Ray(g,{n})"
    graph.regions = regions


@dataclass
class TreeReport:
    tree_vertices: int
    ray_vertices: int
    region_a: int
    region_b: int
    max_depth: int
    checked: int


def verify_tree_structure(
    graph: OrbitGraph,
    f: PiecewiseProjectiveMap,
    g: PiecewiseProjectiveMap,
    b: QuadraticNumber,
    c: QuadraticNumber,
) -> TreeReport:
    """Exact structure checks for the orbit graph of a 2-prechain root.

    Raises StructureViolationError with a counterexample vertex; truncated
    frontier vertices are skipped for checks that need their neighbors.
    """
    g_inv = g.inverse()
    f_inv = f.inverse()
    g_inv_c = g_inv.apply(c)
    f_b = f.apply(b)
    root_key = graph.root
    if graph.points[root_key] != b:
        raise PreconditionViolatedError("graph root is not b")

    inside: Dict[tuple, ExtendedPoint] = {
        k: p for k, p in graph.points.items() if _in_closed(p, b, c)
    }
    region_a = region_b = 0
    parent: Dict[tuple, tuple] = {}
    for key, p in inside.items():
        # (4) the middle gap C contains no orbit point
        if qn_compare(p, g_inv_c) > 0 and qn_compare(p, f_b) < 0:
            raise StructureViolationError(point_to_text(p), "orbit point inside C")
        if key == root_key:
            continue
        in_a = _in_closed(p, b, g_inv_c)
        if in_a:
            region_a += 1
            par = g.apply(p)
            # (3) left children leave [b, c] under f^-1
            esc = f_inv.apply(p)
            if _in_closed(esc, b, c):
                raise StructureViolationError(
                    point_to_text(p), "f^-1 keeps a left child inside [b, c]"
                )
        else:
            region_b += 1
            par = f_inv.apply(p)
            esc = g.apply(p)
            if _in_closed(esc, b, c):
                raise StructureViolationError(
                    point_to_text(p), "g keeps a right child inside [b, c]"
                )
        if not _in_closed(par, b, c):
            raise StructureViolationError(point_to_text(p), "parent left [b, c]")
        parent[key] = canonical_key(par)

    # (1) parent links reach the root without cycles: the subgraph is a tree
    depth: Dict[tuple, int] = {root_key: 0}
    max_depth = 0

    def _depth(k: tuple) -> int:
        chain = []
        cur = k
        while cur not in depth:
            chain.append(cur)
            if cur not in parent:
                raise StructureViolationError(str(cur), "parent chain leaves the graph")
            cur = parent[cur]
            if len(chain) > len(inside):
                raise StructureViolationError(str(k), "parent chain has a cycle")
        base = depth[cur]
        for i, node in enumerate(reversed(chain)):
            depth[node] = base + i + 1
        return depth[k]

    for key in inside:
        if key != root_key:
            max_depth = max(max_depth, _depth(key))

    # (2) two children inside [b, c] for every fully expanded tree vertex
    for key, p in inside.items():
        if key in graph.incomplete:
            continue
        for child, name in ((g_inv.apply(p), "g^-1"), (f.apply(p), "f")):
            if key == root_key and name == "g^-1":
                if child != p:
                    raise StructureViolationError(
                        point_to_text(p), "g does not fix the root"
                    )
                continue
            if not _in_closed(child, b, c):
                raise StructureViolationError(
                    point_to_text(p), f"{name} child left [b, c]"
                )
            ckey = canonical_key(child)
            if ckey not in graph.points:
                raise StructureViolationError(
                    point_to_text(p), f"{name} child missing from graph"
                )
            if parent.get(ckey) != key:
                raise StructureViolationError(
                    point_to_text(p), f"{name} child has a different parent"
                )
        # c itself never appears
        if p == c:
            raise StructureViolationError(point_to_text(p), "c is in the orbit graph")

    # (5) outside vertices sit on one-sided rays under a single generator
    ray_count = 0
    for key, p in graph.points.items():
        if key in inside:
            continue
        ray_count += 1
        if key in graph.incomplete:
            continue
        if qn_compare(p, b) < 0:
            if g.apply(p) != p:
                raise StructureViolationError(point_to_text(p), "g moves an f-ray point")
            first_entry_steps(f, p, b, c)
        else:
            if f.apply(p) != p:
                raise StructureViolationError(point_to_text(p), "f moves a g-ray point")
            first_entry_steps(g_inv, p, b, c)

    return TreeReport(
        tree_vertices=len(inside),
        ray_vertices=ray_count,
        region_a=region_a,
        region_b=region_b,
        max_depth=max_depth,
        checked=len(graph.points),
    )


# -- comparison kernel -------------------------------------------------------


_QUARTER = Fraction(1, 4)
_THREE_QUARTER = Fraction(3, 4)
_ZERO = Fraction(0)

_STEPS = (("f", 1), ("f", -1), ("g", 1), ("g", -1))


class ComparisonKernel:
    """Doubly stochastic symmetric kernel majorized by the prechain SRW.

    Weights: 1/4 for all four steps on [b, c]; on (a, b) the f-direction
    weights are (1/4, 3/4) for odd first-entry count and swapped for even,
    with g-steps zero; mirrored with g on (c, d).
    """

    def __init__(
        self,
        f: PiecewiseProjectiveMap,
        g: PiecewiseProjectiveMap,
        a: QuadraticNumber,
        b: QuadraticNumber,
        c: QuadraticNumber,
        d: QuadraticNumber,
    ):
        if g.apply(b) != b or f.apply(c) != c:
            raise PreconditionViolatedError("g must fix b and f must fix c")
        supp_f = f.support_intervals()
        supp_g = g.support_intervals()
        if supp_f != [(a, c)]:
            raise PreconditionViolatedError("supp(f) must be exactly (a, c)")
        if supp_g != [(b, d)]:
            raise PreconditionViolatedError("supp(g) must be exactly (b, d)")
        self.f = f
        self.g = g
        self.f_inv = f.inverse()
        self.g_inv = g.inverse()
        self.a, self.b, self.c, self.d = a, b, c, d
        self._entry_cache: Dict[tuple, int] = {}

    def _maps(self, label: str, direction: int) -> PiecewiseProjectiveMap:
        if label == "f":
            return self.f if direction > 0 else self.f_inv
        return self.g if direction > 0 else self.g_inv

    def _entry_count(self, x: QuadraticNumber) -> int:
        key = canonical_key(x)
        cached = self._entry_cache.get(key)
        if cached is None:
            if qn_compare(x, self.b) < 0:
                cached = first_entry_steps(self.f, x, self.b, self.c)
            else:
                cached = first_entry_steps(self.g_inv, x, self.b, self.c)
            self._entry_cache[key] = cached
        return cached

    def weight(self, x: QuadraticNumber, label: str, direction: int) -> Fraction:
        if _in_closed(x, self.b, self.c):
            return _QUARTER
        below = qn_compare(x, self.b) < 0
        if below:
            if qn_compare(x, self.a) <= 0:
                raise PreconditionViolatedError("point at or below a")
            if label == "g":
                return _ZERO
            odd = self._entry_count(x) % 2 == 1
            if direction > 0:
                return _QUARTER if odd else _THREE_QUARTER
            return _THREE_QUARTER if odd else _QUARTER
        if qn_compare(x, self.d) >= 0:
            raise PreconditionViolatedError("point at or beyond d")
        if label == "f":
            return _ZERO
        odd = self._entry_count(x) % 2 == 1
        if direction > 0:
            return _THREE_QUARTER if odd else _QUARTER
        return _QUARTER if odd else _THREE_QUARTER

    def row(self, x: QuadraticNumber) -> List[Tuple[str, int, ExtendedPoint, Fraction]]:
        out = []
        for label, direction in _STEPS:
            target = self._maps(label, direction).apply(x)
            out.append((label, direction, target, self.weight(x, label, direction)))
        return out

    def row_sum(self, x: QuadraticNumber) -> Fraction:
        return sum(w for _, _, _, w in self.row(x))

    def check_symmetry(self, x: QuadraticNumber) -> bool:
        """P(x, y) == P(y, x) along every step out of x (loops trivially ok)."""
        for label, direction, target, w in self.row(x):
            if target == x:
                continue
            back = self.weight(target, label, -direction)
            if back != w:
                return False
        return True


def comparison_kernel(
    f: PiecewiseProjectiveMap,
    g: PiecewiseProjectiveMap,
    a: QuadraticNumber,
    b: QuadraticNumber,
    c: QuadraticNumber,
    d: QuadraticNumber,
) -> ComparisonKernel:
    return ComparisonKernel(f, g, a, b, c, d)


# -- Foelner ratios along rays ------------------------------------------------


def foelner_ratio(graph: OrbitGraph, ray_start: tuple, length: int) -> Fraction:
    """|boundary(S)| / |S| for S the first `length` vertices out along a ray."""
    if graph.regions is None:
        raise NotARayError("graph has no region tags")
    tag = graph.regions.get(ray_start)
    if tag is None or not tag.startswith("Ray"):
        raise NotARayError(f"{ray_start} is not a ray vertex")
    label = tag[4]
    gi = graph.labels.index(label)
    outward = graph.edges[gi]
    if label == "f":
        # f-rays extend away from [b, c] through f^-1: walk edges backwards
        backward = {dst: src for src, dst in outward.items()}
        step = backward
    else:
        step = outward
    members = [ray_start]
    cur = ray_start
    for _ in range(length - 1):
        if cur not in step:
            raise NotARayError("ray shorter than requested length")
        cur = step[cur]
        members.append(cur)
    sset = set(members)
    boundary = set()
    for key in sset:
        for _, nb in graph.neighbors(key):
            if nb not in sset:
                boundary.add(nb)
    return Fraction(len(boundary), len(sset))


# -- export -------------------------------------------------------------------


_REGION_COLORS = {
    "A": "lightblue",
    "B": "lightgreen",
    "C": "red",
}


def export_dot(graph: OrbitGraph, path: str) -> None:
    """Deterministic DOT rendering with generator labels and region colors."""
    order = graph.sorted_keys()
    index = {key: i for i, key in enumerate(order)}
    lines = ["digraph orbit {"]
    for key in order:
        p = graph.points[key]
        attrs = [f'label="{point_to_text(p)}"']
        if graph.regions:
            tag = graph.regions.get(key, "")
            color = _REGION_COLORS.get(tag, "lightyellow" if tag.startswith("Ray") else None)
            if color:
                attrs.append(f'style=filled fillcolor="{color}"')
        if key == graph.root:
            attrs.append("shape=doublecircle")
        lines.append(f'  v{index[key]} [{" ".join(attrs)}];')
    for gi, emap in enumerate(graph.edges):
        label = graph.labels[gi]
        for src in order:
            if src in emap:
                dst = emap[src]
                lines.append(f'  v{index[src]} -> v{index[dst]} [label="{label}"];')
    lines.append("}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def export_csv(graph: OrbitGraph, path: str) -> None:
    """Adjacency dump: src_key, label, dst_key."""
    order = graph.sorted_keys()
    lines = ["src,label,dst"]
    for gi, emap in enumerate(graph.edges):
        label = graph.labels[gi]
        for src in order:
            if src in emap:
                lines.append(
                    f'"{point_to_text(graph.points[src])}",{label},'
                    f'"{point_to_text(graph.points[emap[src]])}"'
                )
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
