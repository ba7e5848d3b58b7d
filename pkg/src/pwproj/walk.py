"""Sampleable measures on piecewise projective groups and walk experiments.

Walks are simulated on the induced point orbit: only the current image of
the marked point is kept, never the full group product.  Configuration
values change exactly when the point enters the slope-change support of
the sampled increment, so value tracking is incremental and exact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .exactnum import (
    ExtendedPoint,
    QuadraticNumber,
)
from .piecewise import (
    Configuration,
    PiecewiseProjectiveMap,
    Prechain,
    configuration,
    pm_identity,
)

DEFAULT_FREEZE_BITS = 1500


# -- integer triple points for the walk hot path -----------------------------
#
# A walk point is (A, B, D, k) meaning (A + B*sqrt(k)) / D with D > 0,
# gcd(A, B, D) == 1 and B == 0 forcing k == 1.  One gcd per matrix apply
# instead of one per Fraction operation.


def _tp_norm(A: int, B: int, D: int, k: int):
    if D < 0:
        A, B, D = -A, -B, -D
    g = math.gcd(math.gcd(A, B), D)
    if g > 1:
        A //= g
        B //= g
        D //= g
    if B == 0:
        k = 1
    return (A, B, D, k)


def _tp_from_qn(x: QuadraticNumber):
    an, ad = x.a.numerator, x.a.denominator
    bn, bd = x.b.numerator, x.b.denominator
    lcm = ad * bd // math.gcd(ad, bd)
    return _tp_norm(an * (lcm // ad), bn * (lcm // bd), lcm, x.k)


def _tp_to_qn(p) -> QuadraticNumber:
    A, B, D, k = p
    return QuadraticNumber(Fraction(A, D), Fraction(B, D), k)


def _tp_key(p):
    A, B, D, k = p
    g1 = math.gcd(A, D)
    g2 = math.gcd(B, D)
    return (k, A // g1, D // g1, B // g2, D // g2)


def _tp_bits(p) -> int:
    A, B, D, _ = p
    return A.bit_length() + B.bit_length() + D.bit_length()


def _int_sign(x: int) -> int:
    return (x > 0) - (x < 0)


def _tp_sign2(u: int, v: int, k: int) -> int:
    # sign of u + v*sqrt(k)
    if v == 0:
        return _int_sign(u)
    if u == 0:
        return _int_sign(v)
    su, sv = _int_sign(u), _int_sign(v)
    if su == sv:
        return su
    return su * _int_sign(u * u - v * v * k)


def _tp_compare(p, q) -> int:
    A, B, D, k = p
    E, F, G, l = q
    u = A * G - E * D
    v = B * G
    w = -F * D
    if k == l:
        return _tp_sign2(u, v + w, k)
    if v == 0:
        return _tp_sign2(u, w, l)
    if w == 0:
        return _tp_sign2(u, v, k)
    sp = _tp_sign2(u, v, k)
    sc = _int_sign(w)
    if sp == 0:
        return sc
    if sp == sc:
        return sp
    return sp * _tp_sign2(u * u + v * v * k - w * w * l, 2 * u * v, k)


def _tp_apply(mat, p):
    a, b, c, d = mat
    A, B, D, k = p
    nA = a * A + b * D
    nB = a * B
    if c == 0:
        return _tp_norm(nA, nB, d * D, k)
    dA = c * A + d * D
    dB = c * B
    den = dA * dA - dB * dB * k
    if den == 0:
        raise ZeroDivisionError("walk point hit a piece pole")
    return _tp_norm(nA * dA - nB * dB * k, nB * dA - nA * dB, den, k)


class _FastMap:
    """Piecewise map compiled to integer-triple arithmetic."""

    __slots__ = ("breaks", "mats")

    def __init__(self, pm: PiecewiseProjectiveMap):
        self.breaks = [_tp_from_qn(b) for b in pm.breaks]
        self.mats = [(piece.a, piece.b, piece.c, piece.d) for piece in pm.pieces]

    def apply(self, tp):
        i = 0
        for br in self.breaks:
            if _tp_compare(tp, br) > 0:
                i += 1
            else:
                break
        return _tp_apply(self.mats[i], tp)


def _zeta_tail(s: float, n: int) -> float:
    # Euler-Maclaurin tail of sum_{j>n} j^-s
    return (
        n ** (1.0 - s) / (s - 1.0)
        - 0.5 * n**-s
        + s * n ** (-s - 1.0) / 12.0
    )


def _zeta(s: float, upto: int = 4096) -> float:
    return sum(j**-s for j in range(1, upto + 1)) + _zeta_tail(s, upto)


class PowerLawSampler:
    """Zeta-normalized law P(j) = j**-(1+alpha) / zeta(1+alpha) on j >= 1.

    Inverse-CDF sampling with an explicit table head and an analytic tail,
    so the support is genuinely unbounded (no truncation).
    """

    TABLE = 1 << 14

    def __init__(self, alpha: Fraction):
        if not (0 < alpha < 1):
            raise ValueError("alpha must lie in (0, 1)")
        self.alpha = alpha
        self.s = 1.0 + float(alpha)
        self.norm = _zeta(self.s)
        acc = 0.0
        table = []
        for j in range(1, self.TABLE + 1):
            acc += j**-self.s / self.norm
            table.append(acc)
        self._table = table

    def prob(self, j: int) -> float:
        return j**-self.s / self.norm

    def _cdf(self, j: int) -> float:
        if j <= self.TABLE:
            return self._table[j - 1]
        return 1.0 - _zeta_tail(self.s, j) / self.norm

    def sample_magnitude(self, rng: random.Random) -> int:
        u = rng.random()
        if u <= self._table[-1]:
            lo, hi = 0, self.TABLE - 1
            while lo < hi:
                mid = (lo + hi) // 2
                if self._table[mid] >= u:
                    hi = mid
                else:
                    lo = mid + 1
            return lo + 1
        lo = self.TABLE
        hi = 2 * lo
        while self._cdf(hi) < u and hi < 1 << 62:
            lo, hi = hi, hi * 2
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self._cdf(mid) >= u:
                hi = mid
            else:
                lo = mid + 1
        return hi

    def sample_signed(self, rng: random.Random) -> int:
        mag = self.sample_magnitude(rng)
        return mag if rng.random() < 0.5 else -mag


@dataclass
class TailSpec:
    """Heavy-tail component: powers of a base element with P(n) ~ |n|**-(1+alpha)."""

    base: PiecewiseProjectiveMap
    alpha: Fraction
    weight: Fraction


class GroupMeasure:
    """Finite atoms plus an optional heavy-tail cyclic part and smoothing."""

    def __init__(
        self,
        atoms: Sequence[Tuple[PiecewiseProjectiveMap, Fraction]],
        tail: Optional[TailSpec] = None,
        smoothing: bool = False,
    ):
        self.atoms = [(m, Fraction(w)) for m, w in atoms]
        self.tail = tail
        self.smoothing = smoothing
        total = sum(w for _, w in self.atoms)
        if tail is not None:
            total += tail.weight
        if total != 1:
            raise ValueError(f"weights must sum to 1, got {total}")
        if any(w <= 0 for _, w in self.atoms):
            raise ValueError("atom weights must be positive")
        self._cuts = []
        acc = Fraction(0)
        for _, w in self.atoms:
            acc += w
            self._cuts.append(float(acc))
        self._sampler = PowerLawSampler(tail.alpha) if tail is not None else None
        self._tail_powers: Dict[int, PiecewiseProjectiveMap] = {}

    def is_symmetric(self) -> bool:
        bag: Dict[PiecewiseProjectiveMap, Fraction] = {}
        for m, w in self.atoms:
            bag[m] = bag.get(m, Fraction(0)) + w
        return all(bag.get(m.inverse(), Fraction(0)) == w for m, w in bag.items())

    def _tail_power(self, n: int) -> PiecewiseProjectiveMap:
        cached = self._tail_powers.get(n)
        if cached is None:
            cached = self.tail.base.power(n)
            if len(self._tail_powers) < 4096:
                self._tail_powers[n] = cached
        return cached

    def _sample_once(self, rng: random.Random) -> Tuple[int, PiecewiseProjectiveMap]:
        """Returns (atom index or -1 for tail draws, element)."""
        u = rng.random()
        for i, cut in enumerate(self._cuts):
            if u < cut:
                return i, self.atoms[i][0]
        n = self._sampler.sample_signed(rng)
        return -1, self._tail_power(n)

    def sample(self, rng: random.Random) -> PiecewiseProjectiveMap:
        if not self.smoothing:
            return self._sample_once(rng)[1]
        count = _poisson_one(rng)
        out = pm_identity()
        for _ in range(count):
            out = self._sample_once(rng)[1] * out
        return out


def _poisson_one(rng: random.Random) -> int:
    # Knuth product method at rate 1
    limit = math.exp(-1.0)
    count = 0
    prod = rng.random()
    while prod > limit:
        count += 1
        prod *= rng.random()
    return count


def sample_increment(mu: GroupMeasure, rng: random.Random) -> PiecewiseProjectiveMap:
    return mu.sample(rng)


def point_mass(element: PiecewiseProjectiveMap) -> GroupMeasure:
    return GroupMeasure([(element, Fraction(1))])


def uniform_measure(elements: Sequence[PiecewiseProjectiveMap]) -> GroupMeasure:
    w = Fraction(1, len(elements))
    return GroupMeasure([(e, w) for e in elements])


def witness_measure(
    hs: PiecewiseProjectiveMap,
    companion: PiecewiseProjectiveMap,
    translation: PiecewiseProjectiveMap,
    epsilon: Fraction = Fraction(1, 4),
    alpha: Fraction = Fraction(4, 5),
) -> GroupMeasure:
    """Uniform atoms on the two bumps and inverses, heavy tail on a translation."""
    w = (1 - Fraction(epsilon)) / 4
    atoms = [
        (hs, w),
        (hs.inverse(), w),
        (companion, w),
        (companion.inverse(), w),
    ]
    return GroupMeasure(atoms, TailSpec(translation, Fraction(alpha), Fraction(epsilon)))


def trajectory_rng(master_seed: int, index: int) -> random.Random:
    """Splittable per-trajectory stream: stable across runs and platforms."""
    return random.Random(f"pwproj:{master_seed}:{index}")


# -- incremental configuration walk ----------------------------------------


@dataclass
class ConfigTracker:
    """State of the marked-point configuration value along one walk."""

    gamma: ExtendedPoint
    x: ExtendedPoint
    value: int = 0
    last_change: int = -1
    change_log: List[int] = field(default_factory=list)
    steps: int = 0
    frozen_at: Optional[int] = None


class _MeasureWalker:
    """Shared exact-step engine over interned orbit points.

    Walk points are integer triples (A + B sqrt(k)) / D.  Points with small
    coordinates are interned to dense ids with per-atom transition tables
    shared across trajectories; deeper points are handled verbatim until
    they shrink back or hit the freeze bound.  Configuration deltas can
    only occur at interned points because every slope-change support point
    of the measure is itself small.
    """

    RAW = -1

    def __init__(self, mu: GroupMeasure, s: ExtendedPoint):
        self.mu = mu
        self.s = s
        self.atom_confs: List[Configuration] = [
            configuration(m, s) for m, _ in mu.atoms
        ]
        if mu.tail is not None and not configuration(mu.tail.base, s).is_zero:
            raise ValueError("tail base must have empty configuration")
        entry_bits = [
            _tp_bits(_tp_from_qn(p))
            for conf in self.atom_confs
            for p in conf.points.values()
        ]
        self.share_bits = max(512, max(entry_bits, default=0) + 1)
        self.fast_atoms = [_FastMap(m) for m, _ in mu.atoms]
        self.cuts = list(mu._cuts)
        self.registry: Dict[tuple, int] = {}
        self.points: List[tuple] = []
        self.atom_trans: List[List[int]] = [[] for _ in mu.atoms]
        self.atom_delta: List[Dict[int, int]] = [dict() for _ in mu.atoms]
        self.tail_trans: Dict[Tuple[int, int], int] = {}
        self.tail_fast: Dict[int, _FastMap] = {}

    def intern(self, tp) -> int:
        key = _tp_key(tp)
        pid = self.registry.get(key)
        if pid is None:
            pid = len(self.points)
            self.registry[key] = pid
            self.points.append(tp)
            for trans in self.atom_trans:
                trans.append(self.RAW)
            for ai, conf in enumerate(self.atom_confs):
                val = conf.entries.get(key)
                if val:
                    self.atom_delta[ai][pid] = val
        return pid

    def state_for_point(self, point: ExtendedPoint):
        return self.state_for(_tp_from_qn(point))

    def state_for(self, tp):
        if _tp_bits(tp) <= self.share_bits:
            return self.intern(tp), tp
        return self.RAW, tp

    def _tail_apply(self, n: int, tp):
        fast = self.tail_fast.get(n)
        if fast is None:
            fast = _FastMap(self.mu._tail_power(n))
            if len(self.tail_fast) < 4096:
                self.tail_fast[n] = fast
        return fast.apply(tp)

    def step(self, state, rng: random.Random):
        """One mu-step: returns ((id, triple), delta)."""
        if self.mu.smoothing:
            count = _poisson_one(rng)
            delta = 0
            for _ in range(count):
                state, d = self._step_once(state, rng)
                delta += d
            return state, delta
        return self._step_once(state, rng)

    def _step_once(self, state, rng: random.Random):
        pid, tp = state
        u = rng.random()
        ai = -1
        for i, cut in enumerate(self.cuts):
            if u < cut:
                ai = i
                break
        if ai >= 0:
            if pid != self.RAW:
                delta = self.atom_delta[ai].get(pid, 0)
                nxt_id = self.atom_trans[ai][pid]
                if nxt_id != self.RAW:
                    return (nxt_id, self.points[nxt_id]), delta
                nxt = self.fast_atoms[ai].apply(tp)
                if _tp_bits(nxt) <= self.share_bits:
                    nid = self.intern(nxt)
                    self.atom_trans[ai][pid] = nid
                    return (nid, nxt), delta
                return (self.RAW, nxt), delta
            return self.state_for(self.fast_atoms[ai].apply(tp)), 0
        n = self.mu._sampler.sample_signed(rng)
        if pid != self.RAW:
            cache_key = (pid, n)
            nxt_id = self.tail_trans.get(cache_key)
            if nxt_id is not None:
                return (nxt_id, self.points[nxt_id]), 0
            nxt = self._tail_apply(n, tp)
            if _tp_bits(nxt) <= self.share_bits:
                nid = self.intern(nxt)
                if len(self.tail_trans) < (1 << 22):
                    self.tail_trans[cache_key] = nid
                return (nid, nxt), 0
            return (self.RAW, nxt), 0
        return self.state_for(self._tail_apply(n, tp)), 0


def simulate_config_walk(
    mu: GroupMeasure,
    s: ExtendedPoint,
    gamma: ExtendedPoint,
    steps: int,
    rng: random.Random,
    freeze_bits: Optional[int] = DEFAULT_FREEZE_BITS,
) -> ConfigTracker:
    """Track C_{g_n}(gamma) for the left walk g_{n+1} = h_n g_n, exactly.

    Only x_n = g_n(gamma) is kept.  When the exact coordinates of x_n
    exceed freeze_bits the trajectory is frozen: reaching any point where
    the configuration can still change would require shedding thousands
    of coordinate bits through a long exactly-cancelling move sequence,
    an event of vanishing probability; the walk is stopped there.
    """
    walker = _MeasureWalker(mu, s)
    return _run_config_walk(walker, gamma, steps, rng, freeze_bits)


def _run_config_walk(walker, gamma, steps, rng, freeze_bits):
    tracker = ConfigTracker(gamma=gamma, x=gamma)
    state = walker.state_for_point(gamma)
    raw = walker.RAW
    limit = freeze_bits if freeze_bits is not None else None
    for n in range(1, steps + 1):
        state, delta = walker.step(state, rng)
        if delta:
            tracker.value += delta
            tracker.last_change = n
            tracker.change_log.append(n)
        if limit is not None and state[0] == raw and _tp_bits(state[1]) > limit:
            tracker.frozen_at = n
            break
    tracker.steps = steps
    tracker.x = _tp_to_qn(state[1])
    return tracker


# -- returns ------------------------------------------------------------------


@dataclass
class ReturnsReport:
    horizons: List[int]
    means: List[float]
    stderrs: List[float]
    trajectories: int

    def as_dict(self):
        return {
            "horizons": self.horizons,
            "mean_returns": self.means,
            "stderr": self.stderrs,
            "trajectories": self.trajectories,
        }


def _run_chunked(trajectories: int, threads: int, chunk_fn):
    """Run per-trajectory work, optionally across threads.

    Each chunk gets independent state, and per-trajectory results are
    merged by index, so the output is identical for any thread count.
    """
    if threads <= 1:
        return chunk_fn(range(trajectories))
    from concurrent.futures import ThreadPoolExecutor

    spans = []
    size = (trajectories + threads - 1) // threads
    for lo in range(0, trajectories, size):
        spans.append(range(lo, min(lo + size, trajectories)))
    merged = {}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for part in pool.map(chunk_fn, spans):
            merged.update(part)
    return merged


def estimate_returns(
    walk_target: Union[GroupMeasure, "PrechainTreeModel"],
    start: ExtendedPoint,
    horizons: Sequence[int],
    trajectories: int,
    master_seed: int,
    freeze_bits: Optional[int] = DEFAULT_FREEZE_BITS,
    threads: int = 1,
) -> ReturnsReport:
    """Monte-Carlo mean visit counts to the start point at several horizons."""
    horizons = sorted(horizons)
    top = horizons[-1]

    def chunk(indices):
        out = {}
        if isinstance(walk_target, PrechainTreeModel):
            for t in indices:
                rng = trajectory_rng(master_seed, t)
                out[t] = walk_target.root_visits(top, rng, horizons)
            return out
        walker = _MeasureWalker(walk_target, start)
        start_tp = _tp_from_qn(start)
        start_id = walker.intern(start_tp)
        raw = walker.RAW
        for t in indices:
            rng = trajectory_rng(master_seed, t)
            state = (start_id, start_tp)
            hit = 0
            hi = 0
            frozen = False
            row = [0] * len(horizons)
            for n in range(1, top + 1):
                if not frozen:
                    state, _ = walker.step(state, rng)
                    if state[0] == start_id:
                        hit += 1
                    elif (
                        freeze_bits is not None
                        and state[0] == raw
                        and _tp_bits(state[1]) > freeze_bits
                    ):
                        frozen = True
                while hi < len(horizons) and horizons[hi] == n:
                    row[hi] = hit
                    hi += 1
            out[t] = row
        return out

    rows = _run_chunked(trajectories, threads, chunk)
    means, errs = [], []
    for hi in range(len(horizons)):
        col = [rows[t][hi] for t in range(trajectories)]
        m = sum(col) / trajectories
        var = sum((v - m) ** 2 for v in col) / max(trajectories - 1, 1)
        means.append(m)
        errs.append(math.sqrt(var / trajectories))
    return ReturnsReport(list(horizons), means, errs, trajectories)


class PrechainTreeModel:
    """Symbolic simple random walk on the certified prechain orbit graph.

    The graph of the orbit of b is a rooted binary tree inside [b, c]
    (children g^-1(x) and f(x), the root keeping a g-loop and the ray
    through f^-1) with a one-sided ray hanging off every vertex; the walk
    is simulated on that combinatorial model with integer state, which is
    exact and avoids unbounded coordinate growth.
    """

    def __init__(self, prechain: Prechain):
        self.prechain = prechain

    def root_visits(
        self, steps: int, rng: random.Random, horizons: Sequence[int]
    ) -> List[int]:
        horizons = sorted(horizons)
        parent: List[int] = [-1]
        left: List[int] = [-1]
        right: List[int] = [-1]
        is_left_child: List[bool] = [False]
        node = 0
        ray_depth = 0  # > 0 means on the ray attached at `node`
        visits = 0
        out: List[int] = []
        hi = 0
        rnd = rng.random
        for n in range(1, steps + 1):
            u = rnd()
            if ray_depth:
                # f-type rays (left children and root) move under f;
                # g-type rays (right children) move under g; other
                # generator loops in place. Outward with probability 1/4,
                # inward 1/4, loop 1/2 regardless of type.
                if u < 0.25:
                    ray_depth += 1
                elif u < 0.5:
                    ray_depth -= 1
            else:
                if node == 0:
                    # moves at the root: f -> right child, f^-1 -> ray,
                    # g and g^-1 are loops
                    if u < 0.25:
                        node = _child(right, node, parent, left, right, is_left_child, False)
                    elif u < 0.5:
                        ray_depth = 1
                elif is_left_child[node]:
                    # x in A: g -> parent, g^-1 -> left child, f -> right
                    # child, f^-1 -> ray
                    if u < 0.25:
                        node = parent[node]
                    elif u < 0.5:
                        node = _child(left, node, parent, left, right, is_left_child, True)
                    elif u < 0.75:
                        node = _child(right, node, parent, left, right, is_left_child, False)
                    else:
                        ray_depth = 1
                else:
                    # x in B: f^-1 -> parent, f -> right child,
                    # g^-1 -> left child, g -> ray
                    if u < 0.25:
                        node = parent[node]
                    elif u < 0.5:
                        node = _child(right, node, parent, left, right, is_left_child, False)
                    elif u < 0.75:
                        node = _child(left, node, parent, left, right, is_left_child, True)
                    else:
                        ray_depth = 1
            if node == 0 and ray_depth == 0:
                visits += 1
            while hi < len(horizons) and horizons[hi] == n:
                out.append(visits)
                hi += 1
        return out


def _child(table, node, parent, left, right, is_left_child, make_left):
    nxt = table[node]
    if nxt == -1:
        nxt = len(parent)
        parent.append(node)
        left.append(-1)
        right.append(-1)
        is_left_child.append(make_left)
        table[node] = nxt
    return nxt


# -- summability diagnostic ---------------------------------------------------


def summability_diagnostic(
    mu: GroupMeasure,
    s: ExtendedPoint,
    origin: ExtendedPoint,
    steps: int,
    trajectories: int,
    master_seed: int,
    freeze_bits: Optional[int] = DEFAULT_FREEZE_BITS,
) -> dict:
    """Per-step hit mass of the walk against the measure's slope supports.

    Reports the empirical probability that step n changes the value at the
    walking image of origin, its cumulative sum, and the exact l1 mass of
    the measure's configuration-support function restricted to atoms.
    """
    walker = _MeasureWalker(mu, s)
    raw = walker.RAW
    hits = [0] * (steps + 1)
    for t in range(trajectories):
        rng = trajectory_rng(master_seed, t)
        state = walker.state_for_point(origin)
        for n in range(1, steps + 1):
            state, delta = walker.step(state, rng)
            if delta:
                hits[n] += 1
            if (
                freeze_bits is not None
                and state[0] == raw
                and _tp_bits(state[1]) > freeze_bits
            ):
                break
    per_step = [h / trajectories for h in hits[1:]]
    cumulative = []
    acc = 0.0
    for v in per_step:
        acc += v
        cumulative.append(acc)
    l1_mass = sum(
        w * len(conf.entries)
        for (_, w), conf in zip(mu.atoms, walker.atom_confs)
    )
    return {
        "per_step_hit_mass": per_step,
        "cumulative": cumulative,
        "atom_l1_mass": str(l1_mass),
        "steps": steps,
        "trajectories": trajectories,
    }


# -- boundary non-triviality witness -------------------------------------------


def nontriviality_witness(
    mu: GroupMeasure,
    s: ExtendedPoint,
    steps: int,
    trajectories: int,
    master_seed: int,
    stabilization_fraction: float = 0.95,
    value_frequency: float = 0.10,
    freeze_bits: Optional[int] = DEFAULT_FREEZE_BITS,
    threads: int = 1,
) -> dict:
    """Empirical boundary witness from the marked-point configuration value.

    A run stabilizes when its value does not change after steps/2.  The
    witness succeeds when at least the given fraction stabilizes and at
    least two distinct stabilized values each carry the given frequency.
    """
    half = steps // 2

    def chunk(indices):
        walker = _MeasureWalker(mu, s)
        out = {}
        for t in indices:
            rng = trajectory_rng(master_seed, t)
            tracker = _run_config_walk(walker, s, steps, rng, freeze_bits)
            out[t] = (tracker.value, tracker.last_change, tracker.frozen_at)
        return out

    results = _run_chunked(trajectories, threads, chunk)
    histogram: Dict[int, int] = {}
    stabilized = 0
    frozen_runs = 0
    for t in range(trajectories):
        value, last_change, frozen_at = results[t]
        if frozen_at is not None:
            frozen_runs += 1
        if last_change <= half:
            stabilized += 1
            histogram[value] = histogram.get(value, 0) + 1
    stab_frac = stabilized / trajectories
    frequent = {
        v: c for v, c in histogram.items() if c / trajectories >= value_frequency
    }
    succeed = stab_frac >= stabilization_fraction and len(frequent) >= 2
    return {
        "steps": steps,
        "trajectories": trajectories,
        "stabilization_horizon": half,
        "stabilized_fraction": stab_frac,
        "value_histogram": {str(k): v for k, v in sorted(histogram.items())},
        "frequent_values": sorted(frequent),
        "frozen_runs": frozen_runs,
        "verdict": "SUCCEED" if succeed else "FAIL",
    }


# -- entropy ------------------------------------------------------------------


def entropy_estimate(
    mu: GroupMeasure, n: int, samples: int, master_seed: int
) -> dict:
    """Plug-in entropy of the n-step convolution from sampled products.

    Biased low for small sample counts; diagnostic only.
    """
    counts: Dict[str, int] = {}
    for t in range(samples):
        rng = trajectory_rng(master_seed, t)
        prod = pm_identity()
        for _ in range(n):
            prod = mu.sample(rng) * prod
        key = prod.to_text()
        counts[key] = counts.get(key, 0) + 1
    entropy = 0.0
    for c in counts.values():
        p = c / samples
        entropy -= p * math.log(p)
    return {
        "n": n,
        "samples": samples,
        "entropy_nats": entropy,
        "entropy_rate": entropy / n,
        "distinct_products": len(counts),
        "bias_note": "plug-in estimate, biased low",
    }


# -- lamplighter demonstration --------------------------------------------------


def lamplighter_demo(
    alpha: Fraction,
    steps: int,
    trajectories: int,
    master_seed: int,
    heavy_tail: bool = True,
    threads: int = 1,
) -> dict:
    """Wreath-product walk over Z with Z/2 lamps, tracking the origin lamp.

    Position increments are the symmetric zeta power law (heavy_tail=True)
    or simple +-1 steps (the recurrent control); each step is a coin flip
    between moving and toggling the lamp at the current position.
    """
    sampler = PowerLawSampler(Fraction(alpha)) if heavy_tail else None
    half = steps // 2

    def chunk(indices):
        out = {}
        for t in indices:
            rng = trajectory_rng(master_seed, t)
            pos = 0
            last_origin_toggle = -1
            for n in range(1, steps + 1):
                if rng.random() < 0.5:
                    if sampler is not None:
                        pos += sampler.sample_signed(rng)
                    else:
                        pos += 1 if rng.random() < 0.5 else -1
                else:
                    if pos == 0:
                        last_origin_toggle = n
            out[t] = last_origin_toggle
        return out

    results = _run_chunked(trajectories, threads, chunk)
    stabilized = 0
    toggles_after_half = 0
    for t in range(trajectories):
        if results[t] <= half:
            stabilized += 1
        else:
            toggles_after_half += 1
    return {
        "alpha": str(alpha) if heavy_tail else None,
        "heavy_tail": heavy_tail,
        "steps": steps,
        "trajectories": trajectories,
        "stabilization_horizon": half,
        "stabilized_fraction": stabilized / trajectories,
        "late_toggle_runs": toggles_after_half,
    }
