"""Piecewise linear functions of a scalar type on a closed interval.

Attacker value-to-go functions are piecewise linear in the type, so the
solver needs an exact segment representation that is closed under the
operations backward induction performs: affine shifts, convex mixtures,
restriction to a subinterval, concatenation, and upper envelopes with a
deterministic tie-break.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Hashable, Sequence

# Cut points closer than this are collapsed into one; envelope segments
# narrower than this are float dust, not real best-response regions.
MERGE_TOL = 1e-12

# Slack for domain-membership checks.
DOMAIN_TOL = 1e-9

# Candidates within this of the segment maximum count as tied.
TIE_TOL = 1e-11


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Piecewise linear function on [breakpoints[0], breakpoints[-1]].

    pieces[i] holds the (intercept, slope) of the affine piece valid on
    [breakpoints[i], breakpoints[i + 1]] in global coordinates, so the
    value at theta is intercept + slope * theta regardless of which
    segment theta falls in.
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        bps = tuple(float(b) for b in self.breakpoints)
        pcs = tuple((float(c), float(s)) for c, s in self.pieces)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pcs)
        if len(bps) < 2:
            raise ValueError("need at least two breakpoints")
        if len(bps) != len(pcs) + 1:
            raise ValueError("need exactly one piece per breakpoint interval")
        for lo, hi in zip(bps, bps[1:]):
            if not hi > lo:
                raise ValueError("breakpoints must be strictly increasing")

    @property
    def lo(self) -> float:
        return self.breakpoints[0]

    @property
    def hi(self) -> float:
        return self.breakpoints[-1]

    @classmethod
    def constant(cls, value: float, lo: float = 0.0, hi: float = 1.0) -> "PiecewiseLinearFn":
        return cls((lo, hi), ((value, 0.0),))

    @classmethod
    def affine(cls, intercept: float, slope: float, lo: float = 0.0, hi: float = 1.0) -> "PiecewiseLinearFn":
        return cls((lo, hi), ((intercept, slope),))

    def piece_index(self, theta: float) -> int:
        idx = bisect_right(self.breakpoints, theta) - 1
        return min(max(idx, 0), len(self.pieces) - 1)

    def piece_at(self, theta: float) -> tuple[float, float]:
        return self.pieces[self.piece_index(theta)]

    def __call__(self, theta: float) -> float:
        if theta < self.lo - DOMAIN_TOL or theta > self.hi + DOMAIN_TOL:
            raise ValueError(f"theta={theta} outside domain [{self.lo}, {self.hi}]")
        intercept, slope = self.piece_at(theta)
        return intercept + slope * theta

    def add_affine(self, intercept: float, slope: float) -> "PiecewiseLinearFn":
        return PiecewiseLinearFn(
            self.breakpoints,
            tuple((c + intercept, s + slope) for c, s in self.pieces),
        )

    def scale(self, factor: float) -> "PiecewiseLinearFn":
        return PiecewiseLinearFn(
            self.breakpoints,
            tuple((factor * c, factor * s) for c, s in self.pieces),
        )

    def restrict(self, lo: float, hi: float) -> "PiecewiseLinearFn":
        """Return the same function on the subinterval [lo, hi]."""
        if lo < self.lo - DOMAIN_TOL or hi > self.hi + DOMAIN_TOL or not hi > lo:
            raise ValueError(f"[{lo}, {hi}] is not a subinterval of [{self.lo}, {self.hi}]")
        lo = max(lo, self.lo)
        hi = min(hi, self.hi)
        inner = [b for b in self.breakpoints if lo + MERGE_TOL < b < hi - MERGE_TOL]
        bounds = [lo, *inner, hi]
        pieces = [self.piece_at(0.5 * (a + b)) for a, b in zip(bounds, bounds[1:])]
        return _assemble(bounds, pieces)


def _check_shared_domain(fns: Sequence[PiecewiseLinearFn]) -> tuple[float, float]:
    lo, hi = fns[0].lo, fns[0].hi
    for f in fns[1:]:
        if abs(f.lo - lo) > DOMAIN_TOL or abs(f.hi - hi) > DOMAIN_TOL:
            raise ValueError("functions must share a domain")
    return lo, hi


def _dedupe_points(points: Sequence[float], lo: float, hi: float) -> list[float]:
    # Collapses near-coincident cuts so no segment is narrower than MERGE_TOL;
    # the domain endpoints are always kept exactly.
    kept = [lo]
    for p in sorted(points):
        if p - kept[-1] > MERGE_TOL and hi - p > MERGE_TOL:
            kept.append(p)
    kept.append(hi)
    return kept


def _merged_grid(fns: Sequence[PiecewiseLinearFn], lo: float, hi: float) -> list[float]:
    interior: set[float] = set()
    for f in fns:
        interior.update(f.breakpoints[1:-1])
    return _dedupe_points(interior, lo, hi)


def _assemble(bounds: Sequence[float], pieces: Sequence[tuple[float, float]]) -> PiecewiseLinearFn:
    # Drops interior boundaries between identical consecutive pieces.
    out_bps = [bounds[0]]
    out_pcs: list[tuple[float, float]] = []
    for b_hi, piece in zip(bounds[1:], pieces):
        if out_pcs and piece == out_pcs[-1]:
            out_bps[-1] = b_hi
        else:
            out_bps.append(b_hi)
            out_pcs.append(piece)
    return PiecewiseLinearFn(tuple(out_bps), tuple(out_pcs))


def combine(fns: Sequence[PiecewiseLinearFn], weights: Sequence[float]) -> PiecewiseLinearFn:
    """Weighted sum of piecewise linear functions on a shared domain."""
    if not fns or len(fns) != len(weights):
        raise ValueError("need one weight per function")
    lo, hi = _check_shared_domain(fns)
    grid = _merged_grid(fns, lo, hi)
    pieces = []
    for g_lo, g_hi in zip(grid, grid[1:]):
        mid = 0.5 * (g_lo + g_hi)
        c = 0.0
        s = 0.0
        for w, f in zip(weights, fns):
            pc, ps = f.piece_at(mid)
            c += w * pc
            s += w * ps
        pieces.append((c, s))
    return _assemble(grid, pieces)


def stitch(fns: Sequence[PiecewiseLinearFn]) -> PiecewiseLinearFn:
    """Concatenate functions defined on abutting intervals."""
    fns = list(fns)
    if not fns:
        raise ValueError("need at least one function")
    bounds = list(fns[0].breakpoints)
    pieces = list(fns[0].pieces)
    for f in fns[1:]:
        if abs(f.lo - bounds[-1]) > DOMAIN_TOL:
            raise ValueError("functions must abut")
        for b in f.breakpoints[1:]:
            if not b > bounds[-1]:
                raise ValueError("breakpoints must advance across the junction")
            bounds.append(b)
        pieces.extend(f.pieces)
    return _assemble(bounds, pieces)


def upper_envelope(
    candidates: Sequence[tuple[Hashable, PiecewiseLinearFn]],
) -> tuple[PiecewiseLinearFn, tuple[tuple[float, float, Hashable], ...]]:
    """Pointwise maximum of keyed candidates with deterministic winners.

    The envelope is computed exactly: candidate breakpoints and pairwise
    crossing points cut the domain into segments on which every candidate
    is affine, and each segment's winner is decided at its midpoint.
    Candidates within TIE_TOL of the segment maximum are tied and the
    smallest key wins, so keys must be mutually comparable.

    Returns:
        A pair (envelope, regions). regions is a tuple of
        (lo, hi, key) triples covering the domain in order, with
        consecutive triples differing in key.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    keys = [k for k, _ in candidates]
    fns = [f for _, f in candidates]
    lo, hi = _check_shared_domain(fns)
    base = _merged_grid(fns, lo, hi)

    cuts: list[float] = []
    for g_lo, g_hi in zip(base, base[1:]):
        mid = 0.5 * (g_lo + g_hi)
        affines = [f.piece_at(mid) for f in fns]
        for i in range(len(affines)):
            ci, si = affines[i]
            for j in range(i + 1, len(affines)):
                cj, sj = affines[j]
                if si == sj:
                    continue
                t = (cj - ci) / (si - sj)
                if g_lo + MERGE_TOL < t < g_hi - MERGE_TOL:
                    cuts.append(t)
    grid = _dedupe_points(list(base[1:-1]) + cuts, lo, hi)

    seg_pieces: list[tuple[float, float]] = []
    seg_winners: list[Hashable] = []
    for g_lo, g_hi in zip(grid, grid[1:]):
        mid = 0.5 * (g_lo + g_hi)
        values = [c + s * mid for c, s in (f.piece_at(mid) for f in fns)]
        best = max(values)
        winner = min(k for k, v in zip(keys, values) if v >= best - TIE_TOL)
        idx = keys.index(winner)
        seg_pieces.append(fns[idx].piece_at(mid))
        seg_winners.append(winner)

    envelope = _assemble(grid, seg_pieces)

    regions: list[tuple[float, float, Hashable]] = []
    for (g_lo, g_hi), winner in zip(zip(grid, grid[1:]), seg_winners):
        if regions and regions[-1][2] == winner:
            regions[-1] = (regions[-1][0], g_hi, winner)
        else:
            regions.append((g_lo, g_hi, winner))
    return envelope, tuple(regions)
