"""Conic subsets of T*G \\ 0 and the wave-front cone calculus.

A ConeSet is a finite union of cells.  Each cell is a product of a base
box (one closed circular interval per coordinate of G) and a conic
direction set on the unit sphere of covectors:

* dim 1 (circle group): a subset of {+1, -1};
* dim 2 (pair model):   a finite union of closed angle arcs in [0, 2pi);
* dim 3 (pair times Z): a finite set of spherical caps.

``cone_product`` implements m_Gamma((W1 x W2) cap Gamma^(2)) and
``cone_product_bar`` adds the two zero-section terms.  All direction
arithmetic produces over-approximations, never under-approximations, so
containment verdicts "subset of" stay sound.  On the pair model the arc
arithmetic is closed form: writing directions as angles, the composed
direction obeys tan(omega) = -tan(alpha) tan(beta) with the sign of
cos(omega) inherited from the first factor and the sign of sin(omega)
from the second, which is monotone on quadrant pieces, so interval hulls
are computed from corner evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelMismatchError, ModelUnsupportedError
from .models import GroupoidModel, Kind

TWO_PI = 2.0 * math.pi
SAMPLING_STEP = TWO_PI / 256.0     # angular step for non-closed-form models


# ---------------------------------------------------------------------------
# Circular intervals (shared by base boxes, period 1, and arcs, period 2pi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircInterval:
    """Closed interval [start, start+width] on a circle of given period."""

    start: float
    width: float
    period: float = 1.0

    def __post_init__(self):
        p = self.period
        w = min(max(float(self.width), 0.0), p)
        s = float(self.start) % p
        if w >= p:
            s, w = 0.0, p
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "width", w)

    @property
    def is_full(self) -> bool:
        return self.width >= self.period

    @property
    def end(self) -> float:
        return (self.start + self.width) % self.period

    def contains(self, x: float, tol: float = 0.0) -> bool:
        if self.is_full:
            return True
        off = (x - self.start) % self.period
        return off <= self.width + tol or off >= self.period - tol

    def dilate(self, eps: float) -> "CircInterval":
        if eps <= 0.0:
            return self
        return CircInterval(self.start - eps, self.width + 2.0 * eps, self.period)

    def intersect(self, other: "CircInterval") -> list["CircInterval"]:
        """Intersection as a list of 0, 1 or 2 closed intervals."""
        p = self.period
        if self.is_full:
            return [other]
        if other.is_full:
            return [self]
        out = []
        a = (other.start - self.start) % p
        # candidate placements of `other` relative to self: [a, a+w2] and the
        # wrapped copy starting at a - p
        for lo in (a, a - p):
            hi = lo + other.width
            s = max(lo, 0.0)
            e = min(hi, self.width)
            if e >= s - 1e-15:
                out.append(CircInterval(self.start + s, max(e - s, 0.0), p))
        # dedupe identical pieces
        uniq = []
        for iv in out:
            if not any(abs(iv.start - j.start) < 1e-12 and abs(iv.width - j.width) < 1e-12
                       for j in uniq):
                uniq.append(iv)
        return uniq

    def intersects(self, other: "CircInterval", tol: float = 0.0) -> bool:
        if self.is_full or other.is_full:
            return True
        a = (other.start - self.start) % self.period
        return (a <= self.width + tol
                or a + other.width >= self.period - tol)

    def minkowski(self, other: "CircInterval") -> "CircInterval":
        return CircInterval(self.start + other.start,
                            self.width + other.width, self.period)


def interval(lo: float, hi: float, period: float = 1.0) -> CircInterval:
    """Interval from lo to hi going counterclockwise (hi may wrap past lo;
    hi = lo + period means the full circle, hi = lo a point)."""
    width = (hi - lo) % period
    if width == 0.0 and hi != lo:
        width = period
    return CircInterval(lo, width, period)


def full_interval(period: float = 1.0) -> CircInterval:
    return CircInterval(0.0, period, period)


def point_interval(x: float, period: float = 1.0) -> CircInterval:
    return CircInterval(x, 0.0, period)


def merge_arcs(arcs: list[CircInterval]) -> list[CircInterval]:
    """Normalize a union of arcs: merge overlapping/touching ones."""
    arcs = [a for a in arcs if a is not None]
    if not arcs:
        return []
    p = arcs[0].period
    if any(a.is_full for a in arcs):
        return [full_interval(p)]
    evs = sorted((a.start, a.width) for a in arcs)
    merged: list[list[float]] = []
    for s, w in evs:
        if merged and s <= merged[-1][0] + merged[-1][1] + 1e-12:
            merged[-1][1] = max(merged[-1][1], s + w - merged[-1][0])
        else:
            merged.append([s, w])
    # wrap-around: last interval may spill past the period into the first
    if len(merged) > 1 and merged[-1][0] + merged[-1][1] >= p + merged[0][0] - 1e-12:
        first = merged.pop(0)
        merged[-1][1] = max(merged[-1][1], first[0] + first[1] + p - merged[-1][0])
    out = [CircInterval(s, w, p) for s, w in merged]
    if any(a.is_full for a in out):
        return [full_interval(p)]
    return out


def arcs_cover(target: CircInterval, avail: list[CircInterval], tol: float = 1e-12) -> bool:
    """True iff the union of ``avail`` covers the closed arc ``target``."""
    if target.width == 0.0:
        return any(a.contains(target.start, tol) for a in avail)
    pieces = []
    for a in avail:
        for piece in target.intersect(a):
            off = (piece.start - target.start) % target.period
            if off > target.width + 1e-9:   # wrapped artifact
                off -= target.period
            pieces.append((max(off, 0.0), min(off + piece.width, target.width)))
    pieces.sort()
    reach = 0.0
    for lo, hi in pieces:
        if lo > reach + tol:
            return False
        reach = max(reach, hi)
        if reach >= target.width - tol:
            return True
    return reach >= target.width - tol


# ---------------------------------------------------------------------------
# Direction sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cap:
    """Spherical cap on S^2: unit center + angular radius."""

    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        nrm = float(np.linalg.norm(c))
        if nrm < 1e-12:
            raise DomainError("cap center must be a nonzero vector")
        if abs(nrm - 1.0) > 1e-12:
            c = c / nrm
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "radius", float(min(max(self.radius, 0.0), math.pi)))

    def contains(self, d, tol: float = 0.0) -> bool:
        d = np.asarray(d, dtype=float)
        d = d / np.linalg.norm(d)
        ang = math.acos(min(1.0, max(-1.0, float(np.dot(d, self.center)))))
        return ang <= self.radius + tol

    def dilate(self, eps: float) -> "Cap":
        return Cap(self.center, self.radius + eps)

    def samples(self, step: float) -> np.ndarray:
        """Geodesic sample points covering the cap at resolution <= step."""
        c = np.asarray(self.center)
        if self.radius <= 1e-12:
            return c[None, :]
        # local tangent frame
        ref = np.array([0.0, 0.0, 1.0]) if abs(c[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        e1 = np.cross(c, ref)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(c, e1)
        pts = [c]
        nr = max(1, int(math.ceil(self.radius / step)))
        for i in range(1, nr + 1):
            r = self.radius * i / nr
            nphi = max(4, int(math.ceil(TWO_PI * math.sin(r) / step)))
            for j in range(nphi):
                phi = TWO_PI * j / nphi
                pts.append(math.cos(r) * c
                           + math.sin(r) * (math.cos(phi) * e1 + math.sin(phi) * e2))
        return np.asarray(pts)


# ---------------------------------------------------------------------------
# Cells and cone sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeCell:
    """base box (tuple of period-1 CircIntervals) x direction set."""

    base: tuple[CircInterval, ...]
    arcs: tuple[CircInterval, ...] = ()       # dim 2
    signs: frozenset = frozenset()            # dim 1
    caps: tuple[Cap, ...] = ()                # dim 3

    def is_empty(self) -> bool:
        return not (self.arcs or self.signs or self.caps)


@dataclass(frozen=True)
class ConeSet:
    model: GroupoidModel
    cells: tuple[ConeCell, ...] = ()

    def __post_init__(self):
        dim = self.model.dim
        cells = []
        for c in self.cells:
            if len(c.base) != dim:
                raise DomainError("base box dimension mismatch")
            if dim == 1 and (c.arcs or c.caps):
                raise DomainError("dim-1 cells carry sign sets")
            if dim == 2 and (c.signs or c.caps):
                raise DomainError("dim-2 cells carry arcs")
            if dim == 3 and (c.arcs or c.signs):
                raise DomainError("dim-3 cells carry caps")
            if dim == 2:
                c = ConeCell(c.base, tuple(merge_arcs(list(c.arcs))))
            if not c.is_empty():
                cells.append(c)
        object.__setattr__(self, "cells", tuple(cells))

    @property
    def is_empty(self) -> bool:
        return not self.cells

    # -- construction helpers -------------------------------------------

    @staticmethod
    def empty(model: GroupoidModel) -> "ConeSet":
        return ConeSet(model, ())

    @staticmethod
    def full_cone_at(model: GroupoidModel, *coords) -> "ConeSet":
        """All directions over a single base point."""
        base = tuple(point_interval(c) for c in coords)
        if model.dim == 1:
            return ConeSet(model, (ConeCell(base, signs=frozenset({1, -1})),))
        if model.dim == 2:
            return ConeSet(model, (ConeCell(base, arcs=(full_interval(TWO_PI),)),))
        caps = tuple(Cap(c, 1.3) for c in
                     [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)])
        return ConeSet(model, (ConeCell(base, caps=caps),))

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        cells = []
        for c in self.cells:
            d = {"base_box": [[iv.start, (iv.start + iv.width)] for iv in c.base]}
            if self.model.dim == 2:
                d["arcs"] = [[a.start, a.start + a.width] for a in c.arcs]
            elif self.model.dim == 1:
                d["signs"] = sorted(c.signs, reverse=True)
            else:
                d["caps"] = [[*cap.center, cap.radius] for cap in c.caps]
            cells.append(d)
        return {"model": self.model.to_json(), "cells": cells}

    @staticmethod
    def from_json(d: dict) -> "ConeSet":
        model = GroupoidModel.from_json(d["model"])
        cells = []
        for c in d["cells"]:
            base = tuple(interval(lo, hi) if hi != lo else point_interval(lo)
                         for lo, hi in c["base_box"])
            if model.dim == 2:
                arcs = tuple(CircInterval(lo, hi - lo, TWO_PI) for lo, hi in c["arcs"])
                cells.append(ConeCell(base, arcs=arcs))
            elif model.dim == 1:
                cells.append(ConeCell(base, signs=frozenset(c["signs"])))
            else:
                caps = tuple(Cap(tuple(v[:3]), v[3]) for v in c["caps"])
                cells.append(ConeCell(base, caps=caps))
        return ConeSet(model, tuple(cells))


# ---------------------------------------------------------------------------
# A*G \ 0 as a cone set
# ---------------------------------------------------------------------------

A_STAR_ARCS = (CircInterval(3.0 * math.pi / 4.0, 0.0, TWO_PI),
               CircInterval(7.0 * math.pi / 4.0, 0.0, TWO_PI))


def a_star_units(model: GroupoidModel) -> ConeSet:
    """The unit cone A*G \\ 0 in model coordinates."""
    if model.continuous:
        raise ModelUnsupportedError("a_star_units needs a grid model")
    k = model.kind
    n = model.n
    if k is Kind.PAIR_CIRCLE:
        cells = tuple(ConeCell((CircInterval(i / n, 1.0 / n),
                                CircInterval(i / n, 1.0 / n)), arcs=A_STAR_ARCS)
                      for i in range(n))
        return ConeSet(model, cells)
    if k is Kind.CIRCLE_GROUP:
        return ConeSet(model, (ConeCell((point_interval(0.0),),
                                        signs=frozenset({1, -1})),))
    caps = (Cap((1.0, -1.0, 0.0), 0.0), Cap((-1.0, 1.0, 0.0), 0.0))
    cells = []
    for i in range(n):
        for j in range(model.m_z):
            cells.append(ConeCell((CircInterval(i / n, 1.0 / n),
                                   CircInterval(i / n, 1.0 / n),
                                   CircInterval(j / model.m_z, 1.0 / model.m_z)),
                                  caps=caps))
    return ConeSet(model, tuple(cells))


# ---------------------------------------------------------------------------
# Transversality predicates and the Hormander gate
# ---------------------------------------------------------------------------

class Transversality:
    R_TRANSVERSAL = "R_TRANSVERSAL"
    S_TRANSVERSAL = "S_TRANSVERSAL"
    BI_TRANSVERSAL = "BI_TRANSVERSAL"


def _cell_meets_axis(cell: ConeCell, dim: int, axis_angles, cap_normal) -> bool:
    if dim == 1:
        # on a group the relevant kernel is the zero section only
        return False
    if dim == 2:
        return any(a.contains(t) for a in cell.arcs for t in axis_angles)
    nrm = np.asarray(cap_normal, dtype=float)
    for cap in cell.caps:
        if abs(math.asin(min(1.0, max(-1.0, float(np.dot(cap.center, nrm)))))) <= cap.radius:
            return True
    return False


def transversality(w: ConeSet, which: str) -> bool:
    """r-transversal: W avoids (ker dr)^perp = ker s_Gamma, etc."""
    dim = w.model.dim
    r_ok = not any(_cell_meets_axis(c, dim, (0.0, math.pi), (0.0, 1.0, 0.0))
                   for c in w.cells)
    s_ok = not any(_cell_meets_axis(c, dim, (math.pi / 2.0, 3.0 * math.pi / 2.0),
                                    (1.0, 0.0, 0.0))
                   for c in w.cells)
    if which == Transversality.R_TRANSVERSAL:
        return r_ok
    if which == Transversality.S_TRANSVERSAL:
        return s_ok
    if which == Transversality.BI_TRANSVERSAL:
        return r_ok and s_ok
    raise DomainError(f"unknown transversality kind {which!r}")


def hormander_gate(w1: ConeSet, w2: ConeSet) -> bool:
    """True iff W1 x W2 avoids ker m_Gamma = N*G^(2)."""
    if w1.model != w2.model:
        raise ModelMismatchError("cone sets on different models")
    k = w1.model.kind
    if k is Kind.CIRCLE_GROUP:
        return True
    if k is Kind.PAIR_CIRCLE:
        for c1 in w1.cells:
            for c2 in w2.cells:
                if not c1.base[1].intersects(c2.base[0]):
                    continue
                up1 = any(a.contains(math.pi / 2.0) for a in c1.arcs)
                dn1 = any(a.contains(3.0 * math.pi / 2.0) for a in c1.arcs)
                neg2 = any(a.contains(math.pi) for a in c2.arcs)
                pos2 = any(a.contains(0.0) for a in c2.arcs)
                if (up1 and neg2) or (dn1 and pos2):
                    return False
        return True
    if k is Kind.PAIR_TIMES_Z:
        mus = np.linspace(0.0, TWO_PI, 257)[:-1]
        for c1 in w1.cells:
            for c2 in w2.cells:
                if not (c1.base[1].intersects(c2.base[0])
                        and c1.base[2].intersects(c2.base[2])):
                    continue
                for mu in mus:
                    d1 = (0.0, math.cos(mu), math.sin(mu))
                    d2 = (-math.cos(mu), 0.0, -math.sin(mu))
                    if (any(cap.contains(d1, SAMPLING_STEP / 2) for cap in c1.caps)
                            and any(cap.contains(d2, SAMPLING_STEP / 2) for cap in c2.caps)):
                        return False
        return True
    raise ModelUnsupportedError("gate needs a grid model")


# ---------------------------------------------------------------------------
# Closed-form arc composition on the pair model
# ---------------------------------------------------------------------------

_QUADS = [(0.0, math.pi / 2.0), (math.pi / 2.0, math.pi),
          (math.pi, 3.0 * math.pi / 2.0), (3.0 * math.pi / 2.0, TWO_PI)]
_SIN_SIGN = (1, 1, -1, -1)
_COS_SIGN = (1, -1, -1, 1)


def _quadrant_pieces(arc: CircInterval):
    """Split an arc at the axis angles; yield ((lo, hi), quadrant)."""
    for q, (qlo, qhi) in enumerate(_QUADS):
        quad = CircInterval(qlo, qhi - qlo, TWO_PI)
        for piece in quad.intersect(arc):
            lo = piece.start
            hi = piece.start + piece.width
            if lo < qlo - 1e-12:   # wrapped representative
                lo += TWO_PI
                hi += TWO_PI
            yield (lo, hi), q


def _target_quadrant(xsign: int, ysign: int) -> int:
    return {(1, 1): 0, (-1, 1): 1, (-1, -1): 2, (1, -1): 3}[(xsign, ysign)]


def compose_direction_arcs(arcs1, arcs2) -> list[CircInterval]:
    """Directions of m_Gamma applied to cone pairs with directions in
    arcs1 x arcs2 (pair-model closed form, over-approximating)."""
    out: list[CircInterval] = []
    pieces1 = list(_quadrant_pieces_of_list(arcs1))
    pieces2 = list(_quadrant_pieces_of_list(arcs2))
    for (a_lo, a_hi), q1 in pieces1:
        s1 = _SIN_SIGN[q1]
        for (b_lo, b_hi), q2 in pieces2:
            s2 = _COS_SIGN[q2]
            if s1 != -s2:
                continue
            tq = _target_quadrant(_COS_SIGN[q1], _SIN_SIGN[q2])
            qlo = _QUADS[tq][0]
            corner_angles = []
            degenerate = False
            for alpha in (a_lo, a_hi):
                for beta in (b_lo, b_hi):
                    vx = math.cos(alpha) * abs(math.cos(beta))
                    vy = math.sin(beta) * abs(math.sin(alpha))
                    if vx * vx + vy * vy < 1e-24:
                        degenerate = True
                        break
                    corner_angles.append(math.atan2(vy, vx) % TWO_PI)
                if degenerate:
                    break
            if degenerate:
                out.append(CircInterval(qlo, math.pi / 2.0, TWO_PI))
                continue
            offs = []
            for th in corner_angles:
                off = (th - qlo) % TWO_PI
                if off > math.pi:          # fp wrap just below the quadrant
                    off -= TWO_PI
                offs.append(min(max(off, 0.0), math.pi / 2.0))
            out.append(CircInterval(qlo + min(offs), max(offs) - min(offs), TWO_PI))
    # axis-to-axis quadrant contributions: (u,0) in D1 with (0,v) in D2
    for a0 in (0.0, math.pi):
        if not any(a.contains(a0) for a in arcs1):
            continue
        for b0 in (math.pi / 2.0, 3.0 * math.pi / 2.0):
            if not any(a.contains(b0) for a in arcs2):
                continue
            tq = _target_quadrant(1 if math.cos(a0) > 0 else -1,
                                  1 if math.sin(b0) > 0 else -1)
            out.append(CircInterval(_QUADS[tq][0], math.pi / 2.0, TWO_PI))
    return merge_arcs(out)


def _quadrant_pieces_of_list(arcs):
    for a in arcs:
        yield from _quadrant_pieces(a)


# ---------------------------------------------------------------------------
# Cap composition on the 3-d model (sampled over-approximation)
# ---------------------------------------------------------------------------

def _norm(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    return v / n if n > 1e-14 else None


def compose_direction_caps(caps1, caps2, step: float = SAMPLING_STEP) -> list[Cap]:
    eps = math.sin(step)
    chunks: list[np.ndarray] = []
    for cap1 in caps1:
        s1 = cap1.samples(step)
        for cap2 in caps2:
            s2 = cap2.samples(step)
            u1, v1, w1 = s1[:, 0], s1[:, 1], s1[:, 2]
            u2, v2, w2 = s2[:, 0], s2[:, 1], s2[:, 2]
            mask = v1[:, None] * u2[None, :] < 0.0
            if mask.any():
                t = np.abs(v1)[:, None] / np.maximum(np.abs(u2)[None, :], 1e-300)
                ox = np.broadcast_to(u1[:, None], mask.shape)[mask]
                oy = (v2[None, :] * t)[mask]
                oz = (w1[:, None] + w2[None, :] * t)[mask]
                vecs = np.stack([ox, oy, oz], axis=1)
                nrm = np.linalg.norm(vecs, axis=1)
                keep = nrm > 1e-14
                chunks.append(vecs[keep] / nrm[keep][:, None])
            # two-parameter families where both matching components vanish:
            # the output cone is spanned by (u1,0,w1) and (0,v2,w2)
            for d1 in s1[np.abs(v1) <= eps]:
                a = _norm((d1[0], 0.0, d1[2]))
                for d2 in s2[np.abs(u2) <= eps]:
                    b = _norm((0.0, d2[1], d2[2]))
                    if a is None or b is None:
                        pts = [p for p in (a, b) if p is not None]
                        if pts:
                            chunks.append(np.asarray(pts))
                        continue
                    lam = np.linspace(0.0, 1.0, 17)[:, None]
                    arc = (1 - lam) * a[None, :] + lam * b[None, :]
                    nrm = np.linalg.norm(arc, axis=1)
                    keep = nrm > 1e-14
                    chunks.append(arc[keep] / nrm[keep][:, None])
    if not chunks:
        return []
    outs = np.concatenate(chunks, axis=0)
    # dedupe on a fine quantization grid, then cluster greedily
    _, first = np.unique(np.round(outs / (step / 3.0)).astype(np.int64),
                         axis=0, return_index=True)
    reps = outs[np.sort(first)]
    centers: list[np.ndarray] = []
    cos_step = math.cos(step)
    for v in reps:
        if not centers or float(np.max(np.asarray(centers) @ v)) < cos_step:
            centers.append(v)
    return [Cap(tuple(c), 2.0 * step) for c in centers]


# ---------------------------------------------------------------------------
# cone_product and cone_product_bar
# ---------------------------------------------------------------------------

def cone_product(w1: ConeSet, w2: ConeSet) -> ConeSet:
    """m_Gamma((W1 x W2) cap Gamma^(2)), zero covectors pruned."""
    if w1.model != w2.model:
        raise ModelMismatchError("cone sets on different models")
    model = w1.model
    k = model.kind
    cells = []
    if k is Kind.PAIR_CIRCLE:
        for c1 in w1.cells:
            for c2 in w2.cells:
                if not c1.base[1].intersects(c2.base[0]):
                    continue
                arcs = compose_direction_arcs(c1.arcs, c2.arcs)
                if arcs:
                    cells.append(ConeCell((c1.base[0], c2.base[1]), arcs=tuple(arcs)))
    elif k is Kind.CIRCLE_GROUP:
        for c1 in w1.cells:
            for c2 in w2.cells:
                signs = c1.signs & c2.signs
                if signs:
                    cells.append(ConeCell((c1.base[0].minkowski(c2.base[0]),),
                                          signs=signs))
    elif k is Kind.PAIR_TIMES_Z:
        for c1 in w1.cells:
            for c2 in w2.cells:
                if not (c1.base[1].intersects(c2.base[0])
                        and c1.base[2].intersects(c2.base[2])):
                    continue
                caps = compose_direction_caps(c1.caps, c2.caps)
                if caps:
                    zints = c1.base[2].intersect(c2.base[2])
                    for zi in zints:
                        cells.append(ConeCell((c1.base[0], c2.base[1], zi),
                                              caps=tuple(caps)))
    else:
        raise ModelUnsupportedError("cone products need a grid model")
    return ConeSet(model, tuple(cells))


def _zero_term_cells(w: ConeSet, side: str) -> list[ConeCell]:
    """Contributions of W x 0 (side='left') or 0 x W (side='right')."""
    model = w.model
    k = model.kind
    cells: list[ConeCell] = []
    if k is Kind.CIRCLE_GROUP:
        return cells    # s_Gamma/r_Gamma are injective on covectors here
    if k is Kind.PAIR_CIRCLE:
        for c in w.cells:
            if side == "left":
                hit = [a0 for a0 in (0.0, math.pi)
                       if any(a.contains(a0) for a in c.arcs)]
                if hit:
                    cells.append(ConeCell((c.base[0], full_interval(1.0)),
                                          arcs=tuple(CircInterval(a0, 0.0, TWO_PI)
                                                     for a0 in hit)))
            else:
                hit = [b0 for b0 in (math.pi / 2.0, 3.0 * math.pi / 2.0)
                       if any(a.contains(b0) for a in c.arcs)]
                if hit:
                    cells.append(ConeCell((full_interval(1.0), c.base[1]),
                                          arcs=tuple(CircInterval(b0, 0.0, TWO_PI)
                                                     for b0 in hit)))
        return cells
    if k is Kind.PAIR_TIMES_Z:
        normal = (0.0, 1.0, 0.0) if side == "left" else (1.0, 0.0, 0.0)
        nrm = np.asarray(normal)
        for c in w.cells:
            out_caps = []
            for cap in c.caps:
                tilt = abs(math.asin(min(1.0, max(-1.0, float(np.dot(cap.center, nrm))))))
                if tilt > cap.radius:
                    continue
                proj = np.asarray(cap.center) - float(np.dot(cap.center, nrm)) * nrm
                if np.linalg.norm(proj) < 1e-9:
                    # cap centered at the pole: take a covering of the circle
                    basis = [(1.0, 0.0, 0.0), (0.0, 0.0, 1.0),
                             (-1.0, 0.0, 0.0), (0.0, 0.0, -1.0)]
                    if side == "right":
                        basis = [(0.0, 1.0, 0.0), (0.0, 0.0, 1.0),
                                 (0.0, -1.0, 0.0), (0.0, 0.0, -1.0)]
                    out_caps += [Cap(b, math.pi / 3 + SAMPLING_STEP) for b in basis]
                else:
                    out_caps.append(Cap(tuple(proj), 2.0 * cap.radius + SAMPLING_STEP))
            if out_caps:
                if side == "left":
                    base = (c.base[0], full_interval(1.0), c.base[2])
                else:
                    base = (full_interval(1.0), c.base[1], c.base[2])
                cells.append(ConeCell(base, caps=tuple(out_caps)))
        return cells
    raise ModelUnsupportedError("cone products need a grid model")


def cone_product_bar(w1: ConeSet, w2: ConeSet) -> ConeSet:
    """W1 *bar W2 = m_Gamma((W1xW2 u W1x0 u 0xW2) cap Gamma^(2))."""
    core = cone_product(w1, w2)
    cells = list(core.cells)
    cells += _zero_term_cells(w1, "left")
    cells += _zero_term_cells(w2, "right")
    return ConeSet(w1.model, tuple(cells))


# ---------------------------------------------------------------------------
# Containment
# ---------------------------------------------------------------------------

def _base_grid_points(cell: ConeCell, model: GroupoidModel) -> list[tuple[float, ...]]:
    """Grid points (plus box corners) inside the cell's base box."""
    shape = model.grid_shape
    axes = []
    for i, iv in enumerate(cell.base):
        n = shape[i]
        if iv.is_full:
            vals = [k / n for k in range(n)]
        else:
            k0 = math.ceil(iv.start * n - 1e-9)
            k1 = math.floor((iv.start + iv.width) * n + 1e-9)
            vals = [(k % n) / n for k in range(k0, k1 + 1)]
            vals += [iv.start % 1.0, (iv.start + iv.width) % 1.0]
        axes.append(sorted(set(vals)))
    pts = [()]
    for vals in axes:
        pts = [p + (v,) for p in pts for v in vals]
    return pts


def cone_contains(a: ConeSet, b: ConeSet, angular_tol: float,
                  base_tol_cells: float) -> bool:
    """True iff every cell of A is covered by B dilated by the tolerances.

    ``base_tol_cells`` dilates B's base boxes by that many grid cells per
    axis; ``angular_tol`` dilates B's direction sets.
    """
    if a.model != b.model:
        raise ModelMismatchError("cone sets on different models")
    model = a.model
    dim = model.dim
    shape = model.grid_shape
    for cell in a.cells:
        for pt in _base_grid_points(cell, model):
            avail_arcs, avail_signs, avail_caps = [], set(), []
            for bc in b.cells:
                ok = all(bc.base[i].dilate(base_tol_cells / shape[i]).contains(pt[i], 1e-12)
                         for i in range(dim))
                if not ok:
                    continue
                avail_arcs += [arc.dilate(angular_tol) for arc in bc.arcs]
                avail_signs |= set(bc.signs)
                avail_caps += [cap.dilate(angular_tol) for cap in bc.caps]
            if dim == 1:
                if not cell.signs <= avail_signs:
                    return False
            elif dim == 2:
                merged = merge_arcs(avail_arcs)
                if not all(arcs_cover(t, merged) for t in cell.arcs):
                    return False
            else:
                for cap in cell.caps:
                    for d in cap.samples(max(angular_tol / 4.0, 1e-3)):
                        if not any(c.contains(d) for c in avail_caps):
                            return False
    return True
