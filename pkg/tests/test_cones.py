import math

import numpy as np
import pytest

from grpd.cones import (A_STAR_ARCS, Cap, CircInterval, ConeCell, ConeSet,
                        TWO_PI, Transversality, a_star_units, arcs_cover,
                        compose_direction_arcs, cone_contains, cone_product,
                        cone_product_bar, full_interval, hormander_gate,
                        merge_arcs, point_interval, transversality)
from grpd.catalog import empty_cone, point_cone, rotation_cone
from grpd.models import circle_group, pair_circle, pair_times_z

M = pair_circle(64)
G = circle_group(64)
Z = pair_times_z(16, 8)


# ---------------------------------------------------------------------------
# circular interval utilities
# ---------------------------------------------------------------------------

def test_interval_contains_and_wrap():
    iv = CircInterval(0.9, 0.2)        # wraps across 0
    assert iv.contains(0.95) and iv.contains(0.05) and not iv.contains(0.5)
    assert full_interval().contains(0.123)
    assert point_interval(0.25).contains(0.25) and not point_interval(0.25).contains(0.26)


def test_interval_intersection():
    a = CircInterval(0.9, 0.2)
    b = CircInterval(0.0, 0.5)
    pieces = a.intersect(b)
    assert len(pieces) == 1
    assert pieces[0].start == pytest.approx(0.0) and pieces[0].width == pytest.approx(0.1)
    # two-piece intersection
    a = CircInterval(0.0, 0.9)
    b = CircInterval(0.8, 0.4)          # [0.8, 1.2] wraps
    pieces = sorted(a.intersect(b), key=lambda p: p.start)
    assert len(pieces) == 2
    assert a.intersects(b)
    assert not CircInterval(0.0, 0.1).intersects(CircInterval(0.5, 0.1))


def test_merge_and_cover():
    arcs = [CircInterval(0.0, 1.0, TWO_PI), CircInterval(0.5, 1.0, TWO_PI)]
    merged = merge_arcs(arcs)
    assert len(merged) == 1 and merged[0].width == pytest.approx(1.5)
    target = CircInterval(0.2, 1.0, TWO_PI)
    assert arcs_cover(target, merged)
    assert not arcs_cover(CircInterval(0.2, 2.0, TWO_PI), merged)


# ---------------------------------------------------------------------------
# arc composition (pair-model closed form)
# ---------------------------------------------------------------------------

def _dense_outputs(arcs1, arcs2, k=400):
    out = []
    for a in arcs1:
        for al in np.linspace(0, a.width, max(2, int(a.width / (TWO_PI / k)) + 2)):
            alpha = (a.start + al) % TWO_PI
            u1, v1 = math.cos(alpha), math.sin(alpha)
            for b in arcs2:
                for bl in np.linspace(0, b.width, max(2, int(b.width / (TWO_PI / k)) + 2)):
                    beta = (b.start + bl) % TWO_PI
                    u2, v2 = math.cos(beta), math.sin(beta)
                    if abs(v1) < 1e-12 and abs(u2) < 1e-12:
                        for lam in np.linspace(0.05, 0.95, 5):
                            out.append(math.atan2(lam * v2, (1 - lam) * u1) % TWO_PI)
                    elif v1 * u2 < 0:
                        t = abs(v1) / abs(u2)
                        if u1 * u1 + (v2 * t) ** 2 > 1e-20:
                            out.append(math.atan2(v2 * t, u1) % TWO_PI)
    return out


def test_arc_composition_sound_against_dense_oracle():
    rng = np.random.default_rng(5)
    for _ in range(120):
        arcs1 = [CircInterval(rng.uniform(0, TWO_PI), rng.uniform(0, 2.2), TWO_PI)]
        arcs2 = [CircInterval(rng.uniform(0, TWO_PI), rng.uniform(0, 2.2), TWO_PI)]
        closed = compose_direction_arcs(arcs1, arcs2)
        for ang in _dense_outputs(arcs1, arcs2):
            assert any(a.contains(ang, 1e-9) for a in closed)


def test_conormal_arcs_idempotent():
    out = compose_direction_arcs(A_STAR_ARCS, A_STAR_ARCS)
    angles = sorted(a.start for a in out)
    assert angles == pytest.approx([3 * math.pi / 4, 7 * math.pi / 4])
    assert all(a.width == pytest.approx(0.0, abs=1e-12) for a in out)


# ---------------------------------------------------------------------------
# cone products
# ---------------------------------------------------------------------------

def test_rotation_cone_composition():
    c1 = rotation_cone(M, 0.25)
    c2 = rotation_cone(M, 0.125)
    prod = cone_product(c1, c2)
    target = rotation_cone(M, 0.375)
    assert cone_contains(target, prod, 1e-9, 2.0)
    assert cone_contains(prod, target, 1e-9, 2.01)


def test_disjoint_bases_empty_product():
    p1 = point_cone(M, 0.0, 0.0)
    p2 = point_cone(M, 0.5, 0.5)
    assert cone_product(p1, p2).is_empty
    assert hormander_gate(p1, p2)


def test_gate_refuses_touching_full_cones():
    p1 = point_cone(M, 0.0, 0.25)
    p2 = point_cone(M, 0.25, 0.5)
    assert not hormander_gate(p1, p2)


def test_gate_matching_kernel_pair():
    # W1 = {(0.1,0.4,0,eta)}, W2 = {(0.4,0.7,xi,0)} with eta = -xi pairing
    w1 = ConeSet(M, (ConeCell((point_interval(0.125), point_interval(0.375)),
                              arcs=(CircInterval(math.pi / 2, 0.0, TWO_PI),)),))
    w2 = ConeSet(M, (ConeCell((point_interval(0.375), point_interval(0.75)),
                              arcs=(CircInterval(math.pi, 0.0, TWO_PI),)),))
    assert not hormander_gate(w1, w2)
    # s-transversal W1 always passes the gate
    assert hormander_gate(rotation_cone(M, 0.25), w2)


def test_bar_product_zero_terms():
    full = point_cone(M, 0.0, 0.0)
    bar = cone_product_bar(full, empty_cone(M))
    assert len(bar.cells) == 1
    cell = bar.cells[0]
    assert cell.base[0].width == 0.0 and cell.base[1].is_full
    angles = sorted(a.start for a in cell.arcs)
    assert angles == pytest.approx([0.0, math.pi])
    # a conormal cone has no eta = 0 directions: its left zero-term vanishes
    assert cone_product_bar(rotation_cone(M, 0.25), empty_cone(M)).is_empty
    assert cone_product_bar(empty_cone(M), empty_cone(M)).is_empty


def test_a_star_units():
    ast = a_star_units(M)
    assert transversality(ast, Transversality.BI_TRANSVERSAL)
    prod = cone_product(ast, ast)
    assert cone_contains(ast, prod, 1e-9, 1.0)
    assert cone_contains(prod, ast, 1e-9, 2.01)
    astg = a_star_units(G)
    assert len(astg.cells) == 1 and astg.cells[0].signs == {1, -1}
    assert transversality(astg, Transversality.BI_TRANSVERSAL)


def test_transversality_examples():
    full = point_cone(M, 0.0, 0.0)
    assert not transversality(full, Transversality.R_TRANSVERSAL)
    assert not transversality(full, Transversality.S_TRANSVERSAL)
    assert transversality(rotation_cone(M, 0.25), Transversality.BI_TRANSVERSAL)
    # on a group every cone avoids the (trivial) anchor kernels
    assert transversality(point_cone(G, 0.25), Transversality.BI_TRANSVERSAL)


def test_heredity_needs_both_factors():
    # with both factors s-transversal the bar product is s-transversal;
    # a one-sided hypothesis fails through the 0 x W2 term
    w1 = rotation_cone(M, 0.25)
    w2 = ConeSet(M, (ConeCell((point_interval(0.25), point_interval(0.5)),
                              arcs=(CircInterval(math.pi / 2, 0.0, TWO_PI),)),))
    assert transversality(w1, Transversality.S_TRANSVERSAL)
    assert not transversality(w2, Transversality.S_TRANSVERSAL)
    bar = cone_product_bar(w1, w2)
    assert not transversality(bar, Transversality.S_TRANSVERSAL)
    from grpd.checks import check_cone_heredity
    res = check_cone_heredity(pairs=200, seed=4, n=64)
    assert res["violations"] == 0
    assert res["tested_s"] > 50 and res["tested_r"] > 50


def test_group_cone_product():
    c1 = ConeSet(G, (ConeCell((CircInterval(0.0, 0.25),), signs=frozenset({1})),))
    c2 = ConeSet(G, (ConeCell((CircInterval(0.5, 0.25),), signs=frozenset({1, -1})),))
    prod = cone_product(c1, c2)
    assert len(prod.cells) == 1
    cell = prod.cells[0]
    assert cell.signs == {1}
    assert cell.base[0].start == pytest.approx(0.5) and cell.base[0].width == pytest.approx(0.5)
    c3 = ConeSet(G, (ConeCell((CircInterval(0.5, 0.25),), signs=frozenset({-1})),))
    assert cone_product(c1, c3).is_empty


def test_ptz_a_star_idempotent():
    ast = a_star_units(Z)
    assert transversality(ast, Transversality.BI_TRANSVERSAL)
    prod = cone_product(ast, ast)
    assert not prod.is_empty
    assert cone_contains(ast, prod, 0.08, 1.0)


def test_ptz_gate_and_zero_terms():
    full = ConeSet.full_cone_at(Z, 0.0, 0.0, 0.0)
    full2 = ConeSet.full_cone_at(Z, 0.0, 0.5, 0.0)
    assert not hormander_gate(full, full2)       # matching base, full cones
    far = ConeSet.full_cone_at(Z, 0.5, 0.5, 0.5)
    assert hormander_gate(full, far)
    bar = cone_product_bar(full, empty_cone(Z))
    assert not bar.is_empty
    assert cone_product_bar(a_star_units(Z), empty_cone(Z)).is_empty


def test_cone_contains_examples():
    assert cone_contains(empty_cone(M), point_cone(M, 0, 0), 0.0, 0.0)
    ast = a_star_units(M)
    assert cone_contains(ast, ast, 0.0, 0.0)
    axis = ConeSet(M, (ConeCell((point_interval(0.0), point_interval(0.0)),
                                arcs=(CircInterval(0.0, 0.0, TWO_PI),)),))
    rot15 = ConeSet(M, (ConeCell((point_interval(0.0), point_interval(0.0)),
                                 arcs=(CircInterval(math.radians(15), 0.0, TWO_PI),)),))
    assert not cone_contains(axis, rot15, math.radians(10), 0.0)
    assert cone_contains(axis, rot15, math.radians(16), 0.0)


def test_cone_set_json_roundtrip():
    for cone in (a_star_units(M), rotation_cone(M, 0.25), a_star_units(G),
                 a_star_units(Z), point_cone(M, 0.25, 0.5)):
        back = ConeSet.from_json(cone.to_json())
        assert back.to_json() == cone.to_json()
        assert cone_contains(cone, back, 1e-12, 0.0)
        assert cone_contains(back, cone, 1e-12, 0.0)


def test_cap_composition_sound_against_dense_oracle():
    from grpd.cones import compose_direction_caps
    rng = np.random.default_rng(9)
    for _ in range(3):
        c1 = Cap(tuple(rng.standard_normal(3)), float(rng.uniform(0.05, 0.2)))
        c2 = Cap(tuple(rng.standard_normal(3)), float(rng.uniform(0.05, 0.2)))
        out = compose_direction_caps([c1], [c2])
        s1 = c1.samples(0.015)
        s2 = c2.samples(0.015)
        for _ in range(800):
            d1 = s1[rng.integers(0, len(s1))]
            d2 = s2[rng.integers(0, len(s2))]
            u1, v1, w1 = d1
            u2, v2, w2 = d2
            if v1 * u2 < 0:
                t = abs(v1) / abs(u2)
                vec = np.array([u1, v2 * t, w1 + w2 * t])
                nrm = np.linalg.norm(vec)
                if nrm > 1e-12:
                    vec = vec / nrm
                    assert any(c.contains(vec, 1e-9) for c in out)
