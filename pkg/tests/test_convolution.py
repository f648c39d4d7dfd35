import numpy as np
import pytest

from grpd.catalog import empty_cone, point_cone, rotation_layer
from grpd.checks import distribution_distance
from grpd.convolution import (GOperator, apply_operator, convolve, convolve_gated,
                              equivariance_defect, module_property_check,
                              push_product, recover_kernel, right_translate)
from grpd.distributions import (TestFunction, make_layer, point_mass,
                                smooth_distribution, star_involution,
                                tensor_restrict, unit_delta)
from grpd.convolution import apply_operator
from grpd.errors import ConeConditionError, ModelMismatchError
from grpd.models import Element, circle_group, pair_circle
from grpd.spectral import band_limited_field

N = 64
M = pair_circle(N)
G = circle_group(N)
RNG = np.random.default_rng(21)


def rand_smooth(model, band=4, rng=None):
    rng = rng or RNG
    return smooth_distribution(model, band_limited_field(model.grid_shape, band,
                                                         rng, real=False))


def rand_layer(model, theta=0.25, order=1, rng=None):
    rng = rng or RNG
    if model.kind.value == "PAIR_CIRCLE":
        return make_layer(model, theta, band_limited_field((model.n,), 4, rng,
                                                           real=False), order)
    return make_layer(model, theta, 1.5 - 0.5j, order)


def test_rank_one_convolution():
    rng = np.random.default_rng(4)
    f, g, h, k = (band_limited_field((N,), 3, rng, real=False) for _ in range(4))
    u = smooth_distribution(M, np.outer(f, g))
    v = smooth_distribution(M, np.outer(h, k))
    w = convolve(u, v)
    oracle = np.mean(g * h) * np.outer(f, k)
    assert np.max(np.abs(w.smooth - oracle)) < 1e-12


def test_delta_is_two_sided_unit():
    delta = unit_delta(M)
    for u in (rand_smooth(M), rand_layer(M), rand_smooth(M) + rand_layer(M)):
        assert distribution_distance(convolve(delta, u), u) == 0.0
        assert distribution_distance(convolve(u, delta), u) == 0.0
    dg = unit_delta(G)
    for u in (rand_smooth(G), rand_layer(G)):
        assert distribution_distance(convolve(dg, u), u) == 0.0
        assert distribution_distance(convolve(u, dg), u) == 0.0


def test_group_point_masses_add():
    da = make_layer(G, 0.25, 1.0, 0)
    db = make_layer(G, 0.5, 1.0, 0)
    dc = convolve(da, db)
    assert len(dc.layers) == 1
    assert dc.layers[0].section == int(0.75 * N)
    assert complex(dc.layers[0].coeffs) == 1.0
    assert dc.layers[0].order == 0


@pytest.mark.parametrize("n", [64, 128, 256])
def test_point_mass_convolution_quadrature_weight(n):
    m = pair_circle(n)
    u1 = point_mass(m, 0.0, 0.25)
    u2 = point_mass(m, 0.25, 0.5)
    w = convolve(u1, u2)
    expected = np.zeros((n, n))
    expected[0, n // 2] = 1.0 / n
    assert np.max(np.abs(w.smooth - expected)) < 1e-15


def test_pair_model_matches_dense_matrix_exactly():
    u = rand_smooth(M)
    v = rand_smooth(M)
    w = convolve(u, v)
    assert np.array_equal(w.smooth, (u.smooth @ v.smooth) / N)


def test_associativity_all_mixtures():
    rng = np.random.default_rng(9)
    for model in (M, G):
        fac = {"s": rand_smooth(model, rng=rng), "l": rand_layer(model, rng=rng)}
        for a in "sl":
            for b in "sl":
                for c in "sl":
                    lhs = convolve(convolve(fac[a], fac[b]), fac[c])
                    rhs = convolve(fac[a], convolve(fac[b], fac[c]))
                    assert distribution_distance(lhs, rhs) < 1e-9, (model.kind, a, b, c)


def test_involution_antihomomorphism():
    for model in (M, G):
        u = rand_smooth(model) + rand_layer(model)
        v = rand_smooth(model, band=3)
        lhs = star_involution(convolve(u, v))
        rhs = convolve(star_involution(v), star_involution(u))
        assert distribution_distance(lhs, rhs) < 1e-10


def test_model_mismatch():
    with pytest.raises(ModelMismatchError):
        convolve(rand_smooth(M), rand_smooth(G))


# ---------------------------------------------------------------------------
# gated route
# ---------------------------------------------------------------------------

def test_gate_failure_raises():
    u1 = point_mass(M, 0.0, 0.25)
    u2 = point_mass(M, 0.25, 0.5)
    with pytest.raises(ConeConditionError):
        convolve_gated(u1, u2, point_cone(M, 0.0, 0.25), point_cone(M, 0.25, 0.5))


def test_disjoint_point_masses_zero_product():
    u1 = point_mass(M, 0.0, 0.0)
    u2 = point_mass(M, 0.5, 0.5)
    w, predicted = convolve_gated(u1, u2, point_cone(M, 0.0, 0.0),
                                  point_cone(M, 0.5, 0.5))
    assert float(np.max(np.abs(w.smooth_or_zero()))) < 1e-15
    assert not predicted.is_empty      # zero-section terms survive in the bound


def test_both_routes_agree():
    rng = np.random.default_rng(17)
    cases = [(rand_smooth(M, rng=rng), rand_smooth(M, rng=rng)),
             (rand_layer(M, rng=rng), rand_smooth(M, rng=rng)),
             (rand_smooth(M, rng=rng), rand_layer(M, rng=rng)),
             (rand_layer(M, 0.25, 1, rng), rand_layer(M, 0.125, 1, rng))]
    for u, v in cases:
        direct = convolve(u, v)
        pushed = push_product(tensor_restrict(u, v))
        assert distribution_distance(direct, pushed) < 1e-9
    # smooth x smooth through the gate itself
    u, v = rand_smooth(M, rng=rng), rand_smooth(M, rng=rng)
    w, _ = convolve_gated(u, v, empty_cone(M), empty_cone(M))
    assert distribution_distance(w, convolve(u, v)) < 1e-9


def test_group_routes_agree():
    u, v = rand_smooth(G), rand_layer(G)
    assert distribution_distance(convolve(u, v),
                                 push_product(tensor_restrict(u, v))) < 1e-9


# ---------------------------------------------------------------------------
# G-operators
# ---------------------------------------------------------------------------

def test_apply_operator_examples():
    f = TestFunction.random_band_limited(M, 4, RNG, real=False)
    assert np.max(np.abs(apply_operator(GOperator(unit_delta(M)), f).values
                         - f.values)) == 0.0
    # first-order unit-section layer acts as the fiber derivative
    p = GOperator(make_layer(M, 0.0, np.ones(N), 1))
    fy = TestFunction.from_function(M, lambda x, y: np.sin(2 * np.pi * x))
    out = apply_operator(p, fy).values
    x = np.arange(N) / N
    oracle = -2 * np.pi * np.cos(2 * np.pi * x)[:, None] * np.ones((1, N))
    assert np.max(np.abs(out - oracle)) < 1e-6
    # smooth kernel equals the dense matrix product
    k = rand_smooth(M)
    out = apply_operator(GOperator(k), f).values
    assert np.max(np.abs(out - (k.smooth @ f.values) / N)) < 1e-12


def test_module_property():
    g = TestFunction.random_band_limited(M, 4, RNG, real=False)
    for kernel in (unit_delta(M), rand_layer(M), rand_smooth(M)):
        assert module_property_check(GOperator(kernel), g) < 1e-9
    assert module_property_check(GOperator(unit_delta(M)), g) == 0.0


def test_equivariance_defect():
    f = TestFunction.random_band_limited(M, 4, RNG, real=False)
    gamma = Element(M, (13, 42))
    for kernel in (unit_delta(M), rand_layer(M)):
        assert equivariance_defect(GOperator(kernel), gamma, f) == 0.0
    assert equivariance_defect(GOperator(rand_smooth(M)), gamma, f) < 1e-12
    fg = TestFunction.random_band_limited(G, 4, RNG, real=False)
    assert equivariance_defect(GOperator(rand_layer(G)), Element(G, (5,)), fg) < 1e-12


def test_fiber_locality():
    p = GOperator(rand_smooth(M))
    f = TestFunction.random_band_limited(M, 4, RNG, real=False)
    masked = f.values.copy()
    masked[:, np.arange(N) != 7] = 0.0
    out_full = apply_operator(p, TestFunction(M, f.values))
    out_masked = apply_operator(p, TestFunction(M, masked))
    assert np.array_equal(out_full.values[:, 7], out_masked.values[:, 7])


def test_recover_kernel_roundtrip():
    kernel = rand_smooth(M)
    p = GOperator(kernel)
    rec = recover_kernel(lambda tf: apply_operator(p, tf), M)
    assert np.max(np.abs(rec.smooth - kernel.smooth)) < 1e-10
    for j in range(0, N, 8):
        basis = np.zeros((N, N), dtype=complex)
        basis[j, :] = N
        tf = TestFunction(M, basis)
        assert np.max(np.abs(convolve(rec, tf).smooth_or_zero()
                             - apply_operator(p, tf).values)) < 1e-9


def test_recover_kernel_detects_layers():
    rec = recover_kernel(lambda tf: tf, M)       # identity operator
    assert len(rec.layers) == 1
    assert rec.layers[0].section == 0 and rec.layers[0].order == 0
    assert np.allclose(rec.layers[0].coeffs, 1.0)

    shift = GOperator(rotation_layer(M, 0.25))
    rec = recover_kernel(lambda tf: apply_operator(shift, tf), M)
    assert len(rec.layers) == 1
    assert rec.layers[0].section == N // 4


def test_right_translate_shapes():
    f = TestFunction.random_band_limited(M, 3, RNG)
    out = right_translate(f, Element(M, (3, 9)))
    assert np.array_equal(out.values[:, 9], f.values[:, 3])


def test_adjoint_operator_prehilbertian():
    # (P f | g) = (f | Q g) with (f|g) = f* * g and Q the adjoint of a
    # bi-transversal kernel
    from grpd.convolution import adjoint_operator
    rng = np.random.default_rng(31)
    kernel = rand_smooth(M, rng=rng) + rand_layer(M, 0.125, 1, rng)
    p = GOperator(kernel)
    q = adjoint_operator(p)
    f = TestFunction.random_band_limited(M, 4, rng, real=False)
    g = TestFunction.random_band_limited(M, 4, rng, real=False)
    lhs = convolve(star_involution(smooth_distribution(M, apply_operator(p, f).values)),
                   smooth_distribution(M, g.values))
    rhs = convolve(star_involution(smooth_distribution(M, f.values)),
                   smooth_distribution(M, apply_operator(q, g).values))
    from grpd.checks import distribution_distance
    assert distribution_distance(lhs, rhs) < 1e-9


def test_ptz_smooth_convolution():
    from grpd.models import pair_times_z
    mz = pair_times_z(16, 8)
    rng = np.random.default_rng(5)
    u, v, w = (rand_smooth(mz, band=2, rng=rng) for _ in range(3))
    lhs = convolve(convolve(u, v), w)
    rhs = convolve(u, convolve(v, w))
    assert np.max(np.abs(lhs.smooth - rhs.smooth)) < 1e-12
    # per-z slice equals the pair-model matrix product
    z = 3
    direct = (u.smooth[:, :, z] @ v.smooth[:, :, z]) / mz.n
    assert np.max(np.abs(convolve(u, v).smooth[:, :, z] - direct)) < 1e-13
    from grpd.errors import ModelUnsupportedError
    with pytest.raises(ModelUnsupportedError):
        make_layer(mz, 0.25, np.ones(16), 0)
