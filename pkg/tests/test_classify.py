import math

import numpy as np
import pytest

from ultrahypo.classify import (
    CoefficientSequence,
    epower_check,
    hs_norms,
    load_coefficients,
    plancherel_partial_sums,
    plancherel_sum,
    save_coefficients,
    test_beurling as beurling,
    test_dual as dual,
    test_roumieu as roumieu,
    test_smooth as smooth,
)
from ultrahypo.errors import InsufficientTruncationError, NuMismatchError, SpectralModelError
from ultrahypo.spectra import sphere_laplacian, torus_laplacian
from ultrahypo.symbols import envelope_values
from ultrahypo.weights import AssociatedFunction, WeightSequence

W2 = WeightSequence.gevrey(2.0, 2)
T1 = torus_laplacian(1, 512)


def seq(norms, model=T1):
    return CoefficientSequence.from_norms(model, norms)


def double_sum(u):
    # sum over ell, then over the eigenbasis index k inside each eigenspace
    outer = []
    for ell in range(len(u)):
        inner = [z.real * z.real + z.imag * z.imag for z in u[ell].tolist()]
        outer.append(math.fsum(inner))
    return math.fsum(outer)


def test_hs_norms_examples():
    m = torus_laplacian(1, 4)
    assert hs_norms(CoefficientSequence.zeros(m)).tolist() == [0.0] * 5
    assert hs_norms(seq(np.ones(5), m)).tolist() == [1.0] * 5
    blocks = [np.zeros(int(d), dtype=complex) for d in m.mults]
    blocks[1] = np.array([3.0, 4.0])
    u = CoefficientSequence(m, tuple(blocks))
    assert hs_norms(u)[1] == 5.0
    assert plancherel_sum(u) == 25.0


def test_plancherel_ten_ones():
    m = torus_laplacian(1, 9)
    assert plancherel_sum(seq(np.ones(10), m)) == 10.0


def test_plancherel_bitwise_and_monotone():
    rng = np.random.default_rng(2024)
    m = sphere_laplacian(40)
    for _ in range(5):
        scale = np.exp(rng.uniform(-30, 30, len(m)))
        blocks = tuple(
            scale[ell] * (rng.standard_normal(int(d)) + 1j * rng.standard_normal(int(d)))
            for ell, d in enumerate(m.mults)
        )
        u = CoefficientSequence(m, blocks)
        assert plancherel_sum(u) == double_sum(u)
        partial = plancherel_partial_sums(u)
        assert np.all(np.diff(partial) >= 0)


def test_block_length_validated():
    m = torus_laplacian(1, 2)
    with pytest.raises(SpectralModelError):
        CoefficientSequence(m, (np.ones(1), np.ones(3)))


def test_smooth_examples():
    lam = T1.lambdas
    assert smooth(seq(np.exp(-lam))).decision == "member"
    sparse = np.zeros(len(T1))
    sparse[[2**j for j in range(10)]] = 1.0
    assert smooth(seq(sparse)).decision == "non_member"
    assert smooth(seq((1 + lam) ** -2.0)).decision == "non_member"
    head = np.zeros(len(T1))
    head[:10] = 1.0
    assert smooth(seq(head)).decision == "member"


def test_smooth_needs_rungs():
    with pytest.raises(InsufficientTruncationError):
        smooth(seq(np.ones(5), torus_laplacian(1, 4)))


@pytest.mark.parametrize("model", [T1, sphere_laplacian(512)], ids=["torus1", "sphere"])
def test_roumieu_envelope_and_anti(model):
    env = envelope_values(model, W2, 2.0)
    v = roumieu(seq(env, model), W2)
    assert v.decision == "member"
    assert v.fitted["L_star"] >= 2 - 1e-6
    anti = np.exp(-np.log1p(model.lambdas) ** 2)
    assert roumieu(seq(anti, model), W2).decision == "non_member"


def test_roumieu_member_inequality_holds_everywhere():
    env = envelope_values(T1, W2, 2.0)
    u = seq(env)
    v = roumieu(u, W2)
    f = AssociatedFunction(W2)
    bound = math.log(v.fitted["C"]) - np.asarray(f(v.fitted["L_star"] * T1.root()))
    assert np.all(np.log(hs_norms(u)) <= bound + 1e-9)


def test_exp_lambda_with_gevrey_nu1():
    m = torus_laplacian(1, 512)
    w = WeightSequence.gevrey(2.0, 1)
    # build the nu = 1 view of the same ladder
    from ultrahypo.spectra import SpectralModel

    m1 = SpectralModel("line", 1, np.sqrt(m.lambdas), m.mults)
    assert roumieu(seq(np.exp(-m1.lambdas), m1), w).decision == "member"


def test_finitely_supported_and_zero():
    head = np.zeros(len(T1))
    head[:7] = 3.0
    assert roumieu(seq(head), W2).decision == "member"
    assert roumieu(CoefficientSequence.zeros(T1), W2).decision == "member"
    assert beurling(CoefficientSequence.zeros(T1), W2).decision == "member"


def test_beurling_fixed_and_growing_envelope():
    env = envelope_values(T1, W2, 2.0)
    assert beurling(seq(env), W2).decision == "non_member"
    growing = envelope_values(T1, W2, np.maximum(1.0, T1.lambdas ** 0.25))
    assert beurling(seq(growing), W2).decision == "member"


def test_duals():
    ones = seq(np.ones(len(T1)))
    assert dual(ones, W2, "roumieu").decision == "member"
    assert dual(ones, W2, "beurling").decision == "member"
    assert dual(CoefficientSequence.zeros(T1), W2, "roumieu").decision == "member"
    f = AssociatedFunction(W2)
    boundary = seq(np.exp(np.asarray(f(T1.root()))))
    v = dual(boundary, W2, "beurling")
    assert v.decision == "member" and v.fitted["L"] == pytest.approx(1.0, rel=0.05)
    assert dual(boundary, W2, "roumieu").decision == "non_member"
    # exp(lambda) must stay representable: lambda_26 = 676 on torus1
    small = torus_laplacian(1, 26)
    huge = seq(np.exp(small.lambdas), small)
    assert dual(huge, W2, "roumieu").decision == "non_member"
    assert dual(huge, W2, "beurling").decision == "non_member"
    with pytest.raises(ValueError):
        dual(ones, W2, "sideways")


def test_nu_mismatch():
    with pytest.raises(NuMismatchError):
        roumieu(seq(np.ones(len(T1))), WeightSequence.gevrey(2.0, 1))


def test_epower():
    m = torus_laplacian(1, 64)
    w = WeightSequence.gevrey(1.0, 2)
    zero = epower_check(CoefficientSequence.zeros(m), w, 5)
    assert zero["C"] == 0.0
    u = seq(np.exp(-m.lambdas), m)
    fit = epower_check(u, w, 20)
    assert fit["h"] is not None and np.isfinite(fit["C"])
    # |E^k u|^2 by direct summation
    for k in (0, 3, 10):
        direct = math.fsum((lam**k * n) ** 2 for lam, n in zip(m.lambdas, hs_norms(u)) if n > 0)
        assert fit["log_norms"][k] == pytest.approx(0.5 * math.log(direct), rel=1e-12)
    sparse = np.zeros(len(m))
    sparse[[2**j for j in range(7)]] = 1.0
    with pytest.raises(InsufficientTruncationError):
        epower_check(seq(sparse, m), w, 5)


def test_file_roundtrip(tmp_path):
    m = sphere_laplacian(5)
    rng = np.random.default_rng(1)
    u = CoefficientSequence(m, tuple(rng.standard_normal(int(d)) + 1j for d in m.mults))
    save_coefficients(u, tmp_path / "u.json")
    back = load_coefficients(tmp_path / "u.json", m)
    assert all(np.array_equal(a, b) for a, b in zip(u.coeffs, back.coeffs))
