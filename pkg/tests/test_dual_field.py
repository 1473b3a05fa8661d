import json

import numpy as np
import pytest

from sparsekern import (
    AlphaField,
    DiscreteModel,
    KernelSpec,
    MonteCarlo,
    ProblemVariant,
    Quadrature,
    SampleSet,
    bump_field,
    gen_remark1,
)
from sparsekern import kernels
from sparsekern.dual_field import make_nodes, quadrature_nodes
from sparsekern.errors import ConfigError, DomainError

KERNEL = KernelSpec(w_lo=0.3, w_hi=1.8, box=np.array([[0.0, 5.0]]))


def make_field(lam=None, gamma=0.5, n=6, variant=None, seed=0):
    data = gen_remark1(n, seed)
    if lam is None:
        lam = np.linspace(-1.0, 1.0, n)
    return AlphaField(data, lam, gamma, KERNEL, variant or ProblemVariant.full())


def test_zero_lambda_field_is_zero_everywhere():
    field = make_field(lam=np.zeros(6))
    rng = np.random.default_rng(0)
    for _ in range(20):
        z, w = rng.uniform(0, 5, 1), rng.uniform(0.3, 1.8)
        assert field.coeff_smooth(z, w) == 0.0
        assert field.coeff(z, w) == 0.0
    assert field.predict([1.0], Quadrature(64, 16)) == 0.0


def test_single_sample_unit_kernel_value():
    data = gen_remark1(2, 1).subset([0, 1])
    field = AlphaField(data, np.array([2.0, 0.0]), 0.0, KERNEL, ProblemVariant.full())
    assert field.coeff_smooth(data.X[0], 1.0) == pytest.approx(2.0)


def test_smooth_matches_summation_oracle():
    field = make_field()
    rng = np.random.default_rng(1)
    for _ in range(100):
        z, w = rng.uniform(0, 5, 1), rng.uniform(0.3, 1.8)
        oracle = sum(
            l * kernels.value(KERNEL, x, z, w) for l, x in zip(field.lam, field.samples.X)
        )
        assert field.coeff_smooth(z, w) == pytest.approx(oracle, abs=1e-12)


def test_threshold_cases():
    # gamma = 0.5 thresholds at 1; scale lambda to land on either side
    data = gen_remark1(1 + 1, 3)
    one = data.subset([0])
    f_low = AlphaField(one, np.array([0.9]), 0.5, KERNEL, ProblemVariant.full())
    assert f_low.coeff(one.X[0], 1.0) == 0.0
    f_high = AlphaField(one, np.array([1.5]), 0.5, KERNEL, ProblemVariant.full())
    assert f_high.coeff(one.X[0], 1.0) == pytest.approx(1.5)


def test_zero_gamma_disables_threshold():
    field = make_field(gamma=0.0)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        z, w = rng.uniform(0, 5, 1), rng.uniform(0.3, 1.8)
        assert field.coeff(z, w) == field.coeff_smooth(z, w)


def test_threshold_law_on_random_queries():
    rng = np.random.default_rng(3)
    for gamma in (0.0, 0.01, 0.2, 1.0):
        field = make_field(lam=rng.normal(0, 1, 6), gamma=gamma)
        thr = field.threshold
        Z = rng.uniform(0, 5, (500, 1))
        W = rng.uniform(0.3, 1.8, 500)
        vals = field.coeff_at_nodes(Z, W)
        assert np.all((vals == 0.0) | (np.abs(vals) > thr))


def test_out_of_domain_queries_raise():
    field = make_field()
    with pytest.raises(DomainError):
        field.coeff_smooth([6.0], 1.0)
    with pytest.raises(DomainError):
        field.coeff_smooth([1.0], 0.05)
    fw = make_field(variant=ProblemVariant.fixed_width(1.0))
    with pytest.raises(DomainError):
        fw.coeff_smooth([1.0], 0.9)
    fc = make_field(variant=ProblemVariant.fixed_centers(np.array([[1.0], [2.0]])))
    with pytest.raises(DomainError):
        fc.coeff_smooth([1.5], 1.0)
    assert fc.coeff_smooth([2.0], 1.0) == fc.coeff_smooth([2.0], 1.0)


def test_variant_validation():
    with pytest.raises(DomainError):
        ProblemVariant.fixed_centers(np.zeros((0, 1)))
    with pytest.raises(DomainError):
        make_field(variant=ProblemVariant.fixed_width(5.0))
    with pytest.raises(DomainError):
        make_field(variant=ProblemVariant.fixed_centers(np.array([[9.0]])))


def test_monotone_sparsification_in_gamma():
    rng = np.random.default_rng(4)
    lam = rng.normal(0, 1, 6)
    Z = np.linspace(0, 5, 200).reshape(-1, 1)
    W = np.full(200, 1.0)
    fractions = []
    for gamma in (0.0, 0.05, 0.2, 0.8, 3.0):
        field = make_field(lam=lam, gamma=gamma)
        fractions.append(np.mean(field.coeff_at_nodes(Z, W) != 0.0))
    assert all(fractions[i + 1] <= fractions[i] for i in range(len(fractions) - 1))


def test_scalar_optimality_against_grid():
    # thresholding minimizes F(a) = a^2/2 + gamma 1[a != 0] - abar * a pointwise
    rng = np.random.default_rng(5)
    for trial in range(20):
        lam = rng.normal(0, 1, 6)
        gamma = rng.uniform(0, 1)
        field = make_field(lam=lam, gamma=gamma)
        L = np.sum(np.abs(lam))
        grid = np.linspace(-L - 1, L + 1, 2001)
        for _ in range(50):
            z, w = rng.uniform(0, 5, 1), rng.uniform(0.3, 1.8)
            s = field.coeff_smooth(z, w)
            a = field.coeff(z, w)
            F_a = 0.5 * a * a + gamma * (a != 0.0) - s * a
            F_grid = 0.5 * grid**2 + gamma * (grid != 0.0) - s * grid
            assert F_a <= F_grid.min() + 1e-9


def test_predict_quadrature_vs_monte_carlo():
    field = make_field(lam=np.array([0.5, -0.3, 0.8, 0.2, -0.6, 0.4]), gamma=0.01)
    x = [2.2]
    ref = field.predict(x, Quadrature(512, 128))
    B = 200_000
    est = field.predict(x, MonteCarlo(B, seed=11))
    # standard error from an independent batch of pointwise values
    Z, W, wts = make_nodes(field.kernel, field.variant, MonteCarlo(B, seed=12))
    kx = kernels.cross(field.kernel, np.array([x]), Z, W)[0]
    vals = field.coeff_at_nodes(Z, W) * kx * wts * B
    se = vals.std() / np.sqrt(B)
    assert abs(est - ref) <= 3 * se


def test_predict_grid_refinement_converges():
    field = make_field(lam=np.array([0.5, -0.3, 0.8, 0.2, -0.6, 0.4]), gamma=0.0)
    coarse = field.predict([1.7], Quadrature(256, 64))
    fine = field.predict([1.7], Quadrature(512, 128))
    assert abs(fine - coarse) < 1e-4


def test_fixed_width_predict_matches_manual_integral():
    variant = ProblemVariant.fixed_width(1.0)
    field = make_field(lam=np.array([0.5, -0.3, 0.8, 0.2, -0.6, 0.4]), gamma=0.02, variant=variant)
    n = 4096
    h = 5.0 / n
    z = (np.arange(n) + 0.5) * h
    vals = field.coeff_at_nodes(z.reshape(-1, 1), np.full(n, 1.0))
    kx = np.exp(-((2.2 - z) ** 2) / 2.0)
    manual = float(np.sum(vals * kx) * h)
    assert field.predict([2.2], Quadrature(4096, 2)) == pytest.approx(manual, abs=1e-12)


def test_fixed_centers_nodes_and_predict():
    centers = np.array([[1.0], [3.0], [4.0]])
    variant = ProblemVariant.fixed_centers(centers)
    field = make_field(lam=np.array([0.5, -0.3, 0.8, 0.2, -0.6, 0.4]), gamma=0.0, variant=variant)
    Z, W, wts = quadrature_nodes(KERNEL, variant, Quadrature(2, 64))
    assert Z.shape[0] == 3 * 64
    # integral = sum over centers of width-axis integrals
    total = 0.0
    for c in centers:
        wgrid = W[:64]
        vals = field.coeff_at_nodes(np.tile(c, (64, 1)), wgrid)
        kx = np.array([kernels.value(KERNEL, [2.0], c, w) for w in wgrid])
        total += np.sum(vals * kx) * (1.8 - 0.3) / 64
    assert field.predict([2.0], Quadrature(2, 64)) == pytest.approx(total, abs=1e-12)


def test_integrator_config_errors():
    with pytest.raises(ConfigError):
        Quadrature(0, 16)
    with pytest.raises(ConfigError):
        MonteCarlo(0)


def test_field_json_round_trip_bit_identical(tmp_path):
    field = make_field(lam=np.array([0.5, -0.3, 0.8, 0.2, -0.6, 0.4]), gamma=0.13)
    path = tmp_path / "field.json"
    field.save(path)
    back = AlphaField.load(path)
    quad = Quadrature(128, 32)
    for x in ([0.7], [2.5], [4.1]):
        assert back.predict(x, quad) == field.predict(x, quad)


# ---- bump construction ----------------------------------------------------

BUMP_MODEL = DiscreteModel(np.array([1.3]), np.array([[2.5]]), np.array([1.0]))


def test_bump_zero_amplitudes_zero_field():
    model = DiscreteModel(np.array([0.0]), np.array([[2.5]]), np.array([1.0]))
    bf = bump_field(model, 8, KERNEL)
    rng = np.random.default_rng(6)
    Z = rng.uniform(0, 5, (50, 1))
    W = rng.uniform(0.3, 1.8, 50)
    assert np.all(bf.value_at_nodes(Z, W) == 0.0)
    assert bf.predict([2.5]) == 0.0


def test_bump_support_escape_raises():
    model = DiscreteModel(np.array([1.0]), np.array([[0.1]]), np.array([1.0]))
    with pytest.raises(DomainError):
        bump_field(model, 4, KERNEL)  # 0.1 - 0.25 < 0
    bump_field(model, 16, KERNEL)


def test_bump_mass_on_aligned_grid_equals_amplitude_sum():
    # grid cells exactly tile the bump's box, so midpoint integration is exact
    model = DiscreteModel(np.array([1.3, -0.4]), np.array([[2.5], [1.25]]), np.array([1.0, 0.75]))
    bf = bump_field(model, 4, KERNEL)
    nz, nw = 400, 300  # h_z = 0.0125, h_w = 0.005 both divide every bump edge offset
    hz = 5.0 / nz
    hw = 1.5 / nw
    z = (np.arange(nz) + 0.5) * hz
    w = 0.3 + (np.arange(nw) + 0.5) * hw
    Z, W = np.meshgrid(z, w, indexing="ij")
    vals = bf.value_at_nodes(np.column_stack([Z.ravel()]), W.ravel())
    mass = vals.sum() * hz * hw
    assert mass == pytest.approx(float(np.sum(model.amplitudes)), abs=1e-9)
    assert bf.integral() == pytest.approx(float(np.sum(model.amplitudes)))


def test_bump_prediction_converges_to_model():
    probes = np.linspace(0.35, 4.65, 10)
    errors = {}
    for m in (4, 8, 16, 32):
        bf = bump_field(BUMP_MODEL, m, KERNEL)
        errors[m] = np.array(
            [abs(bf.predict([x], nodes_per_axis=24) - BUMP_MODEL.predict([x])) for x in probes]
        )
    ms = (4, 8, 16, 32)
    for a, b in zip(ms, ms[1:]):
        assert np.all(errors[b] < errors[a])
