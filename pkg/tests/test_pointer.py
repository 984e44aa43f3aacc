import numpy as np
import pytest
from scipy import integrate, stats

from tsvf.algebra import LinearOp, identity
from tsvf.pointer import (
    GaussianPointer,
    GridResolutionError,
    PointerMixture,
    bias_scan,
    couple,
    estimate_real_weak_value,
    sample,
)
from tsvf.scenarios import n_body, two_box
from tsvf.twostate import weak_value


def _mixture(shifts, amps, sigma=1.0):
    w = 12 * sigma + max(abs(s) for s in shifts)
    return PointerMixture(np.array(shifts), np.array(amps), sigma, w, sigma / 200, 1.0)


def _gauss_density(x, shifts, amps, sigma):
    # independent density oracle written from the pointer formula
    psi = sum(
        c * (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((x - s) ** 2) / (4 * sigma**2))
        for s, c in zip(shifts, amps)
    )
    return np.abs(psi) ** 2


def test_projector_with_weak_value_one_is_single_gaussian():
    s = two_box()
    mix = couple(s.two_state, s.observables["R1"], GaussianPointer(0.3))
    by_shift = dict(zip(mix.shifts.tolist(), mix.amplitudes.tolist()))
    assert abs(by_shift[0.0]) < 1e-15
    assert by_shift[0.3] == pytest.approx(s.two_state.overlap)
    assert mix.exact_mean() == pytest.approx(0.3, abs=1e-12)


def test_identity_single_component():
    s = two_box()
    mix = couple(s.two_state, identity(s.space), GaussianPointer(0.2))
    assert mix.shifts.tolist() == [0.2]
    assert mix.amplitudes[0] == pytest.approx(s.two_state.overlap)


def test_ll_components_and_weak_limit():
    s = two_box()
    ll = s.observables["LL"]
    mix = couple(s.two_state, ll, GaussianPointer(1e-3))
    assert sorted(mix.shifts.tolist()) == [0.0, 1e-3]
    assert mix.amplitudes.sum() == pytest.approx(s.two_state.overlap, abs=1e-15)
    assert mix.exact_mean() / 1e-3 == pytest.approx(-1, abs=1e-4)


def test_non_hermitian_rejected():
    s = two_box()
    m = np.zeros((4, 4))
    m[0, 1] = 1
    with pytest.raises(ValueError, match="Hermitian"):
        couple(s.two_state, LinearOp(s.space, m), GaussianPointer(0.1))


def test_weight_closed_form_matches_quadrature():
    mix = _mixture([-0.7, 0.0, 1.3], [0.4 - 0.2j, -0.5, 0.1 + 0.9j])
    quad = integrate.quad(lambda x: _gauss_density(x, mix.shifts, mix.amplitudes, 1.0), -20, 20, limit=200)[0]
    assert mix.weight() == pytest.approx(quad, rel=1e-10)
    assert mix.analytic_mean() == pytest.approx(mix.exact_mean(), abs=1e-10)


def test_post_selection_weight_weak_limit():
    s = two_box()
    ts = s.two_state
    mix = couple(ts, s.observables["LL"], GaussianPointer(1e-6))
    expected = abs(ts.overlap) ** 2 / (ts.pre.norm() * ts.post.norm()) ** 2
    assert mix.post_selection_weight == pytest.approx(expected, rel=1e-9)


def test_pointer_validation():
    with pytest.raises(ValueError):
        GaussianPointer(0.0)
    with pytest.raises(ValueError):
        GaussianPointer(float("nan"))
    with pytest.raises(ValueError):
        GaussianPointer(0.1, width=-1)
    with pytest.raises(ValueError):
        GaussianPointer(0.1, resolution=0.2).grid_for(1.0)
    with pytest.raises(ValueError):
        GaussianPointer(0.1, half_width=5.0).grid_for(1.0)


def test_all_zero_mixture_rejected():
    with pytest.raises(ValueError):
        _mixture([0.0, 1.0], [0, 0])


def test_single_gaussian_sample_mean():
    mix = _mixture([0.25], [1.0])
    n = 50_000
    rec = sample(mix, n, seed=3)
    assert abs(rec.readings.mean() - 0.25) < 4 / np.sqrt(n)
    assert rec.readings.std() == pytest.approx(1.0, rel=0.02)


def test_empty_record():
    rec = sample(_mixture([0.0], [1.0]), 0, seed=1)
    assert rec.readings.size == 0
    assert rec.requested_samples == 0
    with pytest.raises(ValueError):
        estimate_real_weak_value(rec)


def test_coarse_grid_rejected():
    mix = PointerMixture(np.array([0.0]), np.array([1.0]), 1.0, 3.0, 0.005, 1.0)
    with pytest.raises(GridResolutionError):
        sample(mix, 10, seed=0)


def test_readings_deterministic_and_worker_independent():
    s = two_box()
    mix = couple(s.two_state, s.observables["LL"], GaussianPointer(0.05))
    n = 3 * 65536 + 17
    a = sample(mix, n, seed=11)
    b = sample(mix, n, seed=11, workers=4)
    c = sample(mix, n, seed=12)
    assert a.readings.tobytes() == b.readings.tobytes()
    assert a.to_csv() == b.to_csv()
    assert a.readings.tobytes() != c.readings.tobytes()
    # a prefix of a longer run is the same draws
    short = sample(mix, 1000, seed=11)
    np.testing.assert_array_equal(short.readings, a.readings[:1000])


REFERENCE_MIXTURES = {
    "single": ([0.5], [1.0]),
    "antisymmetric": ([-0.8, 0.8], [1 / np.sqrt(2), -1 / np.sqrt(2)]),
    "two-box LL strong": ([0.0, 1.0], [-1 / np.sqrt(3), 1 / (2 * np.sqrt(3))]),
}


@pytest.mark.parametrize("name", sorted(REFERENCE_MIXTURES))
def test_sampler_chi_square(name):
    shifts, amps = REFERENCE_MIXTURES[name]
    mix = _mixture(shifts, amps)
    n = 100_000
    rec = sample(mix, n, seed=2024)
    edges = np.linspace(-4.5, 5.5, 51)
    edges = np.concatenate([[-mix.half_width], edges, [mix.half_width]])
    observed, _ = np.histogram(rec.readings, bins=edges)
    dens = lambda x: _gauss_density(x, shifts, amps, 1.0)
    probs = np.array([integrate.quad(dens, lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:])])
    expected = n * probs / probs.sum()
    # pool sparse bins so every expected count is at least 5
    obs_p, exp_p, o_acc, e_acc = [], [], 0.0, 0.0
    for o, e in zip(observed, expected):
        o_acc, e_acc = o_acc + o, e_acc + e
        if e_acc >= 5:
            obs_p.append(o_acc)
            exp_p.append(e_acc)
            o_acc = e_acc = 0.0
    obs_p[-1] += o_acc
    exp_p[-1] += e_acc
    p = stats.chisquare(obs_p, exp_p).pvalue
    assert p >= 1e-3, f"{name}: chi-square p = {p}"


def test_estimate_two_box_ll():
    s = two_box()
    mix = couple(s.two_state, s.observables["LL"], GaussianPointer(0.05))
    est, err = estimate_real_weak_value(sample(mix, 200_000, seed=7))
    assert abs(est - (-1)) < 3 * err


def test_estimate_n_body_c2():
    s = n_body(3, 2)
    a = s.observables["full-L"]
    mix = couple(s.two_state, a, GaussianPointer(0.05))
    est, err = estimate_real_weak_value(sample(mix, 200_000, seed=5))
    assert weak_value(s.two_state, a) == pytest.approx(0.5)
    assert abs(est - 0.5) < 3 * err


def test_estimate_zero_weak_value():
    s = two_box()
    mix = couple(s.two_state, s.observables["L1"], GaussianPointer(0.05))
    est, err = estimate_real_weak_value(sample(mix, 200_000, seed=9))
    assert abs(est) < 3 * err


def test_estimate_rejects_zero_g():
    rec = sample(_mixture([0.1], [1.0]), 100, seed=0)
    with pytest.raises(ValueError):
        estimate_real_weak_value(rec, 0.0)


def test_bias_scan_identity_has_no_bias():
    s = two_box()
    pts = bias_scan(s.two_state, identity(s.space), GaussianPointer(1.0), [0.4, 0.2, 0.1], 2000, seed=1)
    for p in pts:
        assert p.exact == pytest.approx(1, abs=1e-12)
        assert abs(p.estimate - 1) < 5 * p.std_error


def test_bias_scan_projector_weak_value_one():
    s = two_box()
    for p in bias_scan(s.two_state, s.observables["R1"], GaussianPointer(1.0), [0.8, 0.4, 0.2], 10, seed=1):
        assert p.exact == pytest.approx(1, abs=1e-12)


def test_bias_shrinks_quadratically():
    s = two_box()
    pts = bias_scan(s.two_state, s.observables["LL"], GaussianPointer(1.0), [0.4, 0.2, 0.1], 1000, seed=3)
    bias = [abs(p.exact - (-1)) for p in pts]
    assert bias[0] > bias[1] > bias[2]
    for big, small in zip(bias, bias[1:]):
        assert 3 <= big / small <= 5


def test_bias_scan_rejects_bad_ladder():
    s = two_box()
    for gs in ([0.1, 0.2], [0.2, -0.1], []):
        with pytest.raises(ValueError):
            bias_scan(s.two_state, s.observables["LL"], GaussianPointer(1.0), gs, 10, seed=0)
