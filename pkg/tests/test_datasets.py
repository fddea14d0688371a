"""Dataset generators, analytic targets, and CSV round trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scoremh import datasets as D
from scoremh.errors import ArgumentError, CsvParseError, SupportError

from util import fd_input_grad


def test_moons_noise_free_points_lie_on_arcs():
    cloud = D.make_moons(101, noise=0.0, seed=1)
    pts, lab = cloud.points, cloud.labels
    outer = pts[lab == 0]
    inner = pts[lab == 1]
    assert np.max(np.abs(np.hypot(outer[:, 0], outer[:, 1]) - 1.0)) < 1e-12
    assert np.max(np.abs(np.hypot(inner[:, 0] - 1.0, inner[:, 1] - 0.5) - 1.0)) < 1e-12


def test_moons_paper_configuration_bounding_box():
    cloud = D.make_moons(10000, noise=0.1, seed=0)
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    assert lo[0] > -1.5 and hi[0] < 2.5
    assert lo[1] > -1.0 and hi[1] < 1.5


def test_generators_deterministic_per_seed():
    for fn in (D.make_moons, D.make_s_curve, D.make_swiss_roll):
        a, b = fn(50, 0.2, seed=7), fn(50, 0.2, seed=7)
        assert np.array_equal(a.points, b.points)
    a = D.make_pinwheel(50, seed=7)
    b = D.make_pinwheel(50, seed=7)
    assert np.array_equal(a.points, b.points)


def test_moons_rejects_empty():
    with pytest.raises(ArgumentError):
        D.make_moons(0)


def test_pinwheel_noise_free_rate_zero():
    cloud = D.make_pinwheel(64, num_classes=5, radial_std=0.0, tangential_std=0.0, rate=0.0, seed=2)
    theta = 2 * np.pi * cloud.labels / 5
    expect = np.column_stack([np.cos(theta), np.sin(theta)])
    assert np.max(np.abs(cloud.points - expect)) < 1e-12


def test_pinwheel_mean_radius_matches_folded_normal():
    # Monte-Carlo oracle for E|N(1, 0.5^2)| via independent draws
    rng = np.random.default_rng(11)
    oracle_draws = np.abs(1.0 + 0.5 * rng.standard_normal(200000))
    mu, se = oracle_draws.mean(), oracle_draws.std() / np.sqrt(len(oracle_draws))
    cloud = D.make_pinwheel(40000, num_classes=5, radial_std=0.5, tangential_std=0.0, rate=0.25, seed=3)
    radii = np.hypot(cloud.points[:, 0], cloud.points[:, 1])
    se_emp = radii.std() / np.sqrt(len(radii))
    assert abs(radii.mean() - mu) < 3 * np.hypot(se, se_emp)


def test_s_curve_noise_free_on_parametric_trace():
    cloud = D.make_s_curve(500, noise=0.0, seed=4)
    x, y, z = cloud.points.T
    assert np.all((y >= 0) & (y <= 2))
    # reconstruct t from (x, z): sin t = x, cos t = 1 - |z|, branch via +-2pi
    t_hat = np.arctan2(x, 1.0 - np.abs(z))
    best = np.full(len(x), np.inf)
    for shift in (-2 * np.pi, 0.0, 2 * np.pi):
        t = t_hat + shift
        res = np.hypot(np.sin(t) - x, np.sign(t) * (np.cos(t) - 1.0) - z)
        best = np.minimum(best, res)
    assert np.max(best) < 1e-12


def test_swiss_roll_matches_paper_configuration():
    cloud = D.make_swiss_roll(10000, noise=0.5, seed=5)
    assert cloud.points.shape == (10000, 3)
    r = np.hypot(cloud.points[:, 0], cloud.points[:, 2])
    assert r.max() < 4.5 * np.pi + 3.0
    assert cloud.points[:, 1].min() > -3.0 and cloud.points[:, 1].max() < 24.0


def test_standard_normal_logpdf_and_score_at_zero():
    g = D.Gaussian(np.zeros(2), np.eye(2))
    assert np.allclose(g.logpdf(np.zeros((1, 2))), -np.log(2 * np.pi))
    assert np.allclose(D.Gaussian(np.zeros(1), np.eye(1)).logpdf(np.zeros((1, 1))), -0.5 * np.log(2 * np.pi))
    assert np.allclose(g.score(np.zeros((1, 2))), 0.0)


def test_gumbel_density_at_zero():
    g = D.Gev(0.0, 0.0, 1.0)
    assert np.allclose(g.logpdf(np.zeros(1)), -1.0)


def test_mixture_score_near_mode_is_tiny():
    mix = D.two_gaussian_mixture(0.8)
    s = mix.score(np.array([[5.0, 5.0]]))
    assert np.max(np.abs(s)) < 1e-9


@pytest.mark.parametrize(
    "target",
    [
        D.Gaussian(np.array([0.4, -1.0]), np.array([[1.2, 0.3], [0.3, 0.7]])),
        D.two_gaussian_mixture(0.8),
        D.Gev(0.25, 0.1, 1.3),
        D.Gev(0.0, -0.5, 0.8),
        D.Gev(-0.2, 0.0, 1.0),
    ],
)
def test_score_matches_fd_gradient_of_logpdf(target):
    rng = np.random.default_rng(42)
    if isinstance(target, D.Gev):
        u = rng.uniform(0.05, 0.95, size=100)
        x = target.quantile(u)[:, None]
    else:
        x = target.sample(100, rng)
    fd = fd_input_grad(lambda v: target.logpdf(v), x, h=1e-6)
    rel = np.abs(fd - target.score(x)) / np.maximum(np.abs(fd), 1.0)
    assert np.max(rel) < 1e-6


def test_gev_support_guard():
    g = D.Gev(0.5, 0.0, 1.0)  # support x > -2
    with pytest.raises(SupportError):
        g.logpdf(np.array([-3.0]))
    samples = g.sample(20000, np.random.default_rng(0))
    assert np.all(samples > -2.0)


def test_gumbel_inverse_cdf_fixed_point():
    g = D.Gev(0.0, 0.0, 1.0)
    assert np.allclose(g.quantile(np.exp(-1.0)), 0.0)


def test_gev_median_matches_analytic():
    xi = 0.5
    g = D.Gev(xi, 0.0, 1.0)
    analytic = ((np.log(2.0)) ** (-xi) - 1.0) / xi
    samples = g.sample(200000, np.random.default_rng(1))[:, 0]
    # bootstrap standard error of the sample median
    rng = np.random.default_rng(2)
    meds = [np.median(rng.choice(samples, 5000)) for _ in range(60)]
    assert abs(np.median(samples) - analytic) < 3 * np.std(meds) + 1e-3


def test_mixture_sampling_fraction():
    mix = D.two_gaussian_mixture(0.8)
    cloud = D.sample_target(mix, 40000, seed=9)
    near_one = np.sum((cloud.points - 5) ** 2, axis=1) < np.sum((cloud.points + 5) ** 2, axis=1)
    assert abs(near_one.mean() - 0.8) < 3 * np.sqrt(0.16 / 40000)


def test_mixture_validation():
    with pytest.raises(ArgumentError):
        D.GaussianMixture(
            [D.Gaussian(np.zeros(1), np.eye(1)), D.Gaussian(np.ones(1), np.eye(1))],
            np.array([0.5, 0.4]),
        )


def test_csv_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    cloud = D.PointCloud(rng.standard_normal((19, 3)) * 1e6, rng.integers(0, 4, 19))
    path = tmp_path / "cloud.csv"
    D.write_csv(path, cloud)
    back = D.read_csv(path)
    assert np.array_equal(back.points, cloud.points)
    assert np.array_equal(back.labels, cloud.labels)


def test_csv_single_cell_roundtrip(tmp_path):
    path = tmp_path / "one.csv"
    D.write_csv(path, D.PointCloud(np.array([[0.5]])))
    back = D.read_csv(path)
    assert back.points.shape == (1, 1) and back.points[0, 0] == 0.5


def test_csv_missing_column_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x0,x1\n1.0,2.0\n3.0\n")
    with pytest.raises(CsvParseError, match="line 3"):
        D.read_csv(path)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1.0,2.0\n")
    with pytest.raises(CsvParseError, match="line 1"):
        D.read_csv(path)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(
        st.lists(st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False), min_size=2, max_size=2),
        min_size=1,
        max_size=12,
    )
)
def test_csv_roundtrip_property(tmp_path_factory, rows):
    cloud = D.PointCloud(np.array(rows))
    path = tmp_path_factory.mktemp("csv") / "c.csv"
    D.write_csv(path, cloud)
    assert np.array_equal(D.read_csv(path).points, cloud.points)
