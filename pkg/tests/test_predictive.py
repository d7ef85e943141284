import numpy as np
import pytest
from scipy import optimize

from dpburr.datasets import leukemia_fixture
from dpburr.distributions import Burr, BurrParams, burr_pdf
from dpburr.gibbs import HyperPriors, SamplerConfig, SurvivalData, run_chain
from dpburr.predictive import (
    CurveError, default_grid, hazard_from_curves, predictive_curve, predictive_curves,
    read_curve_csv,
)
from dpburr.trace import Snapshot, Trace


def make_trace(snaps, n, b_gamma=1.0, b_phi=1.0, t_max=None):
    """``snaps``: list of ``(nu, [(c, k, n_j), ...], gamma, phi)``."""
    out = []
    for it, (nu, clusters, gamma, phi) in enumerate(snaps, start=1):
        arr = np.array(clusters, dtype=float)
        counts = arr[:, 2].astype(int)
        out.append(Snapshot(it, nu, arr[:, :2], counts, counts, {"gamma": gamma, "phi": phi}))
    extra = {} if t_max is None else {"t_max": t_max}
    return Trace("burr", out, n, priors={"b_gamma": b_gamma, "b_phi": b_phi},
                 hyper_names=("gamma", "phi"), extra=extra)


def single_atom(c, k, nu=1e-12, n=10):
    return make_trace([(nu, [(c, k, n)], 1.0, 3.0)], n)


@pytest.fixture(scope="module")
def fitted():
    data = SurvivalData(Burr(2.0, 6.0).sample(np.random.default_rng(0), 60))
    tr = run_chain(data, HyperPriors(b_gamma=14.0, b_phi=2.7),
                   SamplerConfig(iterations=400, burn_in=100, thin=3, seed=1))
    return tr, data


class TestSingleAtom:
    def test_density_equals_kernel(self):
        grid = np.geomspace(0.05, 5, 50)
        est = predictive_curve(single_atom(2.0, 6.0), grid)
        np.testing.assert_allclose(est.mean, burr_pdf(grid, BurrParams(2, 6)), atol=1e-9, rtol=0)

    def test_cdf_limit(self):
        est = predictive_curve(single_atom(2.0, 6.0), np.array([0.1, 1.0, 1e3]), "cdf")
        assert abs(est.mean[-1] - 1.0) < 1e-3

    def test_burr11_hazard(self):
        grid = np.linspace(0.01, 20, 300)
        est = predictive_curve(single_atom(1.0, 1.0), grid, "hazard")
        np.testing.assert_allclose(est.mean, 1 / (1 + grid), atol=1e-9, rtol=0)

    def test_floored_survival_gives_finite_hazard(self):
        est = predictive_curve(single_atom(5.0, 400.0, nu=0.0), np.array([1.0, 50.0, 1e4]),
                               "hazard")
        assert np.all(np.isfinite(est.mean)) and np.all(np.isfinite(est.upper))


class TestMixture:
    def test_density_integrates_over_central_range(self):
        tr = make_trace([(0.5, [(5.0, 1.0, 4), (2.0, 6.0, 16)], 2.0, 3.0),
                         (0.8, [(4.0, 1.5, 6), (2.2, 5.0, 14)], 1.5, 4.0)], 20)
        cdf = lambda t: predictive_curve(tr, np.array([t]), "cdf").mean[0]
        lo = optimize.brentq(lambda t: cdf(t) - 0.001, 1e-12, 1.0)
        hi = optimize.brentq(lambda t: cdf(t) - 0.999, 1.0, 1e12)
        grid = np.geomspace(lo, hi, 20001)
        f = predictive_curve(tr, grid).mean
        assert np.trapezoid(f, grid) == pytest.approx(0.998, abs=1e-3)

    def test_label_invariance(self):
        a = make_trace([(0.7, [(5.0, 1.0, 4), (2.0, 6.0, 12), (1.0, 2.0, 4)], 2.0, 6.0)], 20)
        b = make_trace([(0.7, [(1.0, 2.0, 4), (5.0, 1.0, 4), (2.0, 6.0, 12)], 2.0, 6.0)], 20)
        grid = default_grid([0.2, 3.0])
        for kind in ("density", "cdf", "survival", "hazard"):
            ea, eb = predictive_curve(a, grid, kind), predictive_curve(b, grid, kind)
            assert np.array_equal(ea.mean, eb.mean) and np.array_equal(ea.upper, eb.upper)


class TestFittedInvariants:
    def test_shapes_and_ranges(self, fitted):
        tr, data = fitted
        grid = default_grid(data.times)
        curves = predictive_curves(tr, grid)
        for est in curves.values():
            assert np.all(est.lower <= est.mean) and np.all(est.mean <= est.upper)
            assert np.all(est.lower >= 0)
        s, c = curves["survival"], curves["cdf"]
        assert s.mean.max() <= 1 and np.all(np.diff(s.mean) <= 0)
        assert np.all(np.diff(s.samples, axis=1) <= 0)
        assert np.all(np.diff(c.mean) >= 0) and c.mean.max() <= 1

    def test_curves_match_single_calls(self, fitted):
        tr, data = fitted
        grid = default_grid(data.times, 40)
        curves = predictive_curves(tr, grid)
        for kind in ("density", "survival", "cdf"):
            np.testing.assert_array_equal(curves[kind].mean, predictive_curve(tr, grid, kind).mean)
        np.testing.assert_allclose(curves["hazard"].mean,
                                   predictive_curve(tr, grid, "hazard").mean, rtol=1e-14)

    def test_extrapolation_flag(self, fitted):
        tr, data = fitted
        inside = predictive_curve(tr, np.array([data.times.max() * 0.9]))
        outside = predictive_curve(tr, np.array([data.times.max() * 1.1]))
        assert not inside.metadata["extrapolation"] and outside.metadata["extrapolation"]

    def test_band_level(self, fitted):
        tr, data = fitted
        grid = default_grid(data.times, 20)
        wide = predictive_curve(tr, grid, band_level=0.95)
        narrow = predictive_curve(tr, grid, band_level=0.5)
        assert np.all(wide.upper - wide.lower >= narrow.upper - narrow.lower - 1e-15)


class TestErrors:
    @pytest.mark.parametrize("grid", [[0.0, 1.0], [-1.0, 1.0], [2.0, 1.0], [], [[1.0]]])
    def test_bad_grid(self, grid):
        with pytest.raises(CurveError):
            predictive_curve(single_atom(1, 1), grid)

    def test_empty_trace(self):
        with pytest.raises(CurveError):
            predictive_curve(make_trace([], 1), [1.0])

    def test_bad_kind_or_level(self):
        with pytest.raises(CurveError):
            predictive_curve(single_atom(1, 1), [1.0], "quantile")
        with pytest.raises(CurveError):
            predictive_curve(single_atom(1, 1), [1.0], band_level=1.0)

    def test_hazard_grid_mismatch(self):
        tr = single_atom(1, 1)
        d = predictive_curve(tr, [1.0, 2.0])
        s = predictive_curve(tr, [1.0, 3.0], "survival")
        with pytest.raises(CurveError):
            hazard_from_curves(d, s)
        with pytest.raises(CurveError):
            hazard_from_curves(s, d)


def test_csv_round_trip(tmp_path):
    grid = np.array([0.5, 1.0, 2.0])
    est = predictive_curve(single_atom(1.0, 1.0), grid, "survival")
    truth = 1 / (1 + grid)
    est.to_csv(tmp_path / "s.csv", truth=truth, header_lines=["seed=3"])
    text = (tmp_path / "s.csv").read_text()
    assert text.startswith("# seed=3\n")
    kind, cols = read_curve_csv(tmp_path / "s.csv")
    assert kind == "survival" and list(cols) == ["time", "mean", "lower", "upper", "truth"]
    np.testing.assert_array_equal(cols["mean"], est.mean)
    np.testing.assert_array_equal(cols["truth"], truth)


def test_default_grid():
    g = default_grid([2.0, 10.0])
    assert g.size == 200 and g[0] == 1.0 and g[-1] == pytest.approx(12.0)


def test_generic_kernel_base_term_is_seeded():
    from dpburr.kernels import WeibullKernel, fit_generic
    d = leukemia_fixture("A")
    tr = fit_generic(d, WeibullKernel.from_data(d.times), config=SamplerConfig(60, 20, 2, seed=4))
    grid = np.linspace(0.5, 50, 30)
    a, b = predictive_curve(tr, grid, "survival"), predictive_curve(tr, grid, "survival")
    assert np.array_equal(a.mean, b.mean)
    assert tr.kernel == "weibull" and tr.extra["kernel_settings"]["b_scale"] > 0


def test_error_shrinks_with_more_snapshots():
    truth = BurrParams(2.0, 6.0)
    grid = np.linspace(0.02, 1.2, 300)
    f_true = burr_pdf(grid, truth)
    counts = (10, 50, 100, 500)
    ise = []
    for seed in range(5):
        data = SurvivalData(Burr(2.0, 6.0).sample(np.random.default_rng(100 + seed), 100))
        tr = run_chain(data, HyperPriors(b_gamma=14.0, b_phi=2.7),
                       SamplerConfig(iterations=1700, burn_in=200, thin=3, seed=seed))
        row = []
        for m in counts:
            sub = Trace(tr.kernel, tr.snapshots[:m], tr.n, priors=tr.priors,
                        hyper_names=tr.hyper_names, extra=tr.extra)
            err = predictive_curve(sub, grid).mean - f_true
            row.append(np.trapezoid(err**2, grid))
        ise.append(row)
    med = np.median(ise, axis=0)
    assert np.all(np.diff(med) < 0), med
