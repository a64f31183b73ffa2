import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tsmkit import analysis as an
from tsmkit import ays
from tsmkit.geometry import homogenize
from tsmkit.system import ControlledSystem, DomainError, ParameterError, affine_1d

P = ays.AYSParams()


def homog_ays(p=P):
    return homogenize(ays.ays_transformed_system(p), 1e-4)


def test_integrate_policy_schedule():
    sys = ControlledSystem(1, ("up", "down"), "up",
                           lambda x, u: np.ones_like(x) if u == "up" else -np.ones_like(x))
    tr = an.integrate(sys, [0.0], [(0.0, "up"), (1.0, "down")], 3.0, 0.25)
    assert tr.controls[:4] == ["up"] * 4 and tr.controls[4:] == ["down"] * 8
    assert tr.final[0] == pytest.approx(-1.0)
    assert np.all(np.diff(tr.times) > 0)


def test_integrate_domain_exit_truncates():
    tr = an.integrate(affine_1d(0.0, 1.0), [0.0], "default", 5.0, 0.1, bounds=([0.0], [1.0]))
    assert tr.exited and tr.final[0] <= 1.0 and tr.times[-1] == pytest.approx(1.0)
    with pytest.raises(DomainError):
        an.integrate(affine_1d(0.0, 1.0), [2.0], "default", 1.0, 0.1, bounds=([0.0], [1.0]))
    with pytest.raises(ParameterError):
        an.integrate(affine_1d(0.0, 1.0), [0.0], "default", 1.0, 0.0)


def test_integrate_stops_at_rhs_domain_error():
    # the untransformed AYS model refuses negative states
    tr = an.integrate(ays.ays_system(P), [1.0, 1e13, 1e11], "default", 10.0, 0.5)
    assert not tr.exited
    sys = ControlledSystem(1, ("default",), "default", lambda x, u: -np.ones_like(x))
    tr = an.integrate(sys, [0.3], "default", 1.0, 0.1, bounds=([0.0], [1.0]))
    assert tr.exited and np.all(tr.states >= 0)


def test_rk4_fourth_order():
    """Halving the step cuts the error against an 8th-order reference by about 16."""
    sys = ays.ays_transformed_system(P)
    y0 = np.array([0.5, 0.5, 0.5])
    t_end = 100.0
    ref = solve_ivp(lambda t, y: sys(y, "default"), (0, t_end), y0, method="DOP853",
                    rtol=1e-13, atol=1e-15).y[:, -1]
    errs = [np.linalg.norm(an.integrate(sys, y0, "default", t_end, h).final - ref)
            for h in (4.0, 2.0, 1.0)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(12 < r < 20 for r in ratios), ratios


def test_flow_sample_deterministic_and_green_fixed_point():
    sys = homog_ays()
    a = an.flow_sample(sys, 20, seed=4, t_end=5.0, step=0.05)
    b = an.flow_sample(sys, 20, seed=4, t_end=5.0, step=0.05)
    assert all(np.array_equal(x.states, y.states) and x.attractor == y.attractor
               for x, y in zip(a, b))
    assert all(np.all((t.states >= 0) & (t.states <= 1)) for t in a)
    tr = an.integrate(sys, ays.GREEN_TRANSFORMED, "default", 5.0, 0.05, bounds=(np.zeros(3), np.ones(3)))
    assert np.array_equal(tr.final, ays.GREEN_TRANSFORMED)
    assert an.tag_attractor(np.array(ays.GREEN_TRANSFORMED)) == "green"
    with pytest.raises(ParameterError):
        an.flow_sample(sys, 0, 1)


def test_et_enlarges_green_basin():
    sys = homog_ays()
    default = an.green_fraction(an.flow_sample(sys, 300, seed=1, control=ays.DEFAULT))
    et = an.green_fraction(an.flow_sample(sys, 300, seed=1, control=ays.ET))
    assert et >= default


def test_hausdorff_polyline():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 0.1], [0.5, 0.1], [1.0, 0.1]])
    assert an.hausdorff_polyline(a, b) == pytest.approx(0.1)
    assert an.hausdorff_polyline(a, a) == 0.0
    c = np.array([[0.0, 0.0], [2.0, 0.0]])
    assert an.hausdorff_polyline(a, c) == pytest.approx(1.0)


def test_sweep_spec_validation():
    with pytest.raises(ParameterError):
        an.SweepSpec("beta", [0.01])
    with pytest.raises(ParameterError):
        an.SweepSpec("beta_lg", [])
    with pytest.raises(ParameterError):
        an.SweepSpec("beta_lg", [0.02, 0.01])
    s = an.SweepSpec.default("beta_lg")
    assert len(s.values) == 21 and s.values[0] == 0.015 and s.values[-1] == 0.035
    assert np.allclose(np.diff(s.values), 0.001)
    t = an.SweepSpec.default("sigma_et")
    assert len(t.values) == 8 and t.values[0] == pytest.approx(1e12) and t.values[-1] == pytest.approx(4e12)


def test_sweep_rows_in_order_and_failures_recorded():
    spec = an.SweepSpec("sigma_et", [-1.0, 1e12, 4e12], resolution=12)
    rows = an.bifurcation_sweep(spec)
    assert [r.value for r in rows] == [-1.0, 1e12, 4e12]
    assert rows[0].fractions is None and "ParameterError" in rows[0].error
    for r in rows[1:]:
        assert r.error is None and abs(sum(r.fractions.values()) - 1) < 1e-12
    par = an.bifurcation_sweep(spec, workers=2)
    assert [r.fractions for r in par] == [r.fractions for r in rows]


@pytest.mark.slow
def test_beta_lg_sweep_endpoints_80():
    """Backwater only at the low end, eddies only at the high end (80 points per axis)."""
    rows = an.bifurcation_sweep(an.SweepSpec("beta_lg", [0.015, 0.035], resolution=80))
    lo, hi = (r.fractions for r in rows)
    eddies = lambda f: f["SunnyEddy"] + f["DarkEddy"]
    assert lo["Backwater"] > 0 and eddies(lo) == 0
    assert hi["Backwater"] == 0 and eddies(hi) > 0
