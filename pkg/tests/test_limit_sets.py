import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from switchstab import (
    SwitchedSystem,
    SwitchingSignal,
    converges_to,
    hausdorff,
    hausdorff_directed,
    omega_limit,
    omega_sharp,
    simulate,
    weakly_meagre_estimate,
)
from switchstab.limit_sets import box_distance, dedupe

clouds = arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)), elements=st.floats(-5, 5))


@given(clouds, st.floats(1e-3, 1.0))
def test_dedupe_leaves_separated_points(points, tol):
    est = dedupe(points, tol)
    for i in range(len(est)):
        for j in range(i + 1, len(est)):
            assert np.linalg.norm(est.points[i] - est.points[j]) > tol
    # every input point is close to a kept one
    assert all(est.distance(p) <= tol for p in points)


@given(clouds, clouds)
def test_hausdorff_is_symmetric_and_dominates_directed(a, b):
    assert hausdorff(a, b) == pytest.approx(hausdorff(b, a))
    assert hausdorff_directed(a, b) <= hausdorff(a, b) + 1e-12
    assert hausdorff(a, a) == 0.0


def test_decaying_run_has_origin_as_limit():
    sys_ = SwitchedSystem.linear([-np.eye(2)])
    traj = simulate(sys_, SwitchingSignal.constant(1, 0.0, 30.0), [1.0, 1.0], step=1e-2)
    omega = omega_limit(traj)
    assert omega.distance([0.0, 0.0]) < 1e-2
    assert converges_to(traj, omega, 1e-2, 25.0)
    assert converges_to(traj, lambda x: float(np.linalg.norm(x)), 1e-2, 25.0)
    assert not converges_to(traj, box_distance([0.5, 0.5], [1.0, 1.0]), 1e-2, 25.0)


def test_omega_sharp_excludes_samples_near_switches():
    sys_ = SwitchedSystem.linear([np.zeros((1, 1)), np.zeros((1, 1))])
    sig = SwitchingSignal(0.0, 10.0, 1, tuple((float(k), 2 if k % 2 else 1) for k in range(1, 10)))
    traj = simulate(sys_, sig, [1.0], step=0.05)
    est = omega_sharp(traj, r_min=0.5, tail_fraction=1.0)
    assert set(est.modes.tolist()) == {1, 2}
    # no sample before t=9 is a full r_min ahead of its next switch
    late = omega_sharp(traj, r_min=1.5, tail_fraction=1.0)
    assert late.modes.tolist() == [2]
    with pytest.raises(ValueError):
        omega_sharp(traj, r_min=0.0)


def test_meagre_windows_start_at_first_sample():
    t = np.linspace(3.0, 13.0, 1001)
    rep = weakly_meagre_estimate(t, np.exp(-(t - 3.0)), window=1.0, n_windows=10)
    np.testing.assert_allclose(rep.window_starts, 3.0 + np.arange(10))
    assert rep.consistent
    assert rep.infima[-1] == pytest.approx(math.exp(-10.0), rel=1e-2)


def test_meagre_rejects_short_signals():
    with pytest.raises(ValueError):
        weakly_meagre_estimate(np.linspace(0, 1, 10), np.zeros(10), window=1.0, n_windows=3)


@given(st.floats(0.01, 5.0))
def test_positive_constant_is_never_meagre(level):
    t = np.linspace(0.0, 20.0, 2001)
    assert not weakly_meagre_estimate(t, np.full_like(t, level), 1.0, 20).consistent
