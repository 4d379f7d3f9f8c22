import numpy as np
import pytest
from hypothesis import given, strategies as st

from hvzkit.potentials import (
    AngularHomogeneous,
    Constant,
    GaussianWell,
    PoschlTeller,
    Product,
    RegularizedCoulomb,
    Sum,
    function_from_dict,
)

FAMILIES = [
    GaussianWell(1.5, 0.7, 2),
    PoschlTeller(2.0),
    RegularizedCoulomb(-0.8, 3),
    AngularHomogeneous(0.5, (1.0, -2.0)),
    AngularHomogeneous.one_dim(2.0, 5.0),
    Constant(3.0, 2),
    Sum((GaussianWell(1.0, 1.0, 2), AngularHomogeneous(1.0, (0.0, 1.0)))),
    Product((RegularizedCoulomb(2.0, 1), Constant(-1.0, 1))),
]


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.family)
def test_limit_matches_far_evaluation(f):
    rng = np.random.default_rng(0)
    om = rng.normal(size=(16, f.dim))
    om /= np.linalg.norm(om, axis=1, keepdims=True)
    far = f(1e7 * om)
    assert np.allclose(far, f.limit(om), atol=1e-6)


@pytest.mark.parametrize("f", FAMILIES, ids=lambda f: f.family)
def test_dict_round_trip(f):
    assert function_from_dict(f.to_dict(), f.dim) == f


def test_closed_forms():
    assert PoschlTeller(2.0)(np.array([[0.0]]))[0] == -2.0
    assert GaussianWell(1.0, 2.0, 1)(np.array([[2.0]]))[0] == pytest.approx(-np.exp(-1.0))
    assert RegularizedCoulomb(1.0, 1)(np.array([[0.0]]))[0] == 1.0
    g = AngularHomogeneous.one_dim(2.0, 5.0)
    assert g(np.array([[0.0]]))[0] == 0.0
    assert g.limit(np.array([[1.0], [-1.0]])).tolist() == [2.0, 5.0]


def test_c0_flags():
    assert GaussianWell(1.0).is_c0 and PoschlTeller(1.0).is_c0 and RegularizedCoulomb(1.0).is_c0
    assert not AngularHomogeneous.one_dim(1.0, 1.0).is_c0
    assert Constant(0.0).is_c0 and not Constant(1.0).is_c0
    assert Product((GaussianWell(1.0), Constant(2.0))).is_c0
    assert not Sum((GaussianWell(1.0), Constant(2.0))).is_c0


def test_bad_shapes_and_specs():
    with pytest.raises(ValueError):
        GaussianWell(1.0, 1.0, 2)(np.zeros((3, 1)))
    with pytest.raises(ValueError):
        PoschlTeller(1.0, 2)
    with pytest.raises(ValueError):
        function_from_dict({"family": "nope"}, 1)
    with pytest.raises(ValueError):
        function_from_dict({"family": "angular_homogeneous", "params": {"coefficients": [1, 2]}}, 1)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.0, 50.0))
def test_one_dim_angular_is_bounded_between_limits(plus, minus, r):
    g = AngularHomogeneous.one_dim(plus, minus)
    lo, hi = min(plus, minus, 0.0), max(plus, minus, 0.0)
    for x in (r, -r):
        v = g(np.array([[x]]))[0]
        assert lo - 1e-12 <= v <= hi + 1e-12
