import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpnmf.errors import ValidationError
from bpnmf.model import (
    GlobalDraw,
    Hyperparams,
    VariationalParams,
    active_components,
    surrogate_loglik,
    validate_model,
)


def test_published_defaults_validate():
    h = Hyperparams(a=0.5, b=0.5, c=5, d=5, a0=1, b0=1, K=500)
    x = np.array([[1, 0], [3, 2]])
    assert validate_model(h, x).dtype == np.int64
    assert h.pi_alpha == pytest.approx(0.002)
    assert h.pi_beta == pytest.approx(0.998)


def test_truncation_one_rejected():
    with pytest.raises(ValidationError) as exc:
        Hyperparams(K=1)
    assert exc.value.code == "truncation-too-small"


@pytest.mark.parametrize("field", ["a", "b", "c", "d", "a0", "b0"])
def test_nonpositive_hyperparameter(field):
    with pytest.raises(ValidationError) as exc:
        Hyperparams(**{field: 0.0})
    assert exc.value.code == "nonpositive-hyperparameter"


def test_all_zero_data_rejected():
    with pytest.raises(ValidationError) as exc:
        validate_model(Hyperparams(K=3), np.zeros((2, 2), dtype=int))
    assert exc.value.code == "all-zero-data"


def test_bad_counts_rejected():
    with pytest.raises(ValidationError):
        validate_model(Hyperparams(K=3), np.array([[1, -1]]))
    with pytest.raises(ValidationError):
        validate_model(Hyperparams(K=3), np.array([[1.5, 2.0]]))
    with pytest.raises(ValidationError) as exc:
        validate_model(Hyperparams(K=3), np.array([1, 2]))
    assert exc.value.code == "dimension-mismatch"


def _draw(W, H, pi):
    return GlobalDraw(W=np.atleast_2d(W), H=np.atleast_2d(H), pi=np.atleast_1d(pi))


def test_loglik_zero_count():
    assert surrogate_loglik([[0]], _draw([[1.0]], [[1.0]], [0.5]), [[1]]) == pytest.approx(-1.0)


def test_loglik_direct_pmf():
    expected = 2 * math.log(2) - 2 - math.log(2)  # log(2^2 e^-2 / 2!)
    assert surrogate_loglik([[2]], _draw([[1.0]], [[2.0]], [0.5]), [[1]]) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-1.30685, abs=1e-5)


def test_loglik_flags_zero_rate():
    assert surrogate_loglik([[1]], _draw([[1.0]], [[1.0]], [0.5]), [[0]]) == -math.inf


def test_loglik_improves_when_residual_component_added():
    # component 0 explains row 0, component 1 exactly the residual in row 1
    x = np.array([[4, 4], [6, 6]])
    W = np.array([[2.0, 1e-9], [1e-9, 3.0]])
    H = np.array([[2.0, 2.0], [2.0, 2.0]])
    g = _draw(W, H, [0.5, 0.5])
    without = surrogate_loglik(x, g, [[1, 1], [0, 0]])
    with_ = surrogate_loglik(x, g, [[1, 1], [1, 1]])
    assert with_ > without


def test_global_draw_positivity():
    with pytest.raises(ValidationError):
        _draw([[0.0]], [[1.0]], [0.5])
    with pytest.raises(ValidationError):
        _draw([[1.0]], [[1.0]], [1.0])
    with pytest.raises(ValidationError):
        _draw([[1.0]], [[1.0]], [0.0])


def test_arrays_are_read_only():
    g = _draw([[1.0]], [[1.0]], [0.5])
    with pytest.raises(ValueError):
        g.W[0, 0] = 2.0


def _vp(value, F=2, K=3, T=4):
    return VariationalParams(
        nuW=np.full((F, K), value), rhoW=np.ones((F, K)), nuH=np.ones((K, T)),
        rhoH=np.ones((K, T)), alphaPi=np.ones(K), betaPi=np.ones(K),
    )


@settings(max_examples=50)
@given(st.one_of(st.just(0.0), st.just(-0.0), st.floats(max_value=0.0), st.just(math.inf), st.just(math.nan)))
def test_variational_rejects_invalid(value):
    with pytest.raises(ValidationError):
        _vp(value)


@settings(max_examples=50)
@given(st.floats(min_value=5e-324, max_value=1e300))
def test_variational_accepts_any_positive(value):
    q = _vp(value)
    assert np.all(q.nuW > 0)


def test_variational_shape_check():
    with pytest.raises(ValidationError) as exc:
        VariationalParams(nuW=np.ones((2, 3)), rhoW=np.ones((2, 2)), nuH=np.ones((3, 4)),
                          rhoH=np.ones((3, 4)), alphaPi=np.ones(3), betaPi=np.ones(3))
    assert exc.value.code == "dimension-mismatch"


def test_active_components_threshold():
    assert list(active_components([0.01, 0.06, 0.5, 0.05])) == [1, 2]
    with pytest.raises(ValidationError):
        active_components([0.1], tau=1.0)
