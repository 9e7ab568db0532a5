import numpy as np
import pytest

from bpnmf.errors import ValidationError
from bpnmf.metrics import DB_CAP, decompose, evaluate, sdr_sir_sar


@pytest.fixture
def sources():
    rng = np.random.default_rng(0)
    return rng.standard_normal((2, 4000))


def test_perfect_estimate_hits_cap(sources):
    res = evaluate(sources, sources)
    assert np.all(res.sdr == DB_CAP) and np.all(res.sir == DB_CAP) and np.all(res.sar == DB_CAP)


def test_ten_db_artifact(sources):
    rng = np.random.default_rng(1)
    s = sources[0]
    noise = rng.standard_normal(s.shape)
    # make the noise exactly orthogonal to both sources, then set its power
    coef = np.linalg.solve(sources @ sources.T, sources @ noise)
    noise -= coef @ sources
    noise *= np.sqrt((s @ s) / 10 / (noise @ noise))
    sdr, sir, sar = sdr_sir_sar(decompose(s + noise, sources, 0))
    assert sdr == pytest.approx(10.0, abs=1e-6)
    assert sar == pytest.approx(10.0, abs=1e-6)
    assert sir == DB_CAP


def test_interference_only(sources):
    est = sources[0] + 0.1 * sources[1]
    s_t, e_i, e_a = decompose(est, sources, 0)
    ratio = (s_t @ s_t) / (e_i @ e_i)
    sdr, sir, sar = sdr_sir_sar((s_t, e_i, e_a))
    assert sir == pytest.approx(10 * np.log10(ratio))
    assert sar > 100


def test_components_add_up_and_are_orthogonal(sources):
    rng = np.random.default_rng(2)
    est = rng.standard_normal(4000) + sources[1]
    s_t, e_i, e_a = decompose(est, sources, 1)
    np.testing.assert_allclose(s_t + e_i + e_a, est, atol=1e-10)
    assert abs(e_a @ sources[0]) < 1e-8 and abs(e_a @ sources[1]) < 1e-8
    assert abs(s_t @ e_a) < 1e-8


def test_scale_invariance(sources):
    rng = np.random.default_rng(3)
    est = sources[0] + 0.3 * rng.standard_normal(4000)
    a = sdr_sir_sar(decompose(est, sources, 0))
    b = sdr_sir_sar(decompose(-4.0 * est, sources, 0))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_silent_estimate_floors(sources):
    sdr, sir, sar = sdr_sir_sar(decompose(np.zeros(4000), sources, 0))
    assert sdr == -DB_CAP


def test_degenerate_sources():
    s = np.ones((2, 10))
    with pytest.raises(ValidationError) as exc:
        decompose(np.ones(10), s, 0)
    assert exc.value.code == "degenerate-sources"


def test_rows(sources):
    res = evaluate(sources + 0.01, sources)
    rows = res.rows(["a", "b"])
    assert [r[0] for r in rows] == ["a", "b", "mean", "stderr"]
    assert rows[2][1] == pytest.approx(res.sdr.mean())
    with pytest.raises(ValidationError):
        evaluate(sources[:1], sources)


def test_half_interference_on_orthogonal_sources(sources):
    q, _ = np.linalg.qr(sources.T)
    s = q.T * 50.0
    s_t, e_i, e_a = decompose(s[0] + 0.5 * s[1], s, 0)
    assert np.linalg.norm(e_a) < 1e-10
    assert e_i @ e_i == pytest.approx(0.25 * (s[1] @ s[1]), rel=1e-12)
