import math

import numpy as np
import pytest

import afshape


def test_constellation_moments():
    c = afshape.Constellation("16QAM")
    assert c.mu4 == pytest.approx(1.32)
    assert c.nu_m2 == pytest.approx(17.0 / 9.0)
    assert len(c.points) == 16
    with pytest.raises(afshape.AfshapeError):
        afshape.Constellation("8PSK")


def test_structured_allocation_and_closed_form():
    spec = afshape.SecureAcfSpec(0.75, 3)
    assert spec.kappa == 4
    p = afshape.structured_allocation(spec, 64)
    assert isinstance(p, np.ndarray)
    assert p.sum() == pytest.approx(64.0)
    assert p[0] == pytest.approx(3.25) and p[1] == pytest.approx(0.25)
    m = afshape.metrics_closed_form(spec, afshape.Constellation("16QAM"))
    assert m.psl_db == pytest.approx(-2.5, abs=0.1)
    assert m.isl_db == pytest.approx(4.0, abs=0.1)


def test_expected_acf_matches_metrics():
    c = afshape.Constellation("16QAM")
    p = afshape.structured_allocation(afshape.SecureAcfSpec(0.5, 3), 64)
    sq = np.asarray(afshape.expected_sq_acf(p, c)).ravel()
    assert sq.shape == (64,)
    m = afshape.metrics(p, c)
    assert m.psl == pytest.approx(sq[1:].max() / sq[0])
    assert m.isl == pytest.approx(sq[1:].sum() / sq[0])


def test_snr_loss_and_kappa():
    c = afshape.Constellation("16QAM")
    p = afshape.structured_allocation(afshape.SecureAcfSpec(0.75, 3), 256)
    assert 10 * math.log10(afshape.snr_loss(p, c)) == pytest.approx(7.6, abs=0.05)
    assert afshape.select_kappa(10 ** 0.7, 10 ** -0.5, 1.32, 256) == 16


def test_design_round_trip():
    out = afshape.design({"rho": 0.0, "eps_psl_db": -5, "eps_isl_db": 7,
                          "channel": {"type": "flat", "snr_db": 10}})
    assert out["kappa"] == 16
    power = np.asarray(out["alloc"]["power"])
    assert power.sum() == pytest.approx(256.0)
    with pytest.raises(afshape.ConfigError):
        afshape.design({"rho": 0.5, "bogus": 1})


def test_run_experiment_is_deterministic():
    assert "fig9" in afshape.experiment_ids()
    cfg = {"experiment": "fig4", "trials": 20, "seed": 2025}
    t1, s1 = afshape.run_experiment(dict(cfg, threads=1))
    t2, s2 = afshape.run_experiment(dict(cfg, threads=2))
    assert t1 == t2 and s1 == s2
    assert set(t1) == {"fig4_acf.csv", "fig4_metrics.csv"}
    assert len(s1["specs"]) == 3
