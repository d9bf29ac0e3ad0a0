import numpy as np
import pytest

from hetcov.curves import (
    CoverageCurve,
    db_grid,
    read_curves_csv,
    read_header,
    read_joint_csv,
    write_curves_csv,
    write_joint_csv,
)


def _curve(prov="exact", hw=None):
    t = db_grid(-10, 10, 5)
    return CoverageCurve(t, np.array([0.9, 0.7, 0.5 + 1e-17, 1 / 3, 0.1]), prov, fingerprint="abc", half_width=hw)


def test_validation():
    with pytest.raises(ValueError, match="empty grid"):
        CoverageCurve(np.array([]), np.array([]), "exact")
    with pytest.raises(ValueError):
        CoverageCurve(np.array([1.0, 0.0]), np.array([0.5, 0.4]), "exact")
    with pytest.raises(ValueError):
        CoverageCurve(np.array([0.0, 1.0]), np.array([0.4, 0.5]), "exact")
    with pytest.raises(ValueError):
        CoverageCurve(np.array([0.0]), np.array([0.4]), "guess")


def test_roundtrip_exact(tmp_path):
    cs = [_curve(), _curve("upper_bound")]
    p = tmp_path / "c.csv"
    write_curves_csv(p, cs, {"fingerprint": "abc", "seed": 3})
    back = read_curves_csv(p)
    assert read_header(p) == {"fingerprint": "abc", "seed": "3"}
    assert len(back) == 2
    for a, b in zip(cs, back):
        assert a == b
        assert np.array_equal(a.values, b.values)


def test_roundtrip_half_width(tmp_path):
    c = _curve("simulation", hw=np.array([0.01, 0.02, 0.03, 0.02, 0.01]))
    p = tmp_path / "s.csv"
    write_curves_csv(p, [c])
    (back,) = read_curves_csv(p)
    assert np.array_equal(back.half_width, c.half_width)


def test_joint_roundtrip(tmp_path):
    p = tmp_path / "j.csv"
    ru, rd, v = np.array([1e4, 2e4]), np.array([3e4, 4e4]), np.array([0.75, 0.123456789012345])
    write_joint_csv(p, ru, rd, v)
    for a, b in zip(read_joint_csv(p), (ru, rd, v)):
        assert np.array_equal(a, b)


def test_sup_distance():
    a = _curve()
    b = CoverageCurve(a.thresholds, a.values * 0.5, "a1")
    assert a.sup_distance(b) == pytest.approx(0.45)
    assert a.sup_distance(b, lo=5.0) == pytest.approx(1 / 6)
    with pytest.raises(ValueError):
        a.sup_distance(CoverageCurve(np.array([0.0]), np.array([0.5]), "a1"))
