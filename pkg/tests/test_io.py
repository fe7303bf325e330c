import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varcap.grid import (BumpExponent, PowerWeight, RegionMask, ScalarField, build_grid,
                         sample_exponent, sample_weight)
from varcap.io import (field_csv, from_bytes, read_container, to_bytes, trace_csv,
                       write_container)

GRID = build_grid(2, (-1.0, 0.5), (2.0, 1.5), (9, 7))


def test_round_trip_all_types(tmp_path):
    p = sample_exponent(BumpExponent(1.5, 3.0, (0.0, 1.0), 0.5), GRID)
    w = sample_weight(PowerWeight(0.3, (0.2, 1.1)), GRID, p)
    f = ScalarField(GRID, np.random.default_rng(0).standard_normal(GRID.shape))
    m = RegionMask(GRID, f.values > 0, "open")
    for obj in (p, w, f, m):
        path = tmp_path / "x.vcap"
        write_container(path, obj)
        back = read_container(path)
        assert type(back) is type(obj) and back.grid == GRID
        if isinstance(obj, RegionMask):
            assert np.array_equal(back.membership, m.membership) and back.kind == "open"
        else:
            assert np.array_equal(back.values, obj.values)
    back = from_bytes(to_bytes(p))
    assert (back.p_minus, back.p_plus, back.log_holder_C) == (p.p_minus, p.p_plus, p.log_holder_C)


@given(st.integers(1, 3), st.integers(3, 6), st.integers(0, 10**6))
def test_round_trip_bit_exact(dim, n, seed):
    g = build_grid(dim, (0.1,) * dim, (1.3,) * dim, n)
    v = np.random.default_rng(seed).standard_normal(g.shape) * 1e30 ** np.random.default_rng(
        seed).uniform(-1, 1)
    back = from_bytes(to_bytes(ScalarField(g, v)))
    assert back.values.tobytes() == np.ascontiguousarray(v).tobytes()


def test_bad_containers():
    data = to_bytes(ScalarField(GRID, np.zeros(GRID.shape)))
    with pytest.raises(ValueError):
        from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        from_bytes(data[:-8])
    with pytest.raises(TypeError):
        to_bytes(np.zeros(3))


def test_csv_layout():
    g = build_grid(1, (0.0,), (1.0,), 3)
    text = field_csv(ScalarField(g, np.array([0.0, 0.5, 1.0])))
    assert text == "x0,value\n0.0,0.0\n0.5,0.5\n1.0,1.0\n"
    m = RegionMask(g, np.array([True, False, True]), "compact")
    assert field_csv(m).splitlines()[1:] == ["0.0,1", "0.5,0", "1.0,1"]
    assert trace_csv([3.0, 2.5]) == "iteration,energy\n0,3.0\n1,2.5\n"
    assert len(field_csv(ScalarField(GRID, np.zeros(GRID.shape))).splitlines()) == 64
