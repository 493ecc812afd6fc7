import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from triwave import fieldio
from triwave.exceptions import InputError
from triwave.grid import FD_DIRICHLET, GridSpec, build_grid


@given(dim=st.integers(1, 3), n=st.sampled_from([8, 10]), fd=st.booleans(),
       k=st.sampled_from([1, 3]), seed=st.integers(0, 1000))
def test_binary_roundtrip(tmp_path_factory, dim, n, fd, k, seed):
    spec = GridSpec(dimension=dim, half_width=3.5, points=n,
                    discretization=FD_DIRICHLET if fd else "spectral_periodic")
    vals = np.random.default_rng(seed).standard_normal((k,) + (n,) * dim)
    path = tmp_path_factory.mktemp("io") / "f.bin"
    fieldio.write_fields(path, spec, vals)
    spec2, vals2 = fieldio.read_fields(path)
    assert spec2 == spec
    np.testing.assert_array_equal(vals2, vals)


def test_header_layout(tmp_path):
    spec = GridSpec(dimension=1, half_width=2.0, points=8)
    path = fieldio.write_fields(tmp_path / "f.bin", spec, np.arange(8.0))
    raw = path.read_bytes()
    assert raw[:4] == b"TWFD"
    assert struct.unpack_from("<IIIdII", raw, 4) == (1, 1, 8, 2.0, 0, 1)
    assert len(raw) == 32 + 8 * 8


def test_rejects_corrupt_files(tmp_path):
    spec = GridSpec(dimension=1, points=8)
    path = fieldio.write_fields(tmp_path / "f.bin", spec, np.zeros(8))
    raw = path.read_bytes()
    cases = {"magic": b"XXXX" + raw[4:], "short": raw[:-8], "header": raw[:10]}
    for name, blob in cases.items():
        p = tmp_path / f"{name}.bin"
        p.write_bytes(blob)
        with pytest.raises(InputError):
            fieldio.read_fields(p)
    with pytest.raises(InputError):
        fieldio.read_fields(tmp_path / "missing.bin")


def test_shape_mismatch_on_write(tmp_path):
    with pytest.raises(ValueError):
        fieldio.write_fields(tmp_path / "f.bin", GridSpec(dimension=1, points=8), np.zeros(9))


def test_csv_roundtrip(tmp_path, rng):
    g = build_grid(dimension=2, half_width=2.0, points=8)
    vals = rng.standard_normal((3,) + g.shape)
    path = fieldio.write_csv(tmp_path / "f.csv", g, vals)
    assert path.read_text().splitlines()[0] == "x1,x2,u,v,w"
    np.testing.assert_array_equal(fieldio.read_csv(path, g), vals)
