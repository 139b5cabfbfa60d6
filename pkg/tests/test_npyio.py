import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmfx import MalformedHeaderError, UnsupportedDtypeError
from nmfx.npyio import load_array, read_header, save_array


def test_round_trip_float32_bitwise(tmp_path, rng):
    arr = rng.random((3, 512, 14, 14)).astype(np.float32)
    save_array(tmp_path / "t.npy", arr)
    back = load_array(tmp_path / "t.npy")
    assert back.dtype == np.float32
    assert back.shape == arr.shape
    assert np.array_equal(back.view(np.uint32), arr.view(np.uint32))


def test_round_trip_float64_bitwise(tmp_path, rng):
    arr = rng.random((5, 7))
    save_array(tmp_path / "t.npy", arr)
    back = load_array(tmp_path / "t.npy")
    assert back.dtype == np.float64
    assert np.array_equal(back.view(np.uint64), arr.view(np.uint64))


def test_numpy_reads_our_files(tmp_path, rng):
    arr = rng.random((4, 6))
    save_array(tmp_path / "t.npy", arr)
    assert np.array_equal(np.load(tmp_path / "t.npy"), arr)


def test_we_read_numpy_files(tmp_path, rng):
    arr = rng.random((2, 3, 4, 5)).astype(np.float32)
    np.save(tmp_path / "t.npy", arr)
    assert np.array_equal(load_array(tmp_path / "t.npy"), arr)


def test_save_is_deterministic(tmp_path, rng):
    arr = rng.random((6, 9))
    save_array(tmp_path / "a.npy", arr)
    save_array(tmp_path / "b.npy", arr)
    assert (tmp_path / "a.npy").read_bytes() == (tmp_path / "b.npy").read_bytes()


def test_big_endian_dtype_rejected():
    header = b"{'descr': '>f8', 'fortran_order': False, 'shape': (2, 2), }"
    blob = b"\x93NUMPY\x01\x00" + len(header).to_bytes(2, "little") + header
    with pytest.raises(UnsupportedDtypeError):
        read_header(io.BytesIO(blob))


def test_non_float_dtype_rejected():
    header = b"{'descr': '<i8', 'fortran_order': False, 'shape': (2, 2), }"
    blob = b"\x93NUMPY\x01\x00" + len(header).to_bytes(2, "little") + header
    with pytest.raises(UnsupportedDtypeError):
        read_header(io.BytesIO(blob))


def test_bad_magic_rejected():
    with pytest.raises(MalformedHeaderError, match="magic"):
        read_header(io.BytesIO(b"NOTNPY\x01\x00"))


def test_version_2_rejected():
    blob = b"\x93NUMPY\x02\x00\x10\x00" + b" " * 16
    with pytest.raises(MalformedHeaderError, match="version"):
        read_header(io.BytesIO(blob))


def test_fortran_order_rejected():
    header = b"{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }"
    blob = b"\x93NUMPY\x01\x00" + len(header).to_bytes(2, "little") + header
    with pytest.raises(MalformedHeaderError, match="fortran"):
        read_header(io.BytesIO(blob))


def test_truncated_payload_rejected(tmp_path, rng):
    path = tmp_path / "t.npy"
    save_array(path, rng.random((4, 4)))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(MalformedHeaderError, match="malformed header"):
        load_array(path)


def test_truncated_header_rejected(tmp_path, rng):
    path = tmp_path / "t.npy"
    save_array(path, rng.random((4, 4)))
    path.write_bytes(path.read_bytes()[:10])
    with pytest.raises(MalformedHeaderError, match="malformed header"):
        load_array(path)


def test_unsupported_rank_rejected(tmp_path):
    with pytest.raises(MalformedHeaderError, match="rank"):
        save_array(tmp_path / "t.npy", np.zeros(3))
    np.save(tmp_path / "r3.npy", np.zeros((2, 2, 2)))
    with pytest.raises(MalformedHeaderError, match="rank"):
        load_array(tmp_path / "r3.npy")


def test_header_is_64_byte_aligned(tmp_path):
    path = save_array(tmp_path / "t.npy", np.zeros((2, 2)))
    blob = path.read_bytes()
    hlen = int.from_bytes(blob[8:10], "little")
    assert (10 + hlen) % 64 == 0
    assert blob[10 + hlen - 1:10 + hlen] == b"\n"


@settings(max_examples=25, deadline=None)
@given(
    arr=st.one_of(
        arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
               elements=st.floats(0, 1e6)),
        arrays(np.float32,
               st.tuples(st.integers(1, 3), st.integers(1, 3),
                         st.integers(1, 3), st.integers(1, 3)),
               elements=st.floats(0, 1e6, width=32)),
    )
)
def test_round_trip_property(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("npy") / "t.npy"
    save_array(path, arr)
    back = load_array(path)
    assert back.dtype == arr.dtype
    assert back.shape == arr.shape
    assert np.array_equal(back, arr)
