import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accs.io import (KSpaceData, KSpaceFormatError, PGMFormatError, decode_kspace, decode_pgm,
                     encode_kspace, encode_pgm, read_csv, read_metrics, write_csv, write_metrics)
from accs.transforms import GridShape, SamplingPattern

from oracles import random_complex, random_orthonormal


def _data(seed=0, with_b=True):
    rng = np.random.default_rng(seed)
    shape = GridShape(4, 3)
    om = SamplingPattern(np.sort(rng.permutation(12)[:5]), 12)
    B = random_orthonormal(rng, 12, 2) if with_b else None
    return KSpaceData(shape, om, random_complex(rng, (5, 3)), 2, B)


@pytest.mark.parametrize("with_b", [True, False])
def test_kspace_roundtrip(with_b):
    d = _data(with_b=with_b)
    buf = encode_kspace(d)
    assert len(buf) == 29 + 4 * 5 + 16 * 15 + (16 * 24 if with_b else 0)
    e = decode_kspace(buf)
    assert e.shape == d.shape and e.omega == d.omega and e.k == 2
    np.testing.assert_array_equal(e.Y, d.Y)
    if with_b:
        np.testing.assert_array_equal(e.B, d.B)
    else:
        assert e.B is None


def test_kspace_header_layout():
    buf = encode_kspace(_data())
    assert buf[:4] == b"ACSK"
    assert np.frombuffer(buf[4:28], "<u4").tolist() == [1, 4, 3, 5, 3, 2]
    assert buf[28] == 1


@given(st.integers(0, 29 + 20 + 240 + 384 - 1))
@settings(max_examples=40, deadline=None)
def test_truncation_is_reported(cut):
    buf = encode_kspace(_data())
    with pytest.raises(KSpaceFormatError, match="truncated"):
        decode_kspace(buf[:cut])


def test_kspace_errors_name_offsets():
    buf = bytearray(encode_kspace(_data()))
    with pytest.raises(KSpaceFormatError, match="bad magic"):
        decode_kspace(b"XXXX" + bytes(buf[4:]))
    with pytest.raises(KSpaceFormatError, match="trailing"):
        decode_kspace(bytes(buf) + b"\0")
    bad = bytearray(buf)
    bad[28] = 6
    with pytest.raises(KSpaceFormatError, match="offset 28"):
        decode_kspace(bytes(bad))
    bad = bytearray(buf)
    bad[29:33] = (99).to_bytes(4, "little")
    with pytest.raises(KSpaceFormatError, match="Omega"):
        decode_kspace(bytes(bad))
    bad = bytearray(buf)
    bad[4:8] = (2).to_bytes(4, "little")
    with pytest.raises(KSpaceFormatError, match="version"):
        decode_kspace(bytes(bad))


def test_pgm_ramp_bytes():
    img = np.array([[0.0, 1.0, 2.0, 4.0]])
    buf = encode_pgm(img, 255)
    assert buf == b"P5\n4 1\n255\n" + bytes([0, 64, 128, 255])
    buf16 = encode_pgm(img)
    assert buf16.endswith(np.array([0, 16384, 32768, 65535], ">u2").tobytes())
    assert encode_pgm(np.zeros((2, 2)), 255).endswith(bytes(4))


def test_pgm_roundtrip_and_comments():
    rng = np.random.default_rng(0)
    img = rng.random((5, 7))
    out = decode_pgm(encode_pgm(img))
    assert out.shape == (5, 7)
    np.testing.assert_allclose(out, img / img.max(), atol=1 / 65535)
    commented = b"P5\n# made by hand\n2 1\n# max\n255\n\x00\xff"
    np.testing.assert_array_equal(decode_pgm(commented), [[0.0, 1.0]])


@pytest.mark.parametrize("buf", [b"P2\n1 1\n255\n\x00", b"P5\n2 2\n255\n\x00", b"P5\n2",
                                 b"P5\n0 2\n255\n", b"P5\nx 2\n255\n\x00"])
def test_pgm_errors(buf):
    with pytest.raises(PGMFormatError):
        decode_pgm(buf)


def test_csv_and_metrics(tmp_path):
    p = tmp_path / "t.csv"
    write_csv(p, ["a", "b", "c"], [{"a": 1, "b": 0.1, "c": True}, {"a": 2, "b": 1e-20, "c": False}])
    assert p.read_text() == "a,b,c\n1,0.1,1\n2,1e-20,0\n"
    assert read_csv(p)[1] == {"a": "2", "b": "1e-20", "c": "0"}
    with pytest.raises(KeyError):
        write_csv(p, ["a", "z"], [{"a": 1}])
    m = tmp_path / "m.txt"
    write_metrics(m, {"N": 4, "err": 0.25, "flag": False})
    assert read_metrics(m) == {"N": "4", "err": "0.25", "flag": "0"}
