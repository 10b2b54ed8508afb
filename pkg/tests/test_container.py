import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from h2h.classifier import ClassifierWeights
from h2h.container import (read_features, read_features_csv, read_header, read_weights,
                           write_features, write_features_csv, write_weights)
from h2h.errors import FormatError


def test_feature_layout_is_column_major_little_endian(tmp_path):
    x = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    path = tmp_path / "x.h2hf"
    write_features(path, x)
    raw = path.read_bytes()
    assert raw[:4] == b"H2HF"
    assert struct.unpack_from("<III", raw, 4) == (1, 2, 3)
    assert struct.unpack_from("<6d", raw, 16) == (1.0, 4.0, 2.0, 5.0, 3.0, 6.0)
    assert len(raw) == 16 + 48
    assert read_header(path) == (b"H2HF", 1, 2, 3)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 7)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_feature_roundtrip_bit_exact(tmp_path_factory, x):
    path = tmp_path_factory.mktemp("c") / "x.h2hf"
    write_features(path, x)
    back = read_features(path)
    assert back.tobytes() == np.asarray(x, dtype=np.float64).tobytes()


def test_bad_files(tmp_path):
    path = tmp_path / "bad.h2hf"
    path.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(FormatError):
        read_features(path)
    path.write_bytes(b"H2H")
    with pytest.raises(FormatError):
        read_features(path)
    path.write_bytes(struct.pack("<4sIII", b"H2HF", 2, 1, 1) + bytes(8))
    with pytest.raises(FormatError):
        read_features(path)
    path.write_bytes(struct.pack("<4sIII", b"H2HF", 1, 2, 2) + bytes(8))
    with pytest.raises(FormatError):
        read_features(path)
    path.write_bytes(struct.pack("<4sIII", b"H2HF", 1, 1, 1) + bytes(9))
    with pytest.raises(FormatError):
        read_features(path)


def test_weights_roundtrip(tmp_path, rng):
    w = ClassifierWeights(rng.standard_normal((3, 5)), 0.25, ("alpha", "β", "subject 3"))
    path = tmp_path / "w.h2hw"
    write_weights(path, w)
    back = read_weights(path)
    assert back.w.tobytes() == w.w.tobytes()
    assert back.eta == 0.25 and back.class_names == w.class_names
    with pytest.raises(FormatError):
        read_features(path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError):
        read_weights(path)


def test_weights_require_one_name_per_row(tmp_path):
    with pytest.raises(ValueError):
        write_weights(tmp_path / "w.h2hw", ClassifierWeights(np.ones((2, 2)), 1.0, ("a",)))


def test_csv_roundtrip(tmp_path, rng):
    x = rng.standard_normal((4, 3)) * 10.0 ** rng.integers(-20, 20, (4, 3))
    path = tmp_path / "x.csv"
    write_features_csv(path, x)
    assert np.array_equal(read_features_csv(path), x)
    write_features_csv(path, x, ["s1", "s2", "s1"])
    back, labels = read_features_csv(path, header=True)
    assert np.array_equal(back, x) and labels == ["s1", "s2", "s1"]
