import struct

import numpy as np
import pytest

from dynseg import io


@pytest.fixture
def matrix():
    return np.random.default_rng(0).normal(size=(100, 7)) * 1e3


def test_binary_round_trip(tmp_path, matrix):
    path = tmp_path / "x.bin"
    io.write_binary(path, matrix)
    raw = path.read_bytes()
    assert len(raw) == 18 + 8 * 700
    # header built by hand, independently of the module's Struct
    assert raw[:18] == b"DSEG\x01\x00" + (7).to_bytes(4, "little") + (100).to_bytes(8, "little")
    assert struct.unpack_from("<d", raw, 18)[0] == matrix[0, 0]
    back = io.read_binary(path)
    assert back.tobytes() == matrix.tobytes()


def test_binary_errors(matrix):
    buf = io.encode_binary(matrix)
    with pytest.raises(io.FormatError, match="magic"):
        io.decode_binary(b"XSEG" + buf[4:])
    with pytest.raises(io.FormatError, match="truncated payload"):
        io.decode_binary(buf[:-1])
    with pytest.raises(io.FormatError, match="truncated header"):
        io.decode_binary(buf[:10])
    with pytest.raises(io.FormatError, match="trailing"):
        io.decode_binary(buf + b"\0")
    with pytest.raises(io.FormatError, match="version"):
        io.decode_binary(buf[:4] + b"\x02" + buf[5:])
    bad = matrix.copy()
    bad[3, 3] = np.nan
    with pytest.raises(io.FormatError, match="non-finite"):
        io.decode_binary(io.encode_binary(bad))


def test_csv_round_trip(tmp_path, matrix):
    path = tmp_path / "x.csv"
    io.write_csv(path, matrix)
    assert io.read_csv(path).tobytes() == matrix.tobytes()


def test_csv_parse(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("1,2.5\n\n-3,4e2\n")
    assert io.read_csv(path).tolist() == [[1.0, 2.5], [-3.0, 400.0]]


@pytest.mark.parametrize("text,match", [
    ("1,2\n3\n", "ragged"),
    ("1,nan\n", "non-finite"),
    ("1,abc\n", "could not convert"),
    ("", "no feature rows"),
])
def test_csv_errors(tmp_path, text, match):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(io.FormatError, match=match):
        io.read_csv(path)


def test_detect_format(tmp_path, matrix):
    path = tmp_path / "noext"
    io.write_binary(path, matrix)
    assert io.detect_format(path) == "binary"
    assert io.read_features(path).shape == (100, 7)
    assert io.detect_format(tmp_path / "a.csv") == "csv"


@pytest.mark.parametrize("name", ["s.csv", "s.bin"])
def test_row_iterator_matches_bulk(tmp_path, matrix, name):
    path = tmp_path / name
    io.write_features(path, matrix)
    rows = list(io.iter_feature_rows(path))
    assert np.array_equal(np.vstack(rows), matrix)


def test_row_iterator_truncated(tmp_path, matrix):
    path = tmp_path / "t.bin"
    path.write_bytes(io.encode_binary(matrix)[:-4])
    with pytest.raises(io.FormatError, match="truncated"):
        list(io.iter_feature_rows(path))


def test_labels(tmp_path):
    path = tmp_path / "l.csv"
    path.write_text("0,0\n1,0\n2,5\n")
    assert io.read_labels(path) == [0, 0, 5]
    io.write_labels(path, [3, 1, 1, 0])
    assert path.read_text() == "0,3\n1,1\n2,1\n3,0\n"
    assert io.read_labels(path) == [3, 1, 1, 0]


@pytest.mark.parametrize("text,match", [("0,1\n2,1\n", "gap"), ("0,1\n0,2\n", "duplicate"),
                                        ("0,1,2\n", "frame_index"), ("0,x\n", "non-integer")])
def test_label_errors(tmp_path, text, match):
    path = tmp_path / "l.csv"
    path.write_text(text)
    with pytest.raises(io.FormatError, match=match):
        io.read_labels(path)


def test_boundaries(tmp_path):
    path = tmp_path / "b.txt"
    io.write_boundaries(path, [5, 17])
    assert path.read_text() == "5\n17\n"
    path.write_text("# header\n5\n\n17  # trailing\n")
    assert io.read_boundaries(path) == [5, 17]
    path.write_text("5.5\n")
    with pytest.raises(io.FormatError):
        io.read_boundaries(path)
