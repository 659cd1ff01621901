import numpy as np
import pytest

from maskkd.tenio import (
    FormatError,
    decode_ten,
    encode_ten,
    load_checkpoint,
    load_pgm,
    load_ten,
    save_checkpoint,
    save_label_pgm,
    save_pgm,
    save_ten,
)


def test_ten_round_trip(tmp_path):
    a = np.random.default_rng(0).normal(size=(2, 3, 4)).astype(np.float32)
    save_ten(tmp_path / "a.ten", a)
    assert load_ten(tmp_path / "a.ten").tobytes() == a.tobytes()


def test_ten_layout():
    buf = encode_ten(np.array([[1.0, 2.0]], np.float32))
    assert buf[:8] == b"ACAMTEN1"
    assert buf[8:12] == (2).to_bytes(4, "little")
    assert buf[12:20] == (1).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert np.frombuffer(buf[20:], "<f4").tolist() == [1.0, 2.0]


@pytest.mark.parametrize("buf", [b"NOTATEN!\x00\x00\x00\x00", b"ACAMTEN1", encode_ten(np.ones(3))[:-1]])
def test_ten_malformed(buf):
    with pytest.raises(FormatError):
        decode_ten(buf)


def test_pgm_min_max(tmp_path):
    save_pgm(tmp_path / "m.pgm", np.array([[0.2, 0.4], [0.6, 0.2]]))
    px = load_pgm(tmp_path / "m.pgm")
    assert px.tolist() == [[0, 128], [255, 0]]
    assert (tmp_path / "m.pgm").read_bytes().startswith(b"P5\n2 2\n255\n")


def test_pgm_constant(tmp_path):
    save_pgm(tmp_path / "c.pgm", np.full((3, 2), 0.7))
    assert np.all(load_pgm(tmp_path / "c.pgm") == 255)


def test_label_pgm_verbatim(tmp_path):
    y = np.array([[0, 3], [1, 2]])
    save_label_pgm(tmp_path / "y.pgm", y)
    np.testing.assert_array_equal(load_pgm(tmp_path / "y.pgm"), y)


def test_checkpoint_round_trip(tmp_path):
    tensors = {"w": np.arange(6, dtype=np.float32).reshape(2, 3), "b": np.zeros(2, np.float32)}
    save_checkpoint(tmp_path / "ck", tensors, {"config.txt": "lr=0.1\n"})
    back = load_checkpoint(tmp_path / "ck")
    assert set(back) == {"w", "b"}
    np.testing.assert_array_equal(back["w"], tensors["w"])
    assert (tmp_path / "ck" / "config.txt").read_text() == "lr=0.1\n"
    assert not list((tmp_path / "ck").glob(".*.tmp"))


def test_checkpoint_manifest_mismatch(tmp_path):
    save_checkpoint(tmp_path / "ck", {"w": np.zeros((2, 2), np.float32)})
    save_ten(tmp_path / "ck" / "w.ten", np.zeros(3, np.float32))
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "ck")


def test_checkpoint_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path)
