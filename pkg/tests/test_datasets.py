import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mrgan.datasets import (DataFormatError, MixtureSpec, default_basis, load_csv, load_idx, load_idx_labels,
                            sample_mixture, save_csv, write_idx)


def test_degenerate_mixture_hits_centres():
    spec = MixtureSpec(sigma=0.0)
    ds, modes = sample_mixture(spec, 8000, np.random.default_rng(0), return_modes=True)
    for k in range(8):
        np.testing.assert_allclose(ds.samples[modes == k].mean(0), spec.centers()[k], atol=1e-6)


def test_samples_lie_on_the_plane():
    spec = MixtureSpec()
    x = sample_mixture(spec, 5000, np.random.default_rng(1)).samples
    assert np.max(np.abs((x - spec.offset) @ spec.normal)) <= 1e-9


def test_mode_occupancy():
    _, modes = sample_mixture(MixtureSpec(), 80_000, np.random.default_rng(2), return_modes=True)
    occ = np.bincount(modes, minlength=8) / 80_000
    assert np.all(np.abs(occ - 1 / 8) <= 0.01)


def test_embedding_is_isometric():
    spec = MixtureSpec()
    p2 = np.random.default_rng(3).standard_normal((50, 2))
    p3 = spec.lift(p2)
    d2 = np.linalg.norm(p2[:, None] - p2[None], axis=-1)
    d3 = np.linalg.norm(p3[:, None] - p3[None], axis=-1)
    assert np.max(np.abs(d2 - d3)) <= 1e-9


@given(st.integers(0, 2 ** 32 - 1))
def test_sampling_deterministic_per_seed(seed):
    a = sample_mixture(MixtureSpec(), 50, np.random.default_rng(seed)).samples
    b = sample_mixture(MixtureSpec(), 50, np.random.default_rng(seed)).samples
    assert np.array_equal(a, b)


def test_basis_must_be_orthonormal():
    with pytest.raises(ValueError):
        MixtureSpec(basis=np.array([[1.0, 0, 0], [1.0, 0, 0]]))
    np.testing.assert_allclose(default_basis() @ default_basis().T, np.eye(2), atol=1e-12)


# --- IDX -----------------------------------------------------------------------------

FIXTURE = bytes.fromhex("00000803" "00000002" "00000002" "00000002" "00ff8040" "01020304")


def test_idx_hand_fixture(tmp_path):
    p = tmp_path / "tiny.idx"
    p.write_bytes(FIXTURE)
    ds = load_idx(p)
    assert ds.samples.shape == (2, 4)
    np.testing.assert_allclose(ds.samples[0], [-1.0, 1.0, 128 / 127.5 - 1, 64 / 127.5 - 1])
    np.testing.assert_allclose(ds.samples[1], np.array([1, 2, 3, 4]) / 127.5 - 1)


def test_idx_endpoints(tmp_path):
    p = tmp_path / "e.idx"
    write_idx(p, np.array([[[0, 255]]], dtype=np.uint8))
    assert load_idx(p).samples.tolist() == [[-1.0, 1.0]]


def test_idx_gzip_round_trip(tmp_path):
    imgs = np.random.default_rng(0).integers(0, 256, (3, 4, 5)).astype(np.uint8)
    write_idx(tmp_path / "a.idx.gz", imgs)
    with gzip.open(tmp_path / "a.idx.gz", "rb") as fh:
        assert fh.read(4) == bytes.fromhex("00000803")
    np.testing.assert_allclose(load_idx(tmp_path / "a.idx.gz").samples, imgs.reshape(3, 20) / 127.5 - 1)


def test_label_file_rejected_by_image_loader(tmp_path):
    p = tmp_path / "labels.idx"
    p.write_bytes(struct.pack(">II", 0x00000801, 3) + bytes([1, 2, 3]))
    with pytest.raises(DataFormatError, match="magic"):
        load_idx(p)
    assert load_idx_labels(p).tolist() == [1, 2, 3]


def test_truncated_idx_reports_offset(tmp_path):
    p = tmp_path / "t.idx"
    p.write_bytes(FIXTURE[:-2])
    with pytest.raises(DataFormatError, match="offset 22"):
        load_idx(p)


# --- CSV ---------------------------------------------------------------------------

def test_csv_two_rows(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1.0,2.0\n3.0,4.0\n")
    assert load_csv(p, 2).samples.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_empty(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    assert len(load_csv(p, 3)) == 0


def test_csv_short_row_reports_line(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(DataFormatError, match=":2:"):
        load_csv(p, 3)


def test_csv_round_trip_is_exact(tmp_path):
    x = np.random.default_rng(0).standard_normal((20, 3))
    save_csv(tmp_path / "r.csv", x)
    assert np.array_equal(load_csv(tmp_path / "r.csv", 3).samples, x)
