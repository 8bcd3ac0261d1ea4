import math

import numpy as np
import pytest

from auglik import augment
from auglik.datasets import (
    Dataset,
    generate_synthetic,
    load_dataset,
    true_labeler,
    write_dataset,
    write_idx,
)
from auglik.errors import ConfigurationError, ContractError, IngestionError


@pytest.mark.parametrize("name", ["shift_digits", "rotated_blobs"])
def test_fixed_seed_is_bit_identical(name):
    a_train, a_test = generate_synthetic(name, 50, 20, seed=3)
    b_train, b_test = generate_synthetic(name, 50, 20, seed=3)
    assert a_train.inputs.tobytes() == b_train.inputs.tobytes()
    assert a_test.labels.tobytes() == b_test.labels.tobytes()
    c_train, _ = generate_synthetic(name, 50, 20, seed=4)
    assert not np.array_equal(a_train.inputs, c_train.inputs)


def test_shift_labels_invariant_under_group():
    train, _ = generate_synthetic("shift_digits", 200, 0, seed=1, dim=12)
    label = true_labeler("shift_digits", 1, dim=12)
    np.testing.assert_array_equal(label(train.inputs), train.labels)
    orbit = augment.cyclic_shift_group(12)
    for X in orbit.enumerate_batch(train.inputs).transpose(1, 0, 2):
        np.testing.assert_array_equal(label(X), train.labels)


def test_blob_labels_invariant_under_rotation():
    train, _ = generate_synthetic("rotated_blobs", 200, 0, seed=2)
    label = true_labeler("rotated_blobs", 2)
    np.testing.assert_array_equal(label(train.inputs), train.labels)
    rng = np.random.default_rng(0)
    for angle in rng.uniform(0, 2 * np.pi, size=10):
        X = augment.Transform("rotation_2d", angle).apply(train.inputs)
        np.testing.assert_array_equal(label(X), train.labels)


@pytest.mark.parametrize("name, Y", [("shift_digits", 4), ("rotated_blobs", 3)])
def test_class_counts_uniform(name, Y):
    n = 6000
    train, _ = generate_synthetic(name, n, 0, seed=5)
    counts = np.bincount(train.labels, minlength=Y)
    se = math.sqrt(n * (1 / Y) * (1 - 1 / Y))
    assert np.all(np.abs(counts - n / Y) < 3 * se)


def test_label_noise_rate():
    n = 5000
    noisy, _ = generate_synthetic("shift_digits", n, 0, seed=6, label_noise=0.2)
    clean = true_labeler("shift_digits", 6)(noisy.inputs)
    rate = np.mean(noisy.labels != clean)
    assert abs(rate - 0.2) < 3 * math.sqrt(0.2 * 0.8 / n)


def test_metadata_declares_group():
    train, test = generate_synthetic("shift_digits", 5, 5, seed=0)
    assert train.metadata["invariance"] == "cyclic_shift"
    assert test.metadata["part"] == "test"


def test_unknown_generator():
    with pytest.raises(ConfigurationError):
        generate_synthetic("cifar", 10, 10, seed=0)
    with pytest.raises(ConfigurationError):
        generate_synthetic("shift_digits", 10, 10, seed=0, colour=1)


def test_dataset_validation():
    with pytest.raises(ContractError):
        Dataset(np.zeros((2, 3)), [0, 2], 2)
    with pytest.raises(ContractError):
        Dataset(np.zeros((0, 3)), [], 2)
    ds = Dataset(np.zeros((2, 3)), [0, 1], 2)
    with pytest.raises(ValueError):
        ds.inputs[0, 0] = 1.0


def test_two_row_csv_fixture(tmp_path):
    p = tmp_path / "two.csv"
    p.write_text("label,f0,f1\n1,0.1,-2.5e-3\n0,3,1e300\n")
    ds = load_dataset(p)
    assert len(ds) == 2
    np.testing.assert_array_equal(ds.inputs, [[0.1, -2.5e-3], [3.0, 1e300]])
    np.testing.assert_array_equal(ds.labels, [1, 0])


def test_csv_label_out_of_range_names_row(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("label,f0\n0,1.0\n1,2.0\n2,3.0\n")
    with pytest.raises(IngestionError) as exc:
        load_dataset(p, n_classes=2)
    assert exc.value.row == 4
    assert "4" in str(exc.value)


@pytest.mark.parametrize(
    "body, row",
    [("0,1.0\n1,2.0,3.0\n", 3), ("0,1.0\nx,2.0\n", 3), ("0,abc\n", 2), ("-1,1.0\n", 2)],
)
def test_csv_malformed_rows(tmp_path, body, row):
    p = tmp_path / "bad.csv"
    p.write_text("label,f0\n" + body)
    with pytest.raises(IngestionError) as exc:
        load_dataset(p)
    assert exc.value.row == row


def test_csv_round_trip(tmp_path):
    train, _ = generate_synthetic("rotated_blobs", 40, 0, seed=9)
    p = tmp_path / "rt.csv"
    write_dataset(train, p)
    back = load_dataset(p, n_classes=train.n_classes)
    assert back == train
    assert back.inputs.tobytes() == train.inputs.tobytes()


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(7, 3, 4), dtype=np.uint8)
    labels = rng.integers(0, 5, size=7).astype(np.uint8)
    write_idx(images, tmp_path / "toy-images-idx3-ubyte")
    write_idx(labels, tmp_path / "toy-labels-idx3-ubyte")
    ds = load_dataset(tmp_path / "toy-images-idx3-ubyte", format="idx", n_classes=5)
    assert ds.inputs.shape == (7, 12)
    np.testing.assert_array_equal(ds.inputs, images.reshape(7, -1) / 255.0)
    np.testing.assert_array_equal(ds.labels, labels)
    assert ds.inputs.min() >= 0.0 and ds.inputs.max() <= 1.0


def test_idx_bad_label_names_example(tmp_path):
    images = np.zeros((3, 2), dtype=np.uint8)
    write_idx(images, tmp_path / "t-images")
    write_idx(np.array([0, 1, 9], dtype=np.uint8), tmp_path / "t-labels")
    with pytest.raises(IngestionError) as exc:
        load_dataset(tmp_path / "t-images", format="idx", n_classes=2)
    assert exc.value.row == 3


def test_idx_truncated(tmp_path):
    p = tmp_path / "t-images"
    p.write_bytes(bytes([0, 0, 8, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3]))
    write_idx(np.zeros(2, dtype=np.uint8), tmp_path / "t-labels")
    with pytest.raises(IngestionError):
        load_dataset(p, format="idx")
