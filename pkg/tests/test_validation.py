import numpy as np
import pytest

from affectlab.validation import (SpecError, as_matrix, as_signal, check_fs,
                                  check_rgb_image, check_constant)


def test_as_signal_rejects_non_finite():
    with pytest.raises(SpecError, match="finite"):
        as_signal([1.0, np.nan, 2.0])


def test_as_signal_rejects_empty():
    with pytest.raises(SpecError):
        as_signal([])


def test_as_signal_min_len():
    with pytest.raises(SpecError):
        as_signal([1.0, 2.0], min_len=3)


def test_as_matrix_shape_and_dtype():
    m = as_matrix([[1, 2], [3, 4]], "m")
    assert m.dtype == np.float64 and m.shape == (2, 2)
    with pytest.raises(SpecError):
        as_matrix([1.0, 2.0], "m")


def test_check_fs():
    assert check_fs(128.0) == 128.0
    for bad in (0.0, -1.0, np.inf):
        with pytest.raises(SpecError):
            check_fs(bad)


def test_check_rgb_image_size_gate():
    img = np.zeros((224, 224, 3), dtype=np.uint8)
    assert check_rgb_image(img, size=(224, 224)).shape == (224, 224, 3)
    with pytest.raises(SpecError):
        check_rgb_image(img[:100], size=(224, 224))
    with pytest.raises(SpecError):
        check_rgb_image(np.zeros((224, 224), dtype=np.uint8))


def test_check_constant():
    with pytest.raises(SpecError, match="constant"):
        check_constant(np.full(10, 3.0))
    check_constant(np.array([1.0, 2.0]))
