"""
Netpbm codec: round trips, conventions and malformed inputs
"""
import numpy as np
import pytest

from core.exceptions import InputFormatError
from core.image_io import decode_netpbm, encode_netpbm, load_gray, load_image, quantize, save_image
from core.tensor_core import Tensor


class TestRoundTrip:
    """save -> load stays within half a quantization step"""

    @pytest.mark.parametrize("channels", [1, 3])
    def test_quantization_bound(self, tmp_path, rng, channels):
        t = Tensor(rng.random((channels, 7, 5)))
        path = tmp_path / "img.pnm"
        save_image(t, path)
        back = load_image(path)
        assert back.shape == (3, 7, 5)
        expected = np.repeat(t.data, 3, axis=0) if channels == 1 else t.data
        assert np.abs(back.data - expected).max() <= 1.0 / 510.0 + 1e-7

    def test_quantize_rounds_half_up(self):
        np.testing.assert_array_equal(quantize(np.array([0.5, 0.25, 1.0, -0.2, 1.3])), [128, 64, 255, 0, 255])


class TestConventions:
    """Header parsing and channel promotion"""

    def test_white_pixel(self, tmp_path):
        path = tmp_path / "white.ppm"
        path.write_bytes(b"P6\n1 1\n255\n" + bytes([255, 255, 255]))
        np.testing.assert_array_equal(load_image(path).data.ravel(), [1.0, 1.0, 1.0])

    def test_gray_promoted_to_rgb(self, tmp_path):
        path = tmp_path / "gray.pgm"
        path.write_bytes(b"P5 2 1 255\n" + bytes([0, 51]))
        t = load_image(path)
        assert t.shape == (3, 1, 2)
        np.testing.assert_allclose(t.data[:, 0, 1], [0.2, 0.2, 0.2])

    def test_header_comments(self):
        raster = decode_netpbm(b"P5\n# made by hand\n2 # width\n1\n255\n" + bytes([7, 9]))
        np.testing.assert_array_equal(raster[0, 0], [7, 9])

    def test_encode_layout(self):
        raster = np.arange(12, dtype=np.uint8).reshape(3, 2, 2)
        data = encode_netpbm(raster)
        assert data.startswith(b"P6\n2 2\n255\n")
        assert data[len(b"P6\n2 2\n255\n"):][:3] == bytes([0, 4, 8])

    def test_load_gray_plane(self, tmp_path):
        path = tmp_path / "gray.pgm"
        path.write_bytes(b"P5\n2 1\n255\n" + bytes([255, 0]))
        np.testing.assert_array_equal(load_gray(path), [[1.0, 0.0]])


class TestMalformed:
    """Every malformed input raises an input-format error"""

    @pytest.mark.parametrize("data", [
        b"P3\n1 1\n255\n0 0 0",
        b"P6\n1 1\n65535\n" + bytes(6),
        b"P6\n2 2\n255\n" + bytes(5),
        b"P6\n1",
        b"P6\nx 1\n255\n" + bytes(3),
        b"P6\n0 1\n255\n",
        b"",
    ])
    def test_rejected(self, data):
        with pytest.raises(InputFormatError):
            decode_netpbm(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFormatError):
            load_image(tmp_path / "absent.ppm")
