import io

import numpy as np
import pytest
from PIL import Image

from mirrord import imaging
from mirrord.imaging import GrayImage, Rect


def make_image(rng, w, h):
    return GrayImage.from_array(rng.integers(0, 256, (h, w), dtype=np.uint8))


class TestGrayImage:
    def test_rejects_wrong_sample_count(self):
        with pytest.raises(imaging.MalformedInput):
            GrayImage(2, 2, [0, 1, 2])

    def test_rejects_zero_dims(self):
        with pytest.raises(imaging.ZeroDimension):
            GrayImage(0, 4, [])

    def test_data_is_readonly(self):
        img = GrayImage(2, 2, [0, 64, 128, 255])
        with pytest.raises(ValueError):
            img.data[0, 0] = 9


class TestPgm:
    def test_decode_2x2(self):
        data = b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255])
        img = imaging.decode_pgm(data)
        assert img == GrayImage(2, 2, [0, 64, 128, 255])

    def test_maxval_rescale(self):
        # round(v * 255 / maxval) for maxval 100
        data = b"P5\n2 1\n100\n" + bytes([0, 100])
        img = imaging.decode_pgm(data)
        assert img.data.tolist() == [[0, 255]]
        data = b"P5\n2 1\n100\n" + bytes([50, 20])
        img = imaging.decode_pgm(data)
        assert img.data.tolist() == [[128, 51]]  # round(127.5)=128 half-up

    def test_sixteen_bit_rescale(self):
        data = b"P5\n1 1\n65535\n" + bytes([0xFF, 0xFF])
        assert imaging.decode_pgm(data).data.tolist() == [[255]]

    def test_comments_and_whitespace(self):
        data = b"P5 # magic\n# a comment\n 2\t1 # dims\n255\n" + bytes([7, 9])
        assert imaging.decode_pgm(data).data.tolist() == [[7, 9]]

    def test_truncated_raster(self):
        with pytest.raises(imaging.MalformedInput):
            imaging.decode_pgm(b"P5\n4 4\n255\n" + bytes([1, 2]))

    def test_bad_magic(self):
        with pytest.raises(imaging.MalformedInput):
            imaging.decode_pgm(b"P2\n1 1\n255\n0")

    def test_roundtrip_bit_exact(self):
        rng = np.random.default_rng(1)
        for w, h in [(1, 1), (3, 5), (64, 64), (480, 360)]:
            img = make_image(rng, w, h)
            assert imaging.decode_pgm(imaging.encode_pgm(img)) == img


class TestPng:
    def test_gray_png(self):
        arr = np.arange(16, dtype=np.uint8).reshape(4, 4) * 16
        buf = io.BytesIO()
        Image.fromarray(arr, mode="L").save(buf, format="PNG")
        assert imaging.decode_png(buf.getvalue()) == GrayImage.from_array(arr)

    def test_rgb_luma_weights(self):
        # pure red must land on round(0.299 * 255) = 76
        arr = np.zeros((2, 2, 3), dtype=np.uint8)
        arr[..., 0] = 255
        buf = io.BytesIO()
        Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
        img = imaging.decode_png(buf.getvalue())
        assert img.data.tolist() == [[76, 76], [76, 76]]

    def test_luma_green_blue(self):
        assert imaging.rgb_to_luma(np.array([[[0, 255, 0]]], dtype=np.uint8))[0, 0] == 150
        assert imaging.rgb_to_luma(np.array([[[0, 0, 255]]], dtype=np.uint8))[0, 0] == 29

    def test_garbage_png(self):
        with pytest.raises(imaging.MalformedInput):
            imaging.decode_image(b"\x89PNG\r\n\x1a\nnot really", format="png")


class TestDecodeImage:
    def test_sniffing(self):
        data = b"P5\n1 1\n255\n\x42"
        assert imaging.decode_image(data).data.tolist() == [[0x42]]

    def test_unknown_payload(self):
        with pytest.raises(imaging.UnsupportedFormat):
            imaging.decode_image(b"GIF89a...")

    def test_unknown_format_name(self):
        with pytest.raises(imaging.UnsupportedFormat):
            imaging.decode_image(b"P5\n1 1\n255\n\x00", format="bmp")


class TestResize:
    def test_identity(self):
        rng = np.random.default_rng(2)
        img = make_image(rng, 4, 4)
        assert imaging.resize_nearest(img, 4, 4) == img

    def test_constant_stays_constant(self):
        img = GrayImage.from_array(np.full((17, 31), 99, dtype=np.uint8))
        out = imaging.resize_nearest(img, 480, 360)
        assert np.all(out.data == 99)

    def test_640x480_to_480x360(self):
        rng = np.random.default_rng(3)
        img = make_image(rng, 640, 480)
        out = imaging.resize_nearest(img, 480, 360)
        assert (out.width, out.height) == (480, 360)
        # spot-check the floor((i + 0.5) * src / dst) rule
        xs = np.floor((np.arange(480) + 0.5) * (640 / 480)).astype(int)
        ys = np.floor((np.arange(360) + 0.5) * (480 / 360)).astype(int)
        assert out.data[0, 0] == img.data[ys[0], xs[0]]
        assert out.data[359, 479] == img.data[ys[359], xs[479]]

    def test_zero_target(self):
        img = GrayImage(1, 1, [0])
        with pytest.raises(imaging.ZeroDimension):
            imaging.resize_nearest(img, 0, 4)


class TestCrop:
    def test_full_extent(self):
        rng = np.random.default_rng(4)
        img = make_image(rng, 6, 5)
        assert imaging.crop(img, Rect(0, 0, 6, 5)) == img

    def test_single_pixel(self):
        img = GrayImage(2, 2, [10, 20, 30, 40])
        assert imaging.crop(img, Rect(0, 0, 1, 1)).data.tolist() == [[10]]

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        img = make_image(rng, 8, 8)
        sub = imaging.crop(img, Rect(2, 3, 4, 4))
        assert imaging.crop(sub, Rect(0, 0, 4, 4)) == sub

    def test_out_of_bounds(self):
        img = GrayImage(4, 4, np.zeros(16))
        with pytest.raises(imaging.OutOfBounds):
            imaging.crop(img, Rect(2, 2, 3, 3))

    def test_composition(self):
        # crop(crop(img, a), b) == crop(img, translate(b, a))
        rng = np.random.default_rng(6)
        for _ in range(25):
            img = make_image(rng, 32, 24)
            ax, ay = rng.integers(0, 10, 2)
            aw, ah = rng.integers(8, 16, 2)
            a = Rect(int(ax), int(ay), int(aw), int(ah))
            bx = int(rng.integers(0, aw - 3))
            by = int(rng.integers(0, ah - 3))
            b = Rect(bx, by, int(rng.integers(1, aw - bx + 1)), int(rng.integers(1, ah - by + 1)))
            lhs = imaging.crop(imaging.crop(img, a), b)
            rhs = imaging.crop(img, b.translate(a.x, a.y))
            assert lhs == rhs
