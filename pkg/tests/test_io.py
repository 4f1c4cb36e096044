import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from modesort.io import (HologramFormatError, crosstalk_report, dequantize_phase, export_intensity,
                         intensity_levels, load_hologram, quantize_phase, raw_csv, read_pgm16,
                         read_report_body, save_hologram, write_pgm16)
from modesort.modes import LGSpec, sample_lg
from modesort.optics import TWO_PI, ComplexField, Grid
from modesort.sorter import PhaseElement, SortMetrics


def test_quantize_levels():
    assert quantize_phase(np.zeros((2, 2))).max() == 0
    assert quantize_phase(np.array([TWO_PI - 1e-9]))[0] == 65535
    assert quantize_phase(np.array([np.pi]))[0] == 32768


@settings(max_examples=30)
@given(arrays(np.float64, (17, 17), elements=st.floats(0, TWO_PI, exclude_max=True)))
def test_hologram_round_trip(tmp_path_factory, phases):
    path = tmp_path_factory.mktemp("h") / "e.pgm"
    e = PhaseElement(phases)
    save_hologram(e, path, 780e-9, seed=3)
    back, meta = load_hologram(path)
    err = np.angle(np.exp(1j * (back.phases - e.phases)))
    assert np.max(np.abs(err)) <= TWO_PI / 65536
    assert meta == {"m": 17, "macro_pitch": 20e-6, "wavelength": 780e-9, "seed": 3}


def test_zero_element_file(tmp_path):
    save_hologram(PhaseElement.zeros(16), tmp_path / "z.pgm", 780e-9)
    raw = (tmp_path / "z.pgm").read_bytes()
    assert raw.startswith(b"P5\n16 16\n65535\n")
    assert len(raw) == len(b"P5\n16 16\n65535\n") + 2 * 256
    assert not read_pgm16(tmp_path / "z.pgm").any()


def test_pgm_header_comments(tmp_path):
    body = np.arange(6, dtype=">u2").tobytes()
    (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n3 2\n65535\n" + body)
    np.testing.assert_array_equal(read_pgm16(tmp_path / "c.pgm"), np.arange(6).reshape(2, 3))


@pytest.mark.parametrize("content, match", [
    (b"P5\n2 2\n255\n" + bytes(4), "maxval"),
    (b"P5\n2 2\n65535\n" + bytes(6), "raster bytes"),
    (b"P2\n2 2\n65535\n0 0 0 0", "magic"),
])
def test_pgm_errors(tmp_path, content, match):
    (tmp_path / "bad.pgm").write_bytes(content)
    with pytest.raises(HologramFormatError, match=match):
        read_pgm16(tmp_path / "bad.pgm")


def test_sidecar_mismatch(tmp_path):
    save_hologram(PhaseElement.zeros(16), tmp_path / "e.pgm", 780e-9)
    (tmp_path / "e.txt").write_text("m = 20\nmacro_pitch = 2e-05\nwavelength = 7.8e-07\nseed = none\n")
    with pytest.raises(HologramFormatError, match="sidecar"):
        load_hologram(tmp_path / "e.pgm")
    (tmp_path / "e.txt").write_text("m = 16\n")
    with pytest.raises(HologramFormatError):
        load_hologram(tmp_path / "e.pgm")


def test_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        load_hologram(tmp_path / "nope.pgm")


def test_intensity_export(tmp_path):
    g = Grid(128, pitch=10e-6)
    export_intensity(ComplexField.zeros(g), tmp_path / "zero.pgm")
    assert not read_pgm16(tmp_path / "zero.pgm").any()

    ring = sample_lg(g, LGSpec(0, 1, 100e-6))
    export_intensity(ring, tmp_path / "ring.pgm")
    img = read_pgm16(tmp_path / "ring.pgm")
    assert img.max() == 65535
    # the p=1 node sits at r = w / sqrt(2)
    profile = img[64, 64:].astype(float)
    r_node = np.argmin(profile[1:15]) + 1
    assert abs(r_node * g.pitch - 100e-6 / np.sqrt(2)) <= g.pitch
    assert profile[r_node] < 0.01 * 65535


def test_intensity_power_normalization():
    inten = np.zeros((4, 4))
    inten[0, 0] = inten[1, 1] = 1.0
    np.testing.assert_array_equal(intensity_levels(inten, "power")[:2, :2], [[32768, 0], [0, 32768]])
    assert intensity_levels(inten, "power", gain=4)[0, 0] == 65535
    with pytest.raises(ValueError):
        intensity_levels(inten, "log")


@settings(max_examples=50)
@given(arrays(np.float64, (4, 4), elements=st.floats(1e-6, 1.0)))
def test_report_rows_sum(raw):
    m = SortMetrics(raw, np.full(4, 5.0))
    text = crosstalk_report(m, [f"in{i}" for i in range(4)])
    _, _, body = read_report_body(text)
    np.testing.assert_allclose(body.sum(axis=1), 1.0, atol=2e-6)
    np.testing.assert_allclose(body, raw / raw.sum(axis=1, keepdims=True), atol=1.01e-6)


def test_report_layout():
    m = SortMetrics(np.array([[0.9, 0.1], [0.2, 0.8]]), np.ones(2))
    rows = crosstalk_report(m, ["l-1p0", "l+1p0"], ["a", "b"]).splitlines()
    assert rows[0] == "input,a,b"
    assert rows[1] == "l-1p0,0.900000,0.100000"
    assert [r.split(",")[0] for r in rows[3:8]] == ["ability", "efficiency", "e_b", "R", "B"]
    assert rows[3] == "ability,0.850000"
    assert rows[-1].startswith("raw:l+1p0,")
    assert raw_csv(m, ["x", "y"]).splitlines()[0] == "input,ch0,ch1,input_power"
