import xml.dom.minidom

import numpy as np

from stbands.bands import BandStructure, SweepMethod
from stbands.svg import _split_wraps, band_plot


def test_plot_is_valid_svg(tmp_path):
    arc = np.linspace(0, 1, 20)
    om = np.column_stack([0.1 + 0.05 * arc, -0.1 - 0.05 * arc]).astype(complex)
    om[5] = np.nan
    om[8:10, 0] += 1e-3j
    bs = BandStructure(np.column_stack([arc, 0 * arc]), arc, om, 0.3, 0.1, SweepMethod.FLOQUET,
                       flags=[""] * 20, ticks=[("Γ", 0.0), ("X", 1.0)])
    band_plot(bs, tmp_path / "b.svg", "a & b")
    doc = xml.dom.minidom.parse(str(tmp_path / "b.svg"))
    lines = doc.getElementsByTagName("polyline")
    # two branches in each panel, the NaN row splits each into two pieces
    assert len(lines) == 8
    assert "Γ" in (tmp_path / "b.svg").read_text()


def test_split_at_zone_wrap():
    x, y = _split_wraps(np.arange(4.0), np.array([0.14, 0.149, -0.148, -0.14]), 0.3)
    assert np.isnan(y).sum() == 1 and np.isnan(y[2])
