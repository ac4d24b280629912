from mgw.experiments import nij_moments, types_convergence
from mgw.figures import render_report_figures


def test_rows_and_curve_written(tmp_path, alt):
    rep = types_convergence(alt, n=300, replicas=5, seed=1, p90_tolerance=1.0)
    paths = render_report_figures(rep, tmp_path / "types")
    names = sorted(p.name for p in paths)
    assert names == ["types_curve.png", "types_rows.png"]
    for p in paths:
        assert p.stat().st_size > 2000


def test_rows_only_when_no_curve_data(tmp_path, mono):
    rep = nij_moments(mono, sample_size=200, seed=1)
    paths = render_report_figures(rep, tmp_path / "sub" / "nij")
    assert [p.name for p in paths] == ["nij_rows.png"]
    assert paths[0].exists()
