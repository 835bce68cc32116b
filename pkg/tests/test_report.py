import pytest

from prefetchsim.cli import main
from prefetchsim.report import render_report


@pytest.fixture(scope="module")
def stats_and_snapshot(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("reportdata")
    trace = tmp / "t.csv"
    assert main(["gen", "--pattern", "stride", "--stride", "3", "--pages", "40",
                 "--length", "800", "--out", str(trace)]) == 0
    stats = tmp / "stats.csv"
    snap = tmp / "q.csv"
    assert main(["run", "--trace", str(trace), "--output", str(stats),
                 "--q-snapshot", str(snap), "--set", "cache.fill_latency_ticks=1"]) == 0
    stats2 = tmp / "stats2.csv"
    assert main(["run", "--trace", str(trace), "--prefetcher", "stride",
                 "--output", str(stats2)]) == 0
    return stats, stats2, snap


def test_report_renders_figures_and_summary(tmp_path, stats_and_snapshot):
    stats, stats2, _ = stats_and_snapshot
    out = tmp_path / "report"
    written = render_report([stats, stats2], out)
    names = {p.name for p in written}
    assert {"summary.csv", "metrics.png", "rewards.png", "bandwidth.png"} <= names
    for p in written:
        assert p.stat().st_size > 0
    summary = (out / "summary.csv").read_text().splitlines()
    assert len(summary) == 3  # header + two experiment rows


def test_report_with_q_snapshot_renders_vault_heatmaps(tmp_path, stats_and_snapshot):
    stats, _, snap = stats_and_snapshot
    out = tmp_path / "report"
    written = render_report([stats], out, q_snapshot=snap)
    names = {p.name for p in written}
    assert "qvalues_vault0.png" in names
    assert "qvalues_vault1.png" in names


def test_report_cli_command(tmp_path, stats_and_snapshot):
    stats, stats2, snap = stats_and_snapshot
    out = tmp_path / "cli-report"
    rc = main(["report", "--stats", str(stats), str(stats2),
               "--q-snapshot", str(snap), "--out-dir", str(out)])
    assert rc == 0
    assert (out / "summary.csv").exists()
    assert (out / "metrics.png").exists()


def test_report_rejects_non_stats_csv(tmp_path):
    bogus = tmp_path / "bogus.csv"
    bogus.write_text("a,b\n1,2\n")
    rc = main(["report", "--stats", str(bogus), "--out-dir", str(tmp_path / "out")])
    assert rc == 1
