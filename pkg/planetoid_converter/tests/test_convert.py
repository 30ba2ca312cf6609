"""End-to-end converter tests; the consumer is only ever touched via its CLI."""

import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fixture_sources import ALLX_N, TRAIN_N, write_fixture

CONVERT = Path(__file__).resolve().parents[1] / "convert.py"


def run_convert(dataset, src, out):
    return subprocess.run([sys.executable, str(CONVERT), "--dataset", dataset,
                           "--src", str(src), "--out", str(out)],
                          capture_output=True, text=True)


def read_features(out):
    rows = []
    for line in (out / "features.tsv").read_text().splitlines():
        rows.append([float(v) for v in line.split("\t")])
    return rows


@pytest.fixture
def src(tmp_path):
    return write_fixture(tmp_path / "src")


@pytest.fixture
def converted(src, tmp_path):
    out = tmp_path / "bundle"
    proc = run_convert("cora", src, out)
    assert proc.returncode == 0, proc.stderr
    return out, proc


class TestConversion:
    def test_smoke_counts_and_stat_lines(self, converted):
        out, proc = converted
        for name in ("meta.json", "edges.tsv", "features.tsv", "labels.tsv",
                     "masks.json"):
            assert (out / name).is_file()
        meta = json.loads((out / "meta.json").read_text())
        assert meta == {"name": "cora", "num_nodes": 10, "num_features": 3,
                        "num_classes": 2, "version": 1}
        lines = [l for l in proc.stdout.splitlines() if l.strip()]
        assert all(l.startswith("STAT ") for l in lines)
        stats = dict(kv.split("=") for l in lines for kv in l.split()[1:])
        assert stats["nodes"] == "10"
        assert stats["train"] == str(TRAIN_N)
        assert stats["test"] == "3"
        assert stats["padded"] == "0"

    def test_scrambled_index_rows_land_on_their_nodes(self, converted):
        """tx rows arrive in test.index file order (8, 7, 9); each must end
        up at its node id, not at its file position."""
        out, _ = converted
        rows = read_features(out)
        for node in (7, 8, 9):
            assert rows[node] == [10.0 + node] * 3
        assert rows[3] == [3.0, 1.5, -3.0]  # allx block untouched

    def test_masks_follow_the_split_convention(self, converted):
        out, _ = converted
        masks = json.loads((out / "masks.json").read_text())
        assert masks["train"] == list(range(TRAIN_N))
        assert masks["val"] == list(range(TRAIN_N, ALLX_N))  # clamped to source
        assert masks["test"] == [7, 8, 9]  # sorted, not file order

    def test_double_conversion_is_byte_identical(self, src, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_convert("cora", src, a).returncode == 0
        assert run_convert("cora", src, b).returncode == 0
        for name in ("meta.json", "edges.tsv", "features.tsv", "labels.tsv",
                     "masks.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_output_passes_consumer_validation(self, converted):
        out, _ = converted
        exe = shutil.which("meixnernet")
        if exe is None:
            pytest.skip("consumer CLI not installed")
        proc = subprocess.run([exe, "inspect", "--dataset", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert "STAT nodes=10" in proc.stdout


class TestGapPadding:
    def test_missing_test_ids_become_padded_rows(self, tmp_path):
        """An id hole in test.index (here node 9) yields a zero-feature,
        class-0 node that belongs to no mask."""
        src = write_fixture(tmp_path / "src", name="citeseer",
                            test_ids=(8, 10, 7), num_nodes=11)
        out = tmp_path / "bundle"
        proc = run_convert("citeseer", src, out)
        assert proc.returncode == 0, proc.stderr
        assert "padded=1" in proc.stdout

        rows = read_features(out)
        assert rows[9] == [0.0, 0.0, 0.0]
        assert rows[10] == [20.0, 20.0, 20.0]
        labels = [int(l) for l in (out / "labels.tsv").read_text().split()]
        assert labels[9] == 0
        masks = json.loads((out / "masks.json").read_text())
        assert masks["test"] == [7, 8, 10]
        assert 9 not in masks["train"] + masks["val"] + masks["test"]

    def test_padded_bundle_passes_consumer_validation(self, tmp_path):
        src = write_fixture(tmp_path / "src", name="citeseer",
                            test_ids=(8, 10, 7), num_nodes=11)
        out = tmp_path / "bundle"
        assert run_convert("citeseer", src, out).returncode == 0
        exe = shutil.which("meixnernet")
        if exe is None:
            pytest.skip("consumer CLI not installed")
        proc = subprocess.run([exe, "inspect", "--dataset", str(out)],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr


class TestFailureModes:
    def test_missing_source_file_is_named(self, src, tmp_path):
        (src / "ind.cora.allx").unlink()
        proc = run_convert("cora", src, tmp_path / "bundle")
        assert proc.returncode == 1
        assert "missing source file: ind.cora.allx" in proc.stderr

    def test_corrupt_pickle_is_named(self, src, tmp_path):
        (src / "ind.cora.graph").write_bytes(b"\x80garbage")
        proc = run_convert("cora", src, tmp_path / "bundle")
        assert proc.returncode == 1
        assert "corrupt source file ind.cora.graph" in proc.stderr

    def test_non_integer_test_index(self, src, tmp_path):
        (src / "ind.cora.test.index").write_text("7\neight\n9\n")
        proc = run_convert("cora", src, tmp_path / "bundle")
        assert proc.returncode == 1
        assert "ind.cora.test.index" in proc.stderr

    def test_duplicate_test_ids(self, src, tmp_path):
        (src / "ind.cora.test.index").write_text("7\n7\n9\n")
        proc = run_convert("cora", src, tmp_path / "bundle")
        assert proc.returncode == 1
        assert "duplicate" in proc.stderr

    def test_test_id_outside_range(self, src, tmp_path):
        (src / "ind.cora.test.index").write_text("7\n8\n99\n")
        proc = run_convert("cora", src, tmp_path / "bundle")
        assert proc.returncode == 1
        assert "test id 99" in proc.stderr

    def test_unknown_dataset_is_usage_error(self, src, tmp_path):
        proc = run_convert("wikipedia", src, tmp_path / "bundle")
        assert proc.returncode == 2

    def test_missing_source_directory(self, tmp_path):
        proc = run_convert("cora", tmp_path / "nowhere", tmp_path / "bundle")
        assert proc.returncode == 1
        assert "source directory not found" in proc.stderr


class TestRealData:
    def test_cora_statistics(self, tmp_path):
        """Runs only when the original distribution files are available."""
        root = os.environ.get("PLANETOID_SRC")
        if not root or not (Path(root) / "ind.cora.allx").is_file():
            pytest.skip("original Planetoid files not present")
        out = tmp_path / "cora"
        proc = run_convert("cora", root, out)
        assert proc.returncode == 0, proc.stderr
        meta = json.loads((out / "meta.json").read_text())
        assert (meta["num_nodes"], meta["num_features"], meta["num_classes"]) == (2708, 1433, 7)
        masks = json.loads((out / "masks.json").read_text())
        assert len(masks["train"]) == 140
        assert len(masks["val"]) == 500
        assert len(masks["test"]) == 1000
