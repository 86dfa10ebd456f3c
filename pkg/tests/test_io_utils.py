import json
import os

import numpy as np
import pandas as pd
import pytest

from fp_solver import steady_state_linear
from utils.io_utils import (
    RAW_HEADER_SIZE,
    config_hash,
    read_snapshot_raw,
    snapshot_name,
    write_failure,
    write_manifest,
    write_snapshot_csv,
    write_snapshot_raw,
    write_snapshots,
)


def test_raw_snapshot_preserves_bits(tmp_path, small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    path = write_snapshot_raw(m, 0.25, str(tmp_path / "m.raw"))
    assert os.path.getsize(path) == RAW_HEADER_SIZE + 8 * m.values.size
    restored, t = read_snapshot_raw(path)
    assert t == 0.25
    assert restored.grid == small_grid
    assert np.array_equal(restored.values, m.values)


def test_raw_snapshot_rejects_foreign_file(tmp_path):
    path = tmp_path / "bad.raw"
    path.write_bytes(b"x" * 80)
    with pytest.raises(ValueError):
        read_snapshot_raw(str(path))
    path.write_bytes(b"short")
    with pytest.raises(ValueError):
        read_snapshot_raw(str(path))


def test_csv_snapshot_layout(tmp_path, small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    frame = pd.read_csv(write_snapshot_csv(m, str(tmp_path / "m.csv")), float_precision="round_trip")
    assert list(frame.columns) == ["x", "p", "f"]
    assert len(frame) == small_grid.n_x * small_grid.n_p
    np.testing.assert_array_equal(frame["f"].to_numpy(), m.values.ravel())


def test_write_snapshots_with_index(tmp_path, small_grid, harmonic):
    m = steady_state_linear(1.0, harmonic, small_grid)
    artifacts = write_snapshots([(0.0, m), (0.5, m)], str(tmp_path), write_raw=False)
    assert snapshot_name(1) == "snapshot_t0001"
    assert os.path.join(str(tmp_path), "snapshot_t0001.csv") in artifacts
    index = pd.read_csv(tmp_path / "snapshots.csv")
    assert index["t"].tolist() == [0.0, 0.5]
    assert not (tmp_path / "snapshot_t0000.raw").exists()


def test_manifest_records_hash_and_versions(tmp_path):
    path = write_manifest(str(tmp_path), "check-oracles", "[checks]\n", {"tolerance": 1e-8})
    text = open(path, encoding="utf-8").read()
    assert "command = check-oracles" in text
    assert f"config_sha256 = {config_hash('[checks]' + chr(10))}" in text
    assert "tolerance = 1e-08" in text
    assert "version.numpy" in text


def test_failure_record(tmp_path):
    out_dir = tmp_path / "nested" / "out"
    path = write_failure(str(out_dir), "steady-vnfp", RuntimeError("нет сходимости"), {"iterations": 3})
    record = json.loads(open(path, encoding="utf-8").read())
    assert record["error_type"] == "RuntimeError"
    assert record["message"] == "нет сходимости"
    assert record["command"] == "steady-vnfp"
    assert record["details"] == {"iterations": 3}
