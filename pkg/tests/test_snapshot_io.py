import json
import os

import numpy as np
import pytest

from podkit.errors import (
    DimensionMismatch,
    MalformedManifest,
    MissingDataFile,
    NonMonotoneGrid,
    WeightNonPositive,
)
from podkit.fem import assemble_fem_1d
from podkit.gram_space import identity_space, make_space
from podkit.snapshot_io import (
    from_trajectory,
    load,
    make_snapshot_set,
    read_matrix_csv,
    resolve_gram_spec,
    save,
    write_matrix_csv,
)


def test_matrix_csv_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    M = rng.standard_normal((7, 5)) * np.exp(rng.standard_normal((7, 5)) * 10)
    path = str(tmp_path / "m.csv")
    write_matrix_csv(path, M)
    back = read_matrix_csv(path)
    # 17 significant digits round-trip float64 exactly
    assert np.array_equal(back, M)


def test_read_matrix_csv_shape_check(tmp_path):
    path = str(tmp_path / "m.csv")
    write_matrix_csv(path, np.eye(3))
    with pytest.raises(MalformedManifest):
        read_matrix_csv(path, rows=2, cols=3)


def test_make_snapshot_set_validation():
    data = np.ones((3, 4))
    with pytest.raises(WeightNonPositive):
        make_snapshot_set(data, [1.0, 1.0, 0.0, 1.0])
    with pytest.raises(DimensionMismatch):
        make_snapshot_set(data, [1.0, 1.0])
    with pytest.raises(MalformedManifest):
        make_snapshot_set(data, np.ones(4), kind="weird")
    with pytest.raises(MalformedManifest):
        make_snapshot_set(data, np.ones(4), kind="continuous")
    with pytest.raises(NonMonotoneGrid):
        make_snapshot_set(
            data, np.ones(4), kind="continuous", grid=[0.0, 1.0, 0.5, 2.0, 3.0]
        )


def test_from_trajectory_midpoint_averages():
    grid = np.array([0.0, 0.5, 1.5])
    states = np.array([[0.0, 2.0, 4.0], [1.0, 1.0, 5.0]])
    sset = from_trajectory(grid, states)
    assert np.allclose(sset.data, [[1.0, 3.0], [1.0, 3.0]])
    assert np.allclose(sset.weights, [0.5, 1.0])
    assert sset.kind == "continuous"


def test_from_trajectory_quadrature_refinement():
    # the weighted energy of the reduced set is a midpoint rule for
    # int ||w(t)||^2 dt; halving the step must converge at second order
    def trajectory(ts):
        return np.vstack([np.sin(2.0 * np.pi * ts), np.cos(np.pi * ts)])

    exact = 1.0  # int_0^1 sin^2(2 pi t) + cos^2(pi t) dt
    errs = []
    for m in (64, 128, 256):
        ts = np.linspace(0.0, 1.0, m + 1)
        sset = from_trajectory(ts, trajectory(ts))
        energy = float(np.sum(sset.weights * np.sum(sset.data**2, axis=0)))
        errs.append(abs(energy - exact))
    assert errs[0] / errs[1] > 3.5
    assert errs[1] / errs[2] > 3.5


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    space = make_space((lambda A: (A.T @ A + 5 * np.eye(5)) / 5)(rng.standard_normal((5, 5))))
    sset = make_snapshot_set(rng.standard_normal((5, 9)), rng.uniform(0.5, 2.0, 9), space=space)
    path = str(tmp_path / "set.json")
    save(sset, path)
    back = load(path)
    assert np.array_equal(back.data, sset.data)
    assert np.array_equal(back.weights, sset.weights)
    assert np.array_equal(back.space.gram, sset.space.gram)
    assert back.kind == "discrete"


def test_save_load_continuous(tmp_path):
    grid = np.linspace(0.0, 2.0, 7)
    states = np.random.default_rng(2).standard_normal((3, 7))
    sset = from_trajectory(grid, states, space=identity_space(3))
    path = str(tmp_path / "traj.json")
    save(sset, path, gram_spec="identity")
    back = load(path)
    assert back.kind == "continuous"
    assert np.array_equal(back.grid, grid)
    assert np.array_equal(back.data, sset.data)


def test_load_missing_and_malformed(tmp_path):
    with pytest.raises(MissingDataFile):
        load(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(MalformedManifest):
        load(str(bad))
    # well-formed JSON, missing keys
    (tmp_path / "short.json").write_text(json.dumps({"dim": 2}))
    with pytest.raises(MalformedManifest):
        load(str(tmp_path / "short.json"))


def test_load_missing_data_file(tmp_path):
    manifest = {
        "dim": 2,
        "count": 2,
        "kind": "discrete",
        "gram": "identity",
        "data": "nowhere.csv",
        "weights": [1.0, 1.0],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    with pytest.raises(MissingDataFile):
        load(str(path))


def test_load_weight_count_mismatch(tmp_path):
    write_matrix_csv(str(tmp_path / "d.csv"), np.ones((2, 3)))
    manifest = {
        "dim": 2,
        "count": 3,
        "kind": "discrete",
        "gram": "identity",
        "data": "d.csv",
        "weights": [1.0, 1.0],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(manifest))
    with pytest.raises(MalformedManifest):
        load(str(path))


def test_resolve_gram_generators():
    mesh = assemble_fem_1d(6)
    sp = resolve_gram_spec({"fem_mass": 6}, 6)
    assert np.allclose(sp.gram, mesh.mass)
    sp = resolve_gram_spec({"fem_stiffness": 6}, 6)
    assert np.allclose(sp.gram, mesh.stiffness + mesh.mass)
    with pytest.raises(MalformedManifest):
        resolve_gram_spec({"fem_mass": 6}, 7)
    with pytest.raises(MalformedManifest):
        resolve_gram_spec({"mystery": 6}, 6)


def test_atomic_write_leaves_no_temp(tmp_path):
    path = str(tmp_path / "out.csv")
    write_matrix_csv(path, np.eye(2))
    write_matrix_csv(path, np.eye(2) * 2)  # overwrite through the same path
    leftovers = [f for f in os.listdir(tmp_path) if f.startswith(".tmp_")]
    assert leftovers == []
    assert read_matrix_csv(path)[0, 0] == 2.0
