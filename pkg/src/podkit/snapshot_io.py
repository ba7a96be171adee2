"""Snapshot sets: weighted data columns plus disk round-tripping.

A snapshot set is a matrix of column vectors w_1 .. w_s together with strictly
positive weights gamma_1 .. gamma_s.  Discrete sets carry the weights
directly; sets reduced from a time trajectory carry the originating time grid
and use the interval lengths as weights, with each column the midpoint
average of the two bracketing states.

On disk a set is a small JSON manifest next to a headerless CSV of the data
columns (one row per coordinate, 17 significant digits, so float64 values
round-trip bit-exactly).  The manifest names the Gram matrix of the ambient
space either as the token "identity", a path to a CSV matrix, or a generator
spec such as {"fem_mass": n}.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .errors import (
    DimensionMismatch,
    MalformedManifest,
    MissingDataFile,
    NonMonotoneGrid,
    WeightNonPositive,
)
from .gram_space import GramSpace, identity_space, make_space

CSV_FMT = "%.16e"


@dataclass
class SnapshotSet:
    """Weighted snapshot data in a common ambient space.

    Attributes
    ----------
    data : ndarray, shape (dim, s)
        Snapshot columns.
    weights : ndarray, shape (s,)
        Strictly positive weights.
    kind : str
        "discrete" or "continuous".
    grid : ndarray or None
        For continuous sets, the s + 1 time points the set was reduced from.
    space : GramSpace or None
        Ambient inner-product space, when known.
    """

    data: np.ndarray
    weights: np.ndarray
    kind: str = "discrete"
    grid: np.ndarray | None = None
    space: GramSpace | None = field(default=None, repr=False)

    @property
    def space_dim(self):
        return self.data.shape[0]

    @property
    def count(self):
        return self.data.shape[1]


def make_snapshot_set(data, weights, kind="discrete", grid=None, space=None):
    """Validate shapes, weights and grid, then build the set."""
    data = np.asarray(data, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if data.ndim != 2:
        raise DimensionMismatch(f"data must be 2-D, got shape {data.shape}")
    if weights.ndim != 1 or weights.shape[0] != data.shape[1]:
        raise DimensionMismatch(
            f"weights shape {weights.shape} does not match {data.shape[1]} columns"
        )
    if data.shape[1] < 1:
        raise DimensionMismatch("need at least one snapshot column")
    if np.any(weights <= 0.0) or not np.all(np.isfinite(weights)):
        raise WeightNonPositive("all weights must be finite and > 0")
    if kind not in ("discrete", "continuous"):
        raise MalformedManifest(f"unknown snapshot kind {kind!r}")
    if kind == "continuous":
        if grid is None:
            raise MalformedManifest("continuous sets need their time grid")
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.shape[0] != data.shape[1] + 1:
            raise DimensionMismatch(
                f"grid of {grid.shape} does not bracket {data.shape[1]} snapshots"
            )
        if np.any(np.diff(grid) <= 0.0):
            raise NonMonotoneGrid("time grid must be strictly increasing")
    else:
        grid = None
    if space is not None and space.dim != data.shape[0]:
        raise DimensionMismatch(
            f"space of dim {space.dim} cannot hold columns of length {data.shape[0]}"
        )
    return SnapshotSet(data=data, weights=weights, kind=kind, grid=grid, space=space)


def from_trajectory(grid, states, space=None):
    """Reduce a sampled trajectory to a continuous-kind snapshot set.

    Column k of the result is the average of states at grid points k and
    k + 1; its weight is the interval length.  This realizes the elementwise
    midpoint quadrature of time integrals.

    Parameters
    ----------
    grid : array_like, shape (m,)
        Strictly increasing time points, m >= 2.
    states : array_like, shape (dim, m)
        Trajectory samples at the grid points.
    space : GramSpace, optional
        Ambient space to attach.
    """
    grid = np.asarray(grid, dtype=float)
    states = np.asarray(states, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 2:
        raise DimensionMismatch("grid must hold at least two time points")
    if states.ndim != 2 or states.shape[1] != grid.shape[0]:
        raise DimensionMismatch(
            f"states shape {states.shape} does not match grid of {grid.shape[0]}"
        )
    if np.any(np.diff(grid) <= 0.0):
        raise NonMonotoneGrid("time grid must be strictly increasing")
    data = 0.5 * (states[:, 1:] + states[:, :-1])
    return make_snapshot_set(
        data, np.diff(grid), kind="continuous", grid=grid, space=space
    )


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_csv(path, matrix):
    """Headerless CSV with 17 significant digits, written atomically."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    rows = [",".join(CSV_FMT % v for v in row) for row in M]
    _atomic_write(path, "\n".join(rows) + "\n")


def read_matrix_csv(path, rows=None, cols=None):
    if not os.path.exists(path):
        raise MissingDataFile(f"no such file: {path}")
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    if rows is not None and cols is not None and M.shape != (rows, cols):
        if M.size == rows * cols:
            M = M.reshape(rows, cols)
        else:
            raise MalformedManifest(
                f"{path}: expected {rows} x {cols} values, found shape {M.shape}"
            )
    return M


def resolve_gram_spec(spec, dim, base_dir="."):
    """Turn a manifest gram entry into a GramSpace.

    Accepted forms: the token "identity", a path to a CSV matrix (relative to
    the manifest), or a generator spec {"fem_mass": n} / {"fem_stiffness": n}.
    The stiffness generator returns the full H^1 Gram matrix (stiffness plus
    mass); the derivative Gram alone is singular and cannot define a space.
    """
    if spec == "identity":
        return identity_space(dim)
    if isinstance(spec, str):
        G = read_matrix_csv(os.path.join(base_dir, spec))
        if G.shape != (dim, dim):
            raise MalformedManifest(
                f"gram file {spec} has shape {G.shape}, expected ({dim}, {dim})"
            )
        return make_space(G, label=os.path.basename(spec))
    if isinstance(spec, dict) and len(spec) == 1:
        key, n = next(iter(spec.items()))
        if key in ("fem_mass", "fem_stiffness"):
            mesh = fem.assemble_fem_1d(n)
            if mesh.nodes != dim:
                raise MalformedManifest(
                    f"{key} generator for {n} nodes in a dim-{dim} manifest"
                )
            if key == "fem_mass":
                return make_space(mesh.mass, label="fem_mass")
            return make_space(mesh.stiffness + mesh.mass, label="fem_h1")
    raise MalformedManifest(f"unrecognized gram spec: {spec!r}")


def save(sset, manifest_path, gram_spec=None):
    """Write a snapshot set as manifest JSON plus data CSV.

    Parameters
    ----------
    sset : SnapshotSet
    manifest_path : str
        Where the JSON manifest goes; the data CSV lands next to it with the
        suffix "_data.csv".
    gram_spec : optional
        Manifest gram entry to record.  Defaults to "identity" when the set
        has no attached space; otherwise the attached space's Gram matrix is
        written to a CSV next to the manifest and referenced by name.
    """
    manifest_path = os.path.abspath(manifest_path)
    base = os.path.dirname(manifest_path)
    stem = os.path.splitext(os.path.basename(manifest_path))[0]
    data_name = stem + "_data.csv"
    write_matrix_csv(os.path.join(base, data_name), sset.data)

    if gram_spec is None:
        if sset.space is None:
            gram_spec = "identity"
        else:
            gram_name = stem + "_gram.csv"
            write_matrix_csv(os.path.join(base, gram_name), sset.space.gram)
            gram_spec = gram_name

    manifest = {
        "dim": int(sset.space_dim),
        "count": int(sset.count),
        "kind": sset.kind,
        "gram": gram_spec,
        "data": data_name,
    }
    if sset.kind == "continuous":
        manifest["grid"] = [float(t) for t in sset.grid]
    else:
        manifest["weights"] = [float(w) for w in sset.weights]
    _atomic_write(manifest_path, json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load(manifest_path):
    """Load a manifest written by save (or by hand) and attach its space.

    Raises MalformedManifest / MissingDataFile / WeightNonPositive /
    NonMonotoneGrid as appropriate.
    """
    if not os.path.exists(manifest_path):
        raise MissingDataFile(f"no such manifest: {manifest_path}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"{manifest_path}: {exc}") from None
    if not isinstance(manifest, dict):
        raise MalformedManifest(f"{manifest_path}: top level must be an object")

    for key in ("dim", "count", "kind", "gram", "data"):
        if key not in manifest:
            raise MalformedManifest(f"{manifest_path}: missing key {key!r}")
    dim = manifest["dim"]
    count = manifest["count"]
    kind = manifest["kind"]
    if not isinstance(dim, int) or dim < 1:
        raise MalformedManifest(f"dim must be a positive integer, got {dim!r}")
    if not isinstance(count, int) or count < 1:
        raise MalformedManifest(f"count must be a positive integer, got {count!r}")
    if kind not in ("discrete", "continuous"):
        raise MalformedManifest(f"unknown kind {kind!r}")

    data = read_matrix_csv(os.path.join(base, manifest["data"]), dim, count)

    grid = None
    if kind == "continuous":
        if "grid" not in manifest:
            raise MalformedManifest("continuous manifest without a grid")
        grid = np.asarray(manifest["grid"], dtype=float)
        if grid.shape != (count + 1,):
            raise MalformedManifest(
                f"grid of length {grid.shape[0]} cannot bracket {count} snapshots"
            )
        weights = np.diff(grid)
        if np.any(weights <= 0.0):
            raise NonMonotoneGrid("manifest grid is not strictly increasing")
    else:
        if "weights" not in manifest:
            raise MalformedManifest("discrete manifest without weights")
        weights = np.asarray(manifest["weights"], dtype=float)
        if weights.shape != (count,):
            raise MalformedManifest(
                f"{weights.shape[0]} weights for {count} snapshots"
            )

    space = resolve_gram_spec(manifest["gram"], dim, base)
    return make_snapshot_set(data, weights, kind=kind, grid=grid, space=space)
