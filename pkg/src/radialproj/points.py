"""Finite planar point collections with provenance.

Three storage kinds:

* ``exact``   -- rows of four integers (x1_a, x1_b, x2_a, x2_b), the module
                 coordinates of a cyclotomic point set;
* ``lattice`` -- rows of two integers (a, b) in Z^2;
* ``float``   -- rows of two floats, e.g. Poisson samples or tiling vertices.

The reference point (the chosen observation point x0) is stored as a row
value in the same coordinate system.  Constructors sort rows canonically so
that identical generation parameters give identical files byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .cyclo import CYCLOTOMIC, CycloTag, direct_xy, module_point
from .errors import UsageError

__all__ = ["PointSet", "EXACT", "LATTICE", "FLOAT"]

EXACT = "exact"
LATTICE = "lattice"
FLOAT = "float"


def canonical_order(coords: np.ndarray) -> np.ndarray:
    """Indices that sort rows lexicographically (last key first for lexsort)."""
    keys = tuple(coords[:, j] for j in range(coords.shape[1] - 1, -1, -1))
    return np.lexsort(keys)


@dataclass(frozen=True)
class PointSet:
    kind: str
    coords: np.ndarray
    tag: CycloTag | None = None
    reference: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        coords = np.asarray(self.coords)
        if self.kind == EXACT:
            if self.tag is None:
                raise UsageError("exact point sets need a cyclotomic tag")
            coords = coords.astype(np.int64).reshape(-1, 4)
        elif self.kind == LATTICE:
            coords = coords.astype(np.int64).reshape(-1, 2)
        elif self.kind == FLOAT:
            coords = coords.astype(np.float64).reshape(-1, 2)
        else:
            raise UsageError(f"unknown point-set kind {self.kind!r}")
        object.__setattr__(self, "coords", coords)
        ref = self.reference
        if ref is None:
            ref = np.zeros(coords.shape[1], dtype=coords.dtype)
        ref = np.asarray(ref, dtype=coords.dtype).reshape(coords.shape[1])
        object.__setattr__(self, "reference", ref)

    def __len__(self) -> int:
        return len(self.coords)

    def sorted(self) -> "PointSet":
        return replace(self, coords=self.coords[canonical_order(self.coords)])

    def positions(self) -> np.ndarray:
        """Planar embedding of all rows as an (m, 2) float array."""
        if self.kind == EXACT:
            return direct_xy(self.tag, self.coords)
        return self.coords.astype(np.float64)

    def reference_position(self) -> np.ndarray:
        if self.kind == EXACT:
            return direct_xy(self.tag, self.reference[None, :])[0]
        return self.reference.astype(np.float64)

    def reference_index(self) -> int:
        """Row index of the reference point; UsageError when absent."""
        hits = np.nonzero((self.coords == self.reference).all(axis=1))[0]
        if len(hits) == 0:
            raise UsageError("reference point is not a member of the point set")
        return int(hits[0])

    def module_points(self):
        """Iterate rows of an exact set as ModulePoint objects."""
        if self.kind != EXACT:
            raise UsageError("module_points only applies to exact point sets")
        for row in self.coords:
            yield module_point(self.tag, *map(int, row))

    def with_provenance(self, **extra) -> "PointSet":
        prov = dict(self.provenance)
        prov.update(extra)
        return replace(self, provenance=prov)

    # -- CSV ----------------------------------------------------------------

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# kind = {self.kind}\n")
            if self.kind == EXACT:
                fh.write(f"# module = {self.tag.n}\n")
            ref = ",".join(_fmt(v) for v in self.reference)
            fh.write(f"# reference = {ref}\n")
            fh.write(
                "# provenance = "
                + json.dumps(self.provenance, sort_keys=True, default=_json_default)
                + "\n"
            )
            if self.kind == EXACT:
                fh.write("x1_a,x1_b,x2_a,x2_b,module\n")
                n = self.tag.n
                for row in self.coords:
                    fh.write(f"{row[0]},{row[1]},{row[2]},{row[3]},{n}\n")
            else:
                fh.write("x,y\n")
                for row in self.coords:
                    fh.write(f"{_fmt(row[0])},{_fmt(row[1])}\n")

    @classmethod
    def from_csv(cls, path) -> "PointSet":
        meta: dict[str, str] = {}
        rows: list[list[str]] = []
        header: list[str] | None = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, value = line[1:].partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                if header is None:
                    header = [c.strip() for c in line.split(",")]
                    continue
                rows.append(line.split(","))
        if header is None:
            raise UsageError(f"{path}: no header row")
        kind = meta.get("kind")
        provenance = json.loads(meta.get("provenance", "{}"))
        reference = None
        if "reference" in meta and meta["reference"]:
            reference = [float(v) for v in meta["reference"].split(",")]
        if kind == EXACT or header[:4] == ["x1_a", "x1_b", "x2_a", "x2_b"]:
            data = np.array([[int(v) for v in r[:4]] for r in rows], dtype=np.int64)
            data = data.reshape(-1, 4)
            n = int(meta.get("module", rows[0][4] if rows else 8))
            if n not in CYCLOTOMIC:
                raise UsageError(f"{path}: unknown cyclotomic module order {n}")
            ref = None if reference is None else np.array(reference, dtype=np.int64)
            return cls(EXACT, data, tag=CYCLOTOMIC[n], reference=ref, provenance=provenance)
        if kind == LATTICE:
            data = np.array([[int(v) for v in r[:2]] for r in rows], dtype=np.int64)
            ref = None if reference is None else np.array(reference, dtype=np.int64)
            return cls(LATTICE, data.reshape(-1, 2), reference=ref, provenance=provenance)
        data = np.array([[float(v) for v in r[:2]] for r in rows], dtype=np.float64)
        ref = None if reference is None else np.array(reference, dtype=np.float64)
        return cls(FLOAT, data.reshape(-1, 2), reference=ref, provenance=provenance)


def _fmt(v) -> str:
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return repr(float(v))


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj)}")
