"""Data-driven substitution (inflation) tiling engine.

A rule file declares prototile polygons, a multiplier, per-prototile
productions (child name + affine map) and a seed patch.  One substitution
step replaces every placed tile by its children; the affine maps are
written in the frame of the inflated parent, so child tiles keep unit size
while the patch grows by the multiplier per step.

Placed tiles are (linear 2x2, translation) pairs.  For a parent (M, t) and
a production child (B, b) the child placement is (M @ B, M @ b + lam * t).

Rule files are validated structurally: every production must satisfy the
area identity sum(|det B_i| * area(child_i)) = lam^2 * area(parent), and
the tile-count matrix must have dominant eigenvalue lam^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import UsageError
from .points import FLOAT, LATTICE, PointSet

__all__ = [
    "SubstitutionRule",
    "parse_rule_text",
    "load_rule",
    "builtin_rule_names",
    "gen_substitution",
]

# Vertices closer than this merge into one point (tile-edge units).
DEDUP_TOLERANCE = 1e-6
# Generated float vertices within this distance of integers snap to Z^2.
INTEGER_SNAP = 1e-9

AREA_RTOL = 1e-9


def _polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class Production:
    child: str
    linear: np.ndarray  # (2, 2)
    offset: np.ndarray  # (2,)


@dataclass(frozen=True)
class SubstitutionRule:
    name: str
    multiplier: float
    prototiles: dict  # name -> (k, 2) vertex array
    productions: dict  # name -> tuple[Production, ...]
    seed: tuple  # tuple[(name, linear, offset), ...]

    def tile_names(self) -> list[str]:
        return list(self.prototiles)

    def areas(self) -> dict:
        return {n: abs(_polygon_area(v)) for n, v in self.prototiles.items()}

    def count_matrix(self) -> np.ndarray:
        """M[i, j] = number of type-i children per type-j parent."""
        names = self.tile_names()
        m = np.zeros((len(names), len(names)), dtype=np.int64)
        for j, parent in enumerate(names):
            for prod in self.productions[parent]:
                m[names.index(prod.child), j] += 1
        return m

    def dominant_eigenvalue(self) -> float:
        return float(max(abs(np.linalg.eigvals(self.count_matrix().astype(float)))))

    def validate(self) -> None:
        """Raise UsageError with a per-production report on any violation."""
        problems = []
        if not self.prototiles:
            problems.append("no prototiles declared")
        areas = self.areas()
        lam2 = self.multiplier ** 2
        for parent in self.prototiles:
            prods = self.productions.get(parent)
            if not prods:
                problems.append(f"prototile {parent!r} has no production")
                continue
            total = 0.0
            for p in prods:
                if p.child not in self.prototiles:
                    problems.append(
                        f"production {parent!r} places unknown child {p.child!r}"
                    )
                    continue
                total += abs(float(np.linalg.det(p.linear))) * areas[p.child]
            target = lam2 * areas[parent]
            if not math.isclose(total, target, rel_tol=AREA_RTOL):
                problems.append(
                    f"production {parent!r} violates the area identity: "
                    f"children cover {total!r}, inflated parent is {target!r} "
                    f"(relative error {abs(total - target) / target:.3e})"
                )
        for name, linear, offset in self.seed:
            if name not in self.prototiles:
                problems.append(f"seed places unknown prototile {name!r}")
        lam2_eig = self.dominant_eigenvalue()
        if self.prototiles and not math.isclose(lam2_eig, lam2, rel_tol=1e-9):
            problems.append(
                f"count matrix eigenvalue {lam2_eig!r} differs from multiplier^2 {lam2!r}"
            )
        if problems:
            raise UsageError(
                f"rule {self.name!r} failed validation:\n  " + "\n  ".join(problems)
            )


def parse_rule_text(text: str, name: str = "rule") -> SubstitutionRule:
    multiplier = None
    prototiles: dict[str, np.ndarray] = {}
    productions: dict[str, list[Production]] = {}
    seed: list = []
    mode = None
    current: str | None = None
    buffer: list = []

    def close_section():
        nonlocal mode, current, buffer
        if mode == "prototile":
            if len(buffer) < 3:
                raise UsageError(f"prototile {current!r} needs at least 3 vertices")
            prototiles[current] = np.array(buffer, dtype=float)
        elif mode == "production":
            productions[current] = list(buffer)
        elif mode == "seed":
            seed.extend(buffer)
        mode, current, buffer = None, None, []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        try:
            if head == "multiplier":
                multiplier = float(parts[1])
            elif head == "prototile":
                close_section()
                mode, current = "prototile", parts[1]
            elif head == "production":
                close_section()
                mode, current = "production", parts[1]
            elif head == "seed":
                close_section()
                mode = "seed"
            elif head == "end":
                close_section()
            elif mode == "prototile":
                buffer.append((float(parts[0]), float(parts[1])))
            elif mode == "production":
                vals = [float(v) for v in parts[1:7]]
                buffer.append(Production(
                    child=parts[0],
                    linear=np.array([[vals[0], vals[1]], [vals[2], vals[3]]]),
                    offset=np.array([vals[4], vals[5]]),
                ))
            elif mode == "seed":
                vals = [float(v) for v in parts[1:7]]
                buffer.append((
                    parts[0],
                    np.array([[vals[0], vals[1]], [vals[2], vals[3]]]),
                    np.array([vals[4], vals[5]]),
                ))
            else:
                raise UsageError(f"line {lineno}: unexpected {line!r}")
        except (IndexError, ValueError) as exc:
            raise UsageError(f"rule {name!r} line {lineno}: cannot parse {raw!r}") from exc
    close_section()
    if multiplier is None:
        raise UsageError(f"rule {name!r} declares no multiplier")
    if not seed:
        raise UsageError(f"rule {name!r} declares no seed patch")
    rule = SubstitutionRule(
        name=name,
        multiplier=multiplier,
        prototiles=prototiles,
        productions={k: tuple(v) for k, v in productions.items()},
        seed=tuple(seed),
    )
    rule.validate()
    return rule


def builtin_rule_names() -> list[str]:
    files = resources.files("radialproj").joinpath("rules")
    return sorted(p.name[:-6] for p in files.iterdir() if p.name.endswith(".rules"))


def load_rule(name: str) -> SubstitutionRule:
    """Load a shipped rule by name, or a rule file by path."""
    candidate = resources.files("radialproj").joinpath("rules").joinpath(f"{name}.rules")
    if candidate.is_file():
        return parse_rule_text(candidate.read_text(encoding="utf-8"), name=name)
    try:
        with open(name, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError:
        raise UsageError(
            f"unknown rule {name!r}; shipped rules: {', '.join(builtin_rule_names())}"
        ) from None
    stem = name.rsplit("/", 1)[-1]
    stem = stem[:-6] if stem.endswith(".rules") else stem
    return parse_rule_text(text, name=stem)


class _Patch:
    """Placed tiles per type: dict name -> (linears (k,2,2), offsets (k,2))."""

    def __init__(self, rule: SubstitutionRule):
        self.rule = rule
        self.tiles = {}
        for tname in rule.tile_names():
            lin = [l for n, l, o in rule.seed if n == tname]
            off = [o for n, l, o in rule.seed if n == tname]
            if lin:
                self.tiles[tname] = (np.stack(lin), np.stack(off))

    def counts(self) -> dict:
        return {n: len(l) for n, (l, o) in self.tiles.items()}

    def step(self) -> None:
        lam = self.rule.multiplier
        out: dict = {}
        for parent, (lins, offs) in self.tiles.items():
            for prod in self.rule.productions[parent]:
                new_lin = np.einsum("kij,jl->kil", lins, prod.linear)
                new_off = np.einsum("kij,j->ki", lins, prod.offset) + lam * offs
                if prod.child in out:
                    out[prod.child][0].append(new_lin)
                    out[prod.child][1].append(new_off)
                else:
                    out[prod.child] = ([new_lin], [new_off])
        self.tiles = {
            n: (np.concatenate(l), np.concatenate(o)) for n, (l, o) in out.items()
        }

    def vertices(self) -> np.ndarray:
        blocks = []
        for name, (lins, offs) in self.tiles.items():
            proto = self.rule.prototiles[name]
            v = np.einsum("kij,nj->kni", lins, proto) + offs[:, None, :]
            blocks.append(v.reshape(-1, 2))
        return np.vstack(blocks) if blocks else np.empty((0, 2))


def _dedup(points: np.ndarray, tol: float = DEDUP_TOLERANCE) -> np.ndarray:
    """Merge points within tol; exact coincidences land on one grid cell."""
    if len(points) == 0:
        return points
    q = np.round(points / tol).astype(np.int64)
    _, idx = np.unique(q, axis=0, return_index=True)
    pts = points[np.sort(idx)]
    # Second pass: grid quantisation can split a true coincidence across a
    # cell boundary; merge survivors that are still closer than tol.
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    d = np.diff(pts, axis=0)
    close = (np.abs(d) < tol).all(axis=1) & ((d ** 2).sum(axis=1) < tol * tol)
    keep[1:][close] = False
    return pts[keep]


def gen_substitution(rule: SubstitutionRule, steps: int, radius: float | None = None) -> PointSet:
    """Apply the rule ``steps`` times to the seed and collect tile vertices."""
    if steps < 0:
        raise UsageError("steps must be nonnegative")
    rule.validate()
    patch = _Patch(rule)
    for _ in range(steps):
        patch.step()
    verts = _dedup(patch.vertices())
    if radius is not None:
        verts = verts[(verts ** 2).sum(axis=1) <= radius * radius]
    provenance = {
        "generator": f"substitution:{rule.name}",
        "steps": steps,
        "radius": radius,
        "multiplier": rule.multiplier,
        "tile_counts": patch.counts(),
    }
    near_int = np.abs(verts - np.round(verts)) <= INTEGER_SNAP
    if len(verts) and near_int.all():
        ps = PointSet(LATTICE, np.round(verts).astype(np.int64), provenance=provenance)
    else:
        ps = PointSet(FLOAT, verts, provenance=provenance)
    return ps.sorted()
