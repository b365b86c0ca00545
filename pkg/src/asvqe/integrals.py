"""Molecular integrals: FCIDUMP reading/writing, geometry manifests, RHF energy.

Integrals are kept in chemists' notation, ``two_body[p, q, r, s] = (pq|rs)``,
over spatial molecular orbitals.  Entries whose magnitude falls below the
storage threshold are zeroed, which is what the term counts downstream see.
"""

from __future__ import annotations

import csv
import gzip
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

DEFAULT_THRESHOLD = 1e-12
_CONSISTENCY_TOL = 1e-10

__all__ = [
    "DEFAULT_THRESHOLD",
    "FcidumpError",
    "GeometryManifest",
    "ManifestEntry",
    "ManifestError",
    "MolecularIntegrals",
    "load_manifest",
    "parse_fcidump",
    "read_fcidump",
    "read_manifest",
    "rhf_energy",
    "write_fcidump",
]


class FcidumpError(ValueError):
    pass


class ManifestError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MolecularIntegrals:
    """MO-basis integrals for one geometry.

    ``core_energy`` is the nuclear repulsion plus whatever frozen-core
    constant the source already folded in.
    """

    n_spatial_orbitals: int
    n_electrons: int
    spin_2ms: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    source_label: str = ""
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        n = self.n_spatial_orbitals
        h = _frozen(self.one_body)
        g = _frozen(self.two_body)
        if h.shape != (n, n) or g.shape != (n, n, n, n):
            raise ValueError(f"integral shapes {h.shape}, {g.shape} do not match norb={n}")
        if self.n_electrons < 0 or self.n_electrons > 2 * n:
            raise ValueError(f"{self.n_electrons} electrons do not fit in {n} spatial orbitals")
        object.__setattr__(self, "one_body", h)
        object.__setattr__(self, "two_body", g)

    @property
    def n_occupied(self) -> int:
        """Number of doubly occupied orbitals in the closed-shell reference."""
        return self.n_electrons // 2

    def check_symmetry(self, tol: float = 1e-10) -> None:
        h, g = self.one_body, self.two_body
        if not np.allclose(h, h.T, atol=tol, rtol=0):
            raise ValueError("one-body integrals are not symmetric")
        for perm in _EIGHTFOLD[1:]:
            if not np.allclose(g, g.transpose(perm), atol=tol, rtol=0):
                raise ValueError(f"two-body integrals break permutation symmetry {perm}")

    def nonzero_two_body(self) -> int:
        return int(np.count_nonzero(self.two_body))


# axis permutations generating the 8-fold symmetry of real (pq|rs)
_EIGHTFOLD = [
    (0, 1, 2, 3),
    (1, 0, 2, 3),
    (0, 1, 3, 2),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 0, 1),
    (2, 3, 1, 0),
    (3, 2, 1, 0),
]


def _equivalent_indices(p: int, q: int, r: int, s: int) -> set[tuple[int, int, int, int]]:
    idx = (p, q, r, s)
    return {tuple(idx[a] for a in perm) for perm in _EIGHTFOLD}


def _parse_header(text: str) -> dict[str, list[str]]:
    body = re.sub(r"^\s*&FCI", "", text, flags=re.IGNORECASE)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.IGNORECASE)
    parts = re.split(r"([A-Za-z_][A-Za-z0-9_]*)\s*=", body)
    fields: dict[str, list[str]] = {}
    for key, value in zip(parts[1::2], parts[2::2]):
        items = [v for v in re.split(r"[,\s]+", value.strip()) if v]
        fields[key.upper()] = items
    return fields


def _header_int(fields: dict[str, list[str]], key: str) -> int:
    if key not in fields or not fields[key]:
        raise FcidumpError(f"FCIDUMP header is missing {key}")
    try:
        return int(fields[key][0])
    except ValueError:
        raise FcidumpError(f"FCIDUMP header field {key} is not an integer: {fields[key][0]!r}") from None


def parse_fcidump(
    data: str | bytes,
    threshold: float = DEFAULT_THRESHOLD,
    label: str = "",
) -> MolecularIntegrals:
    """Parse FCIDUMP text into :class:`MolecularIntegrals`.

    Entries are replicated to all equivalent index permutations.  Lines of
    the form ``e i 0 0 0`` (orbital energies) are accepted and ignored.
    Values with magnitude below ``threshold`` are dropped.
    """
    if isinstance(data, bytes):
        if data[:2] == b"\x1f\x8b":
            data = gzip.decompress(data)
        data = data.decode()
    match = re.search(r"&END|^\s*/\s*$", data, flags=re.IGNORECASE | re.MULTILINE)
    if not re.match(r"\s*&FCI", data, flags=re.IGNORECASE) or match is None:
        raise FcidumpError("FCIDUMP header namelist (&FCI ... &END) not found")
    fields = _parse_header(data[: match.end()])
    norb = _header_int(fields, "NORB")
    nelec = _header_int(fields, "NELEC")
    ms2 = _header_int(fields, "MS2")
    if norb < 1:
        raise FcidumpError(f"NORB must be positive, got {norb}")
    if nelec < 0 or nelec > 2 * norb:
        raise FcidumpError(f"NELEC={nelec} does not fit in NORB={norb}")

    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    seen: dict[tuple[int, ...], float] = {}
    core = 0.0
    for lineno, line in enumerate(data[match.end():].splitlines(), start=1):
        tok = line.split()
        if not tok:
            continue
        if len(tok) != 5:
            raise FcidumpError(f"integral line {lineno}: expected 'value i j k l', got {line.strip()!r}")
        try:
            value = float(tok[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in tok[1:])
        except ValueError:
            raise FcidumpError(f"integral line {lineno}: non-numeric entry {line.strip()!r}") from None
        for idx in (i, j, k, l):
            if idx < 0 or idx > norb:
                raise FcidumpError(f"integral line {lineno}: index {idx} outside [1, {norb}]")
        if i == j == k == l == 0:
            key: tuple[int, ...] = ()
        elif k == l == 0:
            if i == 0 or j == 0:
                continue  # orbital energy line
            key = (max(i, j), min(i, j))
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"integral line {lineno}: index 0 in a two-body entry")
            ij, kl = (max(i, j), min(i, j)), (max(k, l), min(k, l))
            key = max(ij, kl) + min(ij, kl)
        if key in seen:
            if abs(seen[key] - value) > _CONSISTENCY_TOL:
                raise FcidumpError(
                    f"integral line {lineno}: duplicate entry {(i, j, k, l)} with inconsistent value"
                    f" ({value!r} vs {seen[key]!r})"
                )
            continue
        seen[key] = value
        if not key:
            core = value
        elif len(key) == 2:
            if abs(value) >= threshold:
                h[i - 1, j - 1] = h[j - 1, i - 1] = value
        elif abs(value) >= threshold:
            for p, q, r, s in _equivalent_indices(i - 1, j - 1, k - 1, l - 1):
                g[p, q, r, s] = value
    return MolecularIntegrals(norb, nelec, ms2, core, h, g, label, threshold)


def read_fcidump(path: str | Path, threshold: float = DEFAULT_THRESHOLD) -> MolecularIntegrals:
    """Read an FCIDUMP file; ``.gz`` files are decompressed transparently."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise FcidumpError(f"integrals file not found: {path}") from None
    label = path.name
    for suffix in (".gz", ".fcidump", ".FCIDUMP"):
        label = label.removesuffix(suffix)
    return parse_fcidump(raw, threshold=threshold, label=label)


def write_fcidump(ints: MolecularIntegrals) -> str:
    """Serialize to FCIDUMP text (unique entries only, full float precision)."""
    n = ints.n_spatial_orbitals
    out = io.StringIO()
    out.write(f" &FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.spin_2ms},\n")
    out.write("  ORBSYM=" + "1," * n + "\n  ISYM=1,\n &END\n")
    g, h = ints.two_body, ints.one_body
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                for l in range(k + 1):
                    if (i, j) >= (k, l) and g[i, j, k, l] != 0.0:
                        out.write(f" {float(g[i, j, k, l])!r} {i + 1} {j + 1} {k + 1} {l + 1}\n")
    for i in range(n):
        for j in range(i + 1):
            if h[i, j] != 0.0:
                out.write(f" {float(h[i, j])!r} {i + 1} {j + 1} 0 0\n")
    out.write(f" {float(ints.core_energy)!r} 0 0 0 0\n")
    return out.getvalue()


def rhf_energy(ints: MolecularIntegrals) -> float:
    """Closed-shell determinant energy with the lowest ``n_electrons/2`` orbitals occupied."""
    if ints.n_electrons % 2:
        raise ValueError(f"RHF needs an even electron count, got {ints.n_electrons}")
    occ = np.arange(ints.n_occupied)
    h, g = ints.one_body, ints.two_body
    coulomb = g[np.ix_(occ, occ, occ, occ)]
    e2 = 2.0 * np.einsum("iijj->", coulomb) - np.einsum("ijji->", coulomb)
    return float(ints.core_energy + 2.0 * h[occ, occ].sum() + e2)


# --------------------------------------------------------------------------
# geometry manifests

FRAGMENT_TAGS = ("complex", "gas", "ion", "site", "cell")


@dataclass(frozen=True)
class ManifestEntry:
    coords: tuple[float, ...]
    path: Path
    tag: str = "complex"

    def load(self, threshold: float = DEFAULT_THRESHOLD) -> MolecularIntegrals:
        return read_fcidump(self.path, threshold=threshold)


@dataclass(frozen=True)
class GeometryManifest:
    entries: tuple[ManifestEntry, ...]
    scan_kind: str  # "1D" or "2D-grid"
    source: Path | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    def tagged(self, tag: str) -> GeometryManifest:
        return GeometryManifest(tuple(e for e in self.entries if e.tag == tag), self.scan_kind, self.source)

    @property
    def tags(self) -> list[str]:
        return sorted({e.tag for e in self.entries})


def load_manifest(text: str, base_dir: str | Path = ".") -> GeometryManifest:
    """Parse manifest CSV text with columns ``coord, coord2, path, tag``.

    ``coord2`` and ``tag`` are optional (tag defaults to ``complex``).
    Relative paths resolve against ``base_dir``.  Coordinates must be unique
    per tag; a manifest is either all-1D or all-2D.
    """
    base = Path(base_dir)
    rows = [r for r in csv.DictReader(io.StringIO(text.strip()), skipinitialspace=True)]
    if rows and ("coord" not in rows[0] or "path" not in rows[0]):
        raise ManifestError("manifest needs at least the columns 'coord' and 'path'")
    entries = []
    dims = set()
    for n, row in enumerate(rows, start=2):
        try:
            coords = [float(row["coord"])]
            if (row.get("coord2") or "").strip():
                coords.append(float(row["coord2"]))
        except (TypeError, ValueError):
            raise ManifestError(f"manifest line {n}: bad coordinate in {row}") from None
        tag = (row.get("tag") or "").strip() or "complex"
        if tag not in FRAGMENT_TAGS:
            raise ManifestError(f"manifest line {n}: unknown tag {tag!r}")
        path = Path((row.get("path") or "").strip())
        if not path.is_absolute():
            path = base / path
        if not path.is_file():
            raise ManifestError(f"manifest line {n}: missing integrals file {path}")
        dims.add(len(coords))
        entries.append(ManifestEntry(tuple(coords), path, tag))
    if len(dims) > 1:
        raise ManifestError("manifest mixes 1D and 2D coordinate rows")
    keys = [(e.tag, e.coords) for e in entries]
    dupes = {k for k in keys if keys.count(k) > 1}
    if dupes:
        raise ManifestError(f"duplicate coordinates in manifest: {sorted(dupes)}")
    entries.sort(key=lambda e: (e.coords, FRAGMENT_TAGS.index(e.tag)))
    kind = "2D-grid" if dims == {2} else "1D"
    return GeometryManifest(tuple(entries), kind)


def read_manifest(path: str | Path) -> GeometryManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    m = load_manifest(text, base_dir=path.parent)
    return GeometryManifest(m.entries, m.scan_kind, path)


def grid_axes(entries: Iterable[ManifestEntry]) -> tuple[list[float], list[float]]:
    """Distinct first and second coordinates of a 2D grid, ascending."""
    entries = list(entries)
    xs = sorted({e.coords[0] for e in entries})
    ys = sorted({e.coords[1] for e in entries})
    if len(entries) != len(xs) * len(ys):
        raise ManifestError(f"2D manifest is not a full grid ({len(entries)} != {len(xs)}x{len(ys)})")
    return xs, ys

