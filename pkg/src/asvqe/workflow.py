"""End-to-end experiments: single points, 1D/2D PES scans, dissociation energies and LEC."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .ansatz import AnsatzCircuit, hardware_efficient_ansatz, hf_state, uccsd_ansatz
from .encoding import Z2Tapering, map_to_qubits, normalize_scheme
from .fermion import ActiveSpaceSelection, apply_active_space, select_active_space
from .integrals import GeometryManifest, ManifestEntry, MolecularIntegrals, grid_axes, rhf_energy
from .optimize import VqeConfig, vqe_minimize
from .reference import casci_ground
from .simulator import MAX_QUBITS, GuardrailError, expectation

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METHODS = ("RHF", "CASCI", "VQE-exact", "VQE-sampled")
_METHOD_ALIASES = {m.lower(): m for m in METHODS} | {"vqe": "VQE-exact", "hf": "RHF", "fci": "CASCI"}


def normalize_method(name: str) -> str:
    try:
        return _METHOD_ALIASES[name.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(METHODS)}") from None


@dataclass
class MethodSettings:
    """How one energy is computed.  ``n_homo``/``n_lumo`` of None means all orbitals."""

    n_homo: int | None = None
    n_lumo: int | None = None
    active_orbitals: list[int] | None = None
    scheme: str = "parity"
    two_qubit_reduction: bool = True
    ansatz: str = "uccsd"  # or "hardware-efficient"
    layers: int = 1
    vqe: VqeConfig = field(default_factory=VqeConfig)
    warm_start: bool = True
    jobs: int = 1

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> MethodSettings:
        d = dict(d)
        vqe = VqeConfig.from_dict(d.pop("vqe", {}))
        return cls(vqe=vqe, **d)

    def selection(self, ints: MolecularIntegrals) -> ActiveSpaceSelection:
        if self.active_orbitals is not None:
            return ActiveSpaceSelection.explicit(ints, self.active_orbitals)
        if self.n_homo is None and self.n_lumo is None:
            return ActiveSpaceSelection.full(ints)
        return select_active_space(ints, self.n_homo or 0, self.n_lumo or 0)


# --------------------------------------------------------------------------
# single points


@dataclass
class QubitProblem:
    hamiltonian: object  # PauliSum
    ansatz: AnsatzCircuit
    initial_state: object  # Statevector
    core_shift: float
    selection: ActiveSpaceSelection


def build_qubit_problem(ints: MolecularIntegrals, settings: MethodSettings) -> QubitProblem:
    """Active-space Hamiltonian, ansatz and HF state on the (optionally tapered) register."""
    sel = settings.selection(ints)
    scheme = normalize_scheme(settings.scheme)
    n = sel.n_spin_orbitals
    width = n - 2 if settings.two_qubit_reduction else n
    if width > MAX_QUBITS:
        raise GuardrailError(f"{width} qubits exceed the statevector limit of {MAX_QUBITS}")
    op, shift = apply_active_space(ints, sel)
    h = map_to_qubits(op, scheme)
    tapering = None
    if settings.two_qubit_reduction:
        if scheme != "parity":
            raise ValueError("two-qubit reduction needs the parity encoding")
        tapering = Z2Tapering.for_parity(n, sel.n_active_electrons, ints.spin_2ms)
        h = tapering.taper(h)
    if settings.ansatz == "uccsd":
        ansatz = uccsd_ansatz(sel, scheme)
        if tapering is not None:
            ansatz = ansatz.tapered(tapering)
    init = hf_state(n, sel.n_active_electrons, scheme, tapering)
    if settings.ansatz in ("hardware-efficient", "hea"):
        reference = int(np.argmax(np.abs(init.amplitudes)))
        ansatz = hardware_efficient_ansatz(h.n_qubits, settings.layers, reference)
    elif settings.ansatz != "uccsd":
        raise ValueError(f"unknown ansatz {settings.ansatz!r}")
    return QubitProblem(h, ansatz, init, shift, sel)


def hf_expectation(ints: MolecularIntegrals, settings: MethodSettings) -> float:
    """Total energy of the HF determinant evaluated on the qubit Hamiltonian."""
    p = build_qubit_problem(ints, settings)
    return expectation(p.initial_state, p.hamiltonian) + p.core_shift


def point_energy(ints: MolecularIntegrals, method: str, settings: MethodSettings,
                 initial_parameters: Sequence[float] | None = None) -> tuple[float, dict]:
    """Total energy of one geometry plus a diagnostics dict."""
    method = normalize_method(method)
    if method == "RHF":
        return rhf_energy(ints), {"converged": True, "evaluations": 0}
    if method == "CASCI":
        sel = settings.selection(ints)
        op, shift = apply_active_space(ints, sel)
        res = casci_ground(op, sel.n_active_electrons, ints.spin_2ms, shift)
        return res.ground_energy_total, {
            "converged": True, "evaluations": 0, "dimension": res.dimension, "solver": res.method,
            "active_space": sel.label,
        }
    p = build_qubit_problem(ints, settings)
    cfg = VqeConfig.from_dict(settings.vqe.as_dict())
    cfg.objective_mode = "exact" if method == "VQE-exact" else "sampled"
    if cfg.objective_mode == "sampled" and cfg.optimizer == "deterministic":
        cfg.optimizer = "spsa"
    if initial_parameters is not None and len(initial_parameters) == p.ansatz.n_parameters:
        cfg.initial_parameters = list(initial_parameters)
    rep = vqe_minimize(p.hamiltonian, p.ansatz, p.initial_state, config=cfg)
    diag = rep.as_dict()
    diag.update(active_space=p.selection.label, n_qubits=p.hamiltonian.n_qubits, core_shift=p.core_shift,
                parameter_labels=list(p.ansatz.labels))
    energy = rep.final_energy + p.core_shift
    if rep.sampled_energy is not None:
        diag["sampled_total_energy"] = rep.sampled_energy + p.core_shift
    return energy, diag


# --------------------------------------------------------------------------
# scans


@dataclass
class ScanPoint:
    coords: tuple[float, ...]
    energy: float | None
    converged: bool = True
    evaluations: int = 0
    error: str | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.error is None and self.energy is not None and math.isfinite(self.energy)


@dataclass
class ScanSeries:
    method: str
    active_space: str
    points: list[ScanPoint]
    basis: str = "STO-3G"
    tag: str = "complex"
    scan_kind: str = "1D"

    def __post_init__(self):
        self.points.sort(key=lambda p: p.coords)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def partial(self) -> bool:
        return any(not p.ok for p in self.points)

    @property
    def guardrail_failure(self) -> bool:
        return any(p.error and p.error.startswith("GuardrailError") for p in self.points)

    @property
    def coords(self) -> list[tuple[float, ...]]:
        return [p.coords for p in self.points]

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy if p.ok else np.nan for p in self.points])

    def grid(self) -> tuple[list[float], list[float], np.ndarray]:
        """Row-major energy grid (first coordinate = rows) of a 2D series."""
        xs = sorted({c[0] for c in self.coords})
        ys = sorted({c[1] for c in self.coords})
        out = np.full((len(xs), len(ys)), np.nan)
        for p in self.points:
            out[xs.index(p.coords[0]), ys.index(p.coords[1])] = p.energy if p.ok else np.nan
        return xs, ys, out

    @classmethod
    def single(cls, method: str, active_space: str, energy: float, tag: str = "complex") -> ScanSeries:
        return cls(method, active_space, [ScanPoint((0.0,), float(energy))], tag=tag)


def _run_point(entry: ManifestEntry, method: str, settings: MethodSettings, warm=None) -> ScanPoint:
    t0 = time.perf_counter()
    try:
        ints = entry.load()
        energy, diag = point_energy(ints, method, settings, warm)
    except Exception as exc:  # recorded, the scan goes on
        log.warning("point %s failed: %s", entry.coords, exc)
        return ScanPoint(entry.coords, None, False, 0, f"{type(exc).__name__}: {exc}", {"path": str(entry.path)})
    diag["path"] = str(entry.path)
    diag["seconds"] = time.perf_counter() - t0
    return ScanPoint(entry.coords, float(energy), bool(diag.get("converged", True)),
                     int(diag.get("evaluations", 0)), None, diag)


def _active_label(settings: MethodSettings, method: str) -> str:
    if normalize_method(method) == "RHF":
        return "full"
    if settings.active_orbitals is not None:
        return f"explicit{len(settings.active_orbitals)}"
    if settings.n_homo is None and settings.n_lumo is None:
        return "full"
    return f"{settings.n_homo or 0}h{settings.n_lumo or 0}l"


def pes_scan(manifest: GeometryManifest, method: str, settings: MethodSettings | None = None,
             tag: str = "complex") -> ScanSeries:
    """Energy of every ``tag`` entry of ``manifest`` with one method.

    VQE scans with ``warm_start`` run in coordinate order, each point starting
    from the previous optimum.  Otherwise points go to a pool of
    ``settings.jobs`` worker processes.  Failed points are kept with their
    error message and the series reports itself as partial.
    """
    settings = settings or MethodSettings()
    method = normalize_method(method)
    entries = list(manifest.tagged(tag).entries)
    points: list[ScanPoint] = []
    sequential = method.startswith("VQE") and settings.warm_start
    if sequential or settings.jobs <= 1 or len(entries) <= 1:
        warm = None
        for e in entries:
            pt = _run_point(e, method, settings, warm if sequential else None)
            if sequential and pt.ok:
                warm = pt.diagnostics.get("optimal_parameters")
            points.append(pt)
    else:
        with ProcessPoolExecutor(max_workers=settings.jobs) as pool:
            futures = [pool.submit(_run_point, e, method, settings) for e in entries]
            points = [f.result() for f in futures]
    return ScanSeries(method, _active_label(settings, method), points, tag=tag, scan_kind=manifest.scan_kind)


def pes_scan_2d(manifest: GeometryManifest, method: str, settings: MethodSettings | None = None,
                tag: str = "complex") -> ScanSeries:
    """Like :func:`pes_scan` over a full (distance, angle) grid; points come out row-major."""
    if manifest.scan_kind != "2D-grid":
        raise ValueError("pes_scan_2d needs a manifest with two coordinate columns")
    grid_axes(manifest.tagged(tag).entries)
    return pes_scan(manifest, method, settings, tag)


# --------------------------------------------------------------------------
# dissociation energy and local energy correction


@dataclass(frozen=True)
class DissociationCurve:
    coords: list[tuple[float, ...]]
    values: np.ndarray
    method: str
    active_space: str


def _fragment_energy(series: ScanSeries | float, n: int, name: str) -> np.ndarray:
    if isinstance(series, (int, float)):
        return np.full(n, float(series))
    e = series.energies
    if len(e) == 1:
        return np.full(n, e[0])
    if len(e) != n:
        raise ValueError(f"{name} series has {len(e)} points, complex has {n}")
    return e


def dissociation_energy(complex_: ScanSeries, gas: ScanSeries | float, ion: ScanSeries | float) -> DissociationCurve:
    """DE(r) = E_complex(r) - (E_gas + E_ion); single-point fragments broadcast."""
    for frag, name in ((gas, "gas"), (ion, "ion")):
        if isinstance(frag, ScanSeries) and frag.method != complex_.method:
            raise ValueError(f"{name} series uses {frag.method}, complex uses {complex_.method}")
    n = len(complex_)
    values = complex_.energies - (_fragment_energy(gas, n, "gas") + _fragment_energy(ion, n, "ion"))
    return DissociationCurve(complex_.coords, values, complex_.method, complex_.active_space)


@dataclass(frozen=True)
class LecInput:
    e_rhf_supersystem: float
    e_vqe_cluster: float
    e_rhf_cluster: float

    def __post_init__(self):
        for name in ("e_rhf_supersystem", "e_vqe_cluster", "e_rhf_cluster"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


def lec_energy(inp: LecInput) -> float:
    """Supersystem RHF energy corrected by the cluster's (VQE - RHF) difference."""
    return inp.e_rhf_supersystem + inp.e_vqe_cluster - inp.e_rhf_cluster


# --------------------------------------------------------------------------
# output


CSV_COLUMNS = ("coord", "coord2", "method", "active_space", "energy", "converged", "evaluations", "error")


def series_to_csv(series: ScanSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# schema_version", SCHEMA_VERSION])
    w.writerow(CSV_COLUMNS)
    for p in series.points:
        c2 = repr(p.coords[1]) if len(p.coords) > 1 else ""
        energy = repr(p.energy) if p.ok else ""
        w.writerow([repr(p.coords[0]), c2, series.method, series.active_space, energy,
                    int(p.converged), p.evaluations, p.error or ""])
    return buf.getvalue()


def read_series_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("# schema_version")]
    return list(csv.DictReader(lines))


def curve_to_csv(curve: DissociationCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# schema_version", SCHEMA_VERSION])
    w.writerow(["coord", "coord2", "method", "active_space", "dissociation_energy"])
    for c, v in zip(curve.coords, curve.values):
        w.writerow([repr(c[0]), repr(c[1]) if len(c) > 1 else "", curve.method, curve.active_space,
                    repr(float(v)) if np.isfinite(v) else ""])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def run_report(config: dict, series: Sequence[ScanSeries] = (), extra: dict | None = None) -> str:
    """JSON document embedding the resolved config, seeds and every point's diagnostics."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "series": [
            {
                "method": s.method, "active_space": s.active_space, "basis": s.basis, "tag": s.tag,
                "scan_kind": s.scan_kind, "partial": s.partial,
                "points": [asdict(p) for p in s.points],
            }
            for s in series
        ],
    }
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False)
