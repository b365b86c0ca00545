"""Command-line entry point.

Settings come from built-in defaults, then an optional JSON config file
(``--config``), then command-line flags; later sources win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

from .encoding import map_to_qubits, resource_metrics
from .fermion import ActiveSpaceSelection, apply_active_space, build_hamiltonian, count_terms, select_active_space
from .integrals import FcidumpError, ManifestError, read_fcidump, read_manifest, rhf_energy
from .simulator import GuardrailError
from .workflow import (
    SCHEMA_VERSION,
    LecInput,
    MethodSettings,
    curve_to_csv,
    dissociation_energy,
    lec_energy,
    normalize_method,
    pes_scan,
    pes_scan_2d,
    point_energy,
    run_report,
    series_to_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_GUARDRAIL = 0, 2, 3, 4
FIXTURE_ENV = "ASVQE_FIXTURES"
PACKAGED_FIXTURES = Path(__file__).parent / "data" / "fixtures"
RESOURCE_THRESHOLD = 1e-8

log = logging.getLogger("asvqe")


class ConfigError(ValueError):
    pass


def fixture_dir() -> Path:
    return Path(os.environ.get(FIXTURE_ENV) or PACKAGED_FIXTURES)


def resolve_path(p: str | None, what: str) -> Path:
    """Use ``p`` as given if it exists, else look it up in the fixture directory."""
    if not p:
        raise ConfigError(f"no {what} given")
    path = Path(p)
    if path.exists():
        return path
    alt = fixture_dir() / p
    if not path.is_absolute() and alt.exists():
        return alt
    raise ConfigError(f"{what} not found: {p}")


def fmt(e: float) -> str:
    return f"{e:.10g}"


def parse_window(text: str) -> tuple[int, int] | None:
    """``'2h2l'`` -> (2, 2); ``'full'`` -> None."""
    text = text.strip().lower()
    if text == "full":
        return None
    m = re.fullmatch(r"(\d+)h(\d+)l", text)
    if not m:
        raise ConfigError(f"bad active-space window {text!r} (expected e.g. 2h2l or full)")
    return int(m.group(1)), int(m.group(2))


# --------------------------------------------------------------------------
# configuration


DEFAULTS = {
    "integrals": None,
    "manifest": None,
    "methods": ["RHF"],
    "window": "full",
    "windows": ["1h1l", "2h2l", "3h3l", "4h4l", "5h5l", "full"],
    "threshold": RESOURCE_THRESHOLD,
    "scheme": "parity",
    "two_qubit_reduction": True,
    "ansatz": "uccsd",
    "layers": 1,
    "warm_start": True,
    "jobs": None,
    "tag": "complex",
    "vqe": {},
    "csv": None,
    "json": None,
    "lec": {},
    "supersystem": None,
    "cluster": None,
}

# flag dest -> config key (nested keys use dots)
_FLAG_KEYS = {
    "integrals": "integrals",
    "manifest": "manifest",
    "methods": "methods",
    "window": "window",
    "windows": "windows",
    "threshold": "threshold",
    "scheme": "scheme",
    "two_qubit_reduction": "two_qubit_reduction",
    "ansatz": "ansatz",
    "layers": "layers",
    "warm_start": "warm_start",
    "jobs": "jobs",
    "tag": "tag",
    "csv": "csv",
    "json": "json",
    "optimizer": "vqe.optimizer",
    "shots": "vqe.shots",
    "readout_error": "vqe.readout_error",
    "mitigate": "vqe.mitigate",
    "seed": "vqe.seed",
    "max_evaluations": "vqe.max_evaluations",
    "supersystem": "supersystem",
    "cluster": "cluster",
    "e_rhf_supersystem": "lec.e_rhf_supersystem",
    "e_vqe_cluster": "lec.e_vqe_cluster",
    "e_rhf_cluster": "lec.e_rhf_cluster",
}


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for k, v in loaded.items():
            if isinstance(v, dict) and isinstance(cfg.get(k), dict):
                cfg[k].update(v)
            else:
                cfg[k] = v
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        if "." in key:
            outer, inner = key.split(".")
            cfg[outer][inner] = value
        else:
            cfg[key] = value
    if isinstance(cfg["methods"], str):
        cfg["methods"] = [cfg["methods"]]
    if isinstance(cfg["windows"], str):
        cfg["windows"] = [w for w in cfg["windows"].split(",") if w.strip()]
    if cfg["jobs"] is None:
        cfg["jobs"] = os.cpu_count() or 1
    return cfg


def method_settings(cfg: dict) -> MethodSettings:
    window = parse_window(cfg["window"])
    try:
        return MethodSettings.from_dict({
            "n_homo": window[0] if window else None,
            "n_lumo": window[1] if window else None,
            "scheme": cfg["scheme"],
            "two_qubit_reduction": bool(cfg["two_qubit_reduction"]),
            "ansatz": cfg["ansatz"],
            "layers": int(cfg["layers"]),
            "vqe": cfg["vqe"],
            "warm_start": bool(cfg["warm_start"]),
            "jobs": int(cfg["jobs"]),
        })
    except TypeError as exc:
        raise ConfigError(f"bad optimizer settings: {exc}") from None


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# --------------------------------------------------------------------------
# commands


def cmd_inspect(cfg: dict) -> int:
    ints = read_fcidump(resolve_path(cfg["integrals"], "integrals file"))
    print(f"orbitals        {ints.n_spatial_orbitals}")
    print(f"electrons       {ints.n_electrons}")
    print(f"MS2             {ints.spin_2ms}")
    print(f"core energy     {fmt(ints.core_energy)}")
    print(f"one-body nnz    {int((ints.one_body != 0).sum())}")
    print(f"two-body nnz    {int((ints.two_body != 0).sum())}")
    ints.check_symmetry()
    print("8-fold symmetry ok")
    if ints.n_electrons % 2 == 0:
        print(f"RHF energy      {fmt(rhf_energy(ints))}")
    return EXIT_OK


def resources_table(ints, windows: list[str], threshold: float) -> list[dict]:
    rows = []
    for w in windows:
        window = parse_window(w)
        sel = ActiveSpaceSelection.full(ints) if window is None else select_active_space(ints, *window)
        if window is None:
            op = build_hamiltonian(ints, threshold=threshold)
        else:
            op, _ = apply_active_space(ints, sel)
        qubit_op = map_to_qubits(op, "jw", threshold=threshold)
        m = resource_metrics(op, qubit_op)
        rows.append({"system": "Full" if window is None else sel.label, **m.as_dict(),
                     "n_fermionic_terms_normal_ordered": count_terms(op)})
    return rows


def cmd_resources(cfg: dict) -> int:
    path = resolve_path(cfg["integrals"], "integrals file")
    windows = list(cfg["windows"])
    ints = read_fcidump(path, threshold=float(cfg["threshold"])) if windows else None
    rows = resources_table(ints, windows, float(cfg["threshold"])) if windows else []
    header = ("System Abv.", "No. Spin Orbitals = No. qubits", "No. Fermionic Terms", "No. Pauli Terms",
              "Hamiltonian's Circuit Depth")
    print(" | ".join(header))
    for r in rows:
        print(" | ".join(str(v) for v in (r["system"], r["n_qubits"], r["n_fermionic_terms"], r["n_pauli_terms"],
                                         r["depth_estimate"])))
    if cfg["csv"]:
        lines = [",".join(["system", "n_qubits", "n_fermionic_terms", "n_pauli_terms", "depth_estimate",
                           "n_pauli_strings"])]
        lines += [",".join(str(r[k]) for k in ("system", "n_qubits", "n_fermionic_terms", "n_pauli_terms",
                                                "depth_estimate", "n_pauli_strings")) for r in rows]
        _write(cfg["csv"], "\n".join(lines) + "\n")
    _write(cfg["json"], json.dumps({"schema_version": SCHEMA_VERSION, "config": cfg, "rows": rows}, indent=2))
    return EXIT_OK


def cmd_energy(cfg: dict) -> int:
    ints = read_fcidump(resolve_path(cfg["integrals"], "integrals file"))
    settings = method_settings(cfg)
    e_rhf = rhf_energy(ints) if ints.n_electrons % 2 == 0 else None
    results, code = {}, EXIT_OK
    print(f"{'method':<12} {'energy / Eh':>18} {'dE / Eh':>18} {'dE / mEh':>14}")
    for name in cfg["methods"]:
        method = normalize_method(name)
        try:
            energy, diag = point_energy(ints, method, settings)
        except GuardrailError as exc:
            print(f"{method:<12} guardrail: {exc}")
            results[method] = {"error": f"GuardrailError: {exc}"}
            code = EXIT_GUARDRAIL
            continue
        results[method] = {"energy": energy, "diagnostics": diag}
        if e_rhf is None:
            print(f"{method:<12} {fmt(energy):>18}")
        else:
            de = energy - e_rhf
            results[method]["delta_rhf"] = de
            print(f"{method:<12} {fmt(energy):>18} {fmt(de):>18} {fmt(de * 1e3):>14}")
    _write(cfg["json"], run_report(cfg, extra={"rhf_reference": e_rhf, "results": results}))
    return code


def _scan_code(series) -> int:
    if any(s.guardrail_failure for s in series):
        return EXIT_GUARDRAIL
    return EXIT_PARTIAL if any(s.partial for s in series) else EXIT_OK


def _print_series(s) -> None:
    print(f"# {s.method} {s.active_space} ({len(s)} points{', partial' if s.partial else ''})")
    for p in s.points:
        coords = " ".join(f"{c:g}" for c in p.coords)
        print(f"{coords}  {fmt(p.energy) if p.ok else 'failed: ' + str(p.error)}")


def cmd_scan(cfg: dict, two_d: bool = False) -> int:
    manifest = read_manifest(resolve_path(cfg["manifest"], "manifest"))
    settings = method_settings(cfg)
    scan = pes_scan_2d if two_d else pes_scan
    series = [scan(manifest, normalize_method(m), settings, tag=cfg["tag"]) for m in cfg["methods"]]
    for s in series:
        _print_series(s)
    if cfg["csv"]:
        text = series_to_csv(series[0])
        for s in series[1:]:
            text += "".join(series_to_csv(s).splitlines(keepends=True)[2:])
        _write(cfg["csv"], text)
    _write(cfg["json"], run_report(cfg, series))
    return _scan_code(series)


def cmd_de(cfg: dict) -> int:
    manifest = read_manifest(resolve_path(cfg["manifest"], "manifest"))
    missing = {"complex", "gas", "ion"} - set(manifest.tags)
    if missing:
        raise ConfigError(f"manifest lacks entries tagged {sorted(missing)}")
    settings = method_settings(cfg)
    method = normalize_method(cfg["methods"][0])
    series = [pes_scan(manifest, method, settings, tag=t) for t in ("complex", "gas", "ion")]
    curve = dissociation_energy(*series)
    print(f"# DE {curve.method} {curve.active_space}")
    for c, v in zip(curve.coords, curve.values):
        print(f"{' '.join(f'{x:g}' for x in c)}  {fmt(v)} Eh  {fmt(v * 1e3)} mEh")
    _write(cfg["csv"], curve_to_csv(curve))
    _write(cfg["json"], run_report(cfg, series, {"dissociation_energy": list(curve.values)}))
    return _scan_code(series)


def cmd_lec(cfg: dict) -> int:
    given = cfg["lec"]
    if all(k in given for k in ("e_rhf_supersystem", "e_vqe_cluster", "e_rhf_cluster")):
        inp = LecInput(float(given["e_rhf_supersystem"]), float(given["e_vqe_cluster"]), float(given["e_rhf_cluster"]))
        diag = {}
    else:
        sup = read_fcidump(resolve_path(cfg["supersystem"], "supersystem integrals"))
        clu = read_fcidump(resolve_path(cfg["cluster"], "cluster integrals"))
        settings = method_settings(cfg)
        e_vqe, diag = point_energy(clu, "VQE-exact", settings)
        inp = LecInput(rhf_energy(sup), e_vqe, rhf_energy(clu))
    e = lec_energy(inp)
    print(f"E_RHF(supersystem) {fmt(inp.e_rhf_supersystem)}")
    print(f"E_VQE(cluster)     {fmt(inp.e_vqe_cluster)}")
    print(f"E_RHF(cluster)     {fmt(inp.e_rhf_cluster)}")
    print(f"E_LEC              {fmt(e)}")
    _write(cfg["json"], run_report(cfg, extra={"lec": e, "inputs": vars(inp), "cluster_vqe": diag}))
    return EXIT_OK


COMMANDS = {
    "inspect": cmd_inspect,
    "resources": cmd_resources,
    "energy": cmd_energy,
    "scan": cmd_scan,
    "scan2d": lambda cfg: cmd_scan(cfg, two_d=True),
    "de": cmd_de,
    "lec": cmd_lec,
}


def _bool_flag(p: argparse.ArgumentParser, name: str, dest: str, help: str) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument(f"--{name}", dest=dest, action="store_true", default=None, help=help)
    g.add_argument(f"--no-{name}", dest=dest, action="store_false", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asvqe", description="Active-space VQE toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--csv", help="CSV output path")
    common.add_argument("--json", help="JSON run-report path")

    method = argparse.ArgumentParser(add_help=False)
    method.add_argument("--window", help="active-space window such as 2h2l, or 'full'")
    method.add_argument("--scheme", choices=["jw", "parity", "bk"])
    _bool_flag(method, "two-qubit-reduction", "two_qubit_reduction", "taper two qubits (parity only)")
    method.add_argument("--ansatz", choices=["uccsd", "hardware-efficient"])
    method.add_argument("--layers", type=int)
    method.add_argument("--optimizer", choices=["deterministic", "spsa"])
    method.add_argument("--shots", type=int)
    method.add_argument("--readout-error", type=float)
    _bool_flag(method, "mitigate", "mitigate", "apply readout-error mitigation")
    method.add_argument("--seed", type=int)
    method.add_argument("--max-evaluations", type=int)
    _bool_flag(method, "warm-start", "warm_start", "start each scan point from the previous optimum")
    method.add_argument("--jobs", type=int, help="worker processes (default: all cores)")

    p = sub.add_parser("inspect", parents=[common], help="summarize an integrals file")
    p.add_argument("integrals", nargs="?")

    p = sub.add_parser("resources", parents=[common], help="qubit/term/depth table per active-space window")
    p.add_argument("integrals", nargs="?")
    p.add_argument("--windows", help="comma-separated windows, e.g. 1h1l,2h2l,full ('' for none)")
    p.add_argument("--threshold", type=float, help=f"integral and Pauli pruning threshold (default {RESOURCE_THRESHOLD})")

    p = sub.add_parser("energy", parents=[common, method], help="single-point energies")
    p.add_argument("integrals", nargs="?")
    p.add_argument("--methods", type=lambda s: s.split(","), help="comma-separated: RHF,CASCI,VQE-exact,VQE-sampled")

    for name, helptext in (("scan", "1D PES scan"), ("scan2d", "2D (distance x angle) PES scan"),
                           ("de", "dissociation-energy curve")):
        p = sub.add_parser(name, parents=[common, method], help=helptext)
        p.add_argument("manifest", nargs="?")
        p.add_argument("--methods", "--method", dest="methods", type=lambda s: s.split(","))
        if name != "de":
            p.add_argument("--tag")

    p = sub.add_parser("lec", parents=[common, method], help="local energy correction")
    p.add_argument("--supersystem", help="integrals of the supersystem (RHF)")
    p.add_argument("--cluster", help="integrals of the cluster (RHF and VQE)")
    p.add_argument("--e-rhf-supersystem", type=float)
    p.add_argument("--e-vqe-cluster", type=float)
    p.add_argument("--e-rhf-cluster", type=float)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except GuardrailError as exc:
        print(f"error: guardrail exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARDRAIL
    except (ConfigError, FcidumpError, ManifestError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
