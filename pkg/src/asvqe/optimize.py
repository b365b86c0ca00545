"""Classical outer loop: gradients, SPSA, a bounded quasi-Newton optimizer and the VQE driver."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzCircuit
from .encoding.pauli import PauliString, PauliSum
from .simulator import (
    Gate,
    ReadoutNoiseModel,
    Statevector,
    apply_pauli,
    apply_circuit,
    apply_gate,
    estimate_energy,
    expectation,
)

log = logging.getLogger(__name__)

__all__ = [
    "LocalConfig",
    "OptimizationError",
    "SpsaConfig",
    "VqeConfig",
    "VqeReport",
    "adjoint_gradient",
    "deterministic_local_minimize",
    "energy",
    "parameter_shift_gradient",
    "spsa_minimize",
    "vqe_minimize",
]


class OptimizationError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# energies and gradients


def energy(h: PauliSum, ansatz: AnsatzCircuit, init: Statevector, params) -> float:
    return expectation(apply_circuit(init, ansatz.bind(params)), h)


def _generator(gate: Gate, n: int) -> PauliString:
    if gate.name == "pauli_exp":
        return gate.pauli
    return PauliString.single(n, gate.qubits[0], gate.name[1].upper())


def _inverse(gate: Gate) -> Gate:
    if gate.name in ("pauli_exp", "rx", "ry", "rz", "p"):
        return gate._replace(angle=-gate.angle)
    if gate.name == "s":
        return gate._replace(name="sdg")
    if gate.name == "sdg":
        return gate._replace(name="s")
    return gate  # h, x, cx are self-inverse


def parameter_shift_gradient(h: PauliSum, ansatz: AnsatzCircuit, init: Statevector, params) -> np.ndarray:
    """Two-term shift rule applied to every gate ``exp(-i w theta P / 2)``.

    A parameter shared by several gates collects ``w * (E(+pi/2) - E(-pi/2)) / 2``
    from each of them.
    """
    params = np.asarray(params, dtype=float)
    gates = ansatz.bind(params)
    grad = np.zeros(ansatz.n_parameters)
    for pos, tg in enumerate(ansatz.template):
        if tg.param is None:
            continue
        shifted = []
        for shift in (np.pi / 2, -np.pi / 2):
            g = list(gates)
            g[pos] = g[pos]._replace(angle=g[pos].angle + shift)
            shifted.append(expectation(apply_circuit(init, g), h))
        grad[tg.param] += tg.weight * (shifted[0] - shifted[1]) / 2
    return grad


def adjoint_gradient(h: PauliSum, ansatz: AnsatzCircuit, init: Statevector, params) -> tuple[float, np.ndarray]:
    """Energy and exact gradient by reverse sweep through the circuit.

    Equal to :func:`parameter_shift_gradient` up to rounding at roughly
    three circuit passes instead of two per rotation.
    """
    params = np.asarray(params, dtype=float)
    gates = ansatz.bind(params)
    n = ansatz.n_qubits
    psi = apply_circuit(init, gates).amplitudes.copy()
    lam = h.to_sparse() @ psi
    value = float(np.real(np.vdot(psi, lam)))
    grad = np.zeros(ansatz.n_parameters)
    for tg, gate in zip(reversed(ansatz.template), reversed(gates)):
        if tg.param is not None:
            p_psi = apply_pauli(psi, n, _generator(gate, n))
            grad[tg.param] += tg.weight * float(np.imag(np.vdot(lam, p_psi)))
        inv = _inverse(gate)
        apply_gate(psi, n, inv)
        apply_gate(lam, n, inv)
    return value, grad


# --------------------------------------------------------------------------
# SPSA


@dataclass
class SpsaConfig:
    a: float = 0.2
    c: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    iterations: int = 500
    seed: int = 7
    tol: float | None = None
    patience: int = 50


def spsa_minimize(objective: Callable[[np.ndarray], float], x0, config: SpsaConfig | None = None,
                  bounds: tuple[float, float] | None = None):
    """Simultaneous-perturbation stochastic approximation.

    Gains decay as ``a/(k+1)^alpha`` and ``c/(k+1)^gamma`` with Bernoulli
    +-1 directions drawn from a seeded counter-based generator.  Returns the
    last iterate and a trace of ``(evaluation index, mean probe value)``.
    With ``config.tol`` set, stops once the best probe value has not
    improved by ``tol`` for ``patience`` iterations.
    """
    cfg = config or SpsaConfig()
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    x = np.array(x0, dtype=float)
    trace: list[tuple[int, float]] = []
    evals = 0
    best, stale = math.inf, 0
    for k in range(cfg.iterations):
        ak = cfg.a / (k + 1) ** cfg.alpha
        ck = cfg.c / (k + 1) ** cfg.gamma
        delta = rng.choice([-1.0, 1.0], size=x.shape)
        yp = objective(x + ck * delta)
        ym = objective(x - ck * delta)
        evals += 2
        if not (np.isfinite(yp) and np.isfinite(ym)):
            raise OptimizationError(f"non-finite objective at SPSA iteration {k}")
        x = x - ak * (yp - ym) / (2 * ck) * delta
        if bounds is not None:
            x = np.clip(x, *bounds)
        mean = 0.5 * (yp + ym)
        trace.append((evals, float(mean)))
        if cfg.tol is not None:
            if mean < best - cfg.tol:
                best, stale = mean, 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    return x, trace


# --------------------------------------------------------------------------
# bounded quasi-Newton


@dataclass
class LocalConfig:
    gtol: float = 1e-6
    xtol: float = 1e-10
    max_iterations: int = 1000
    max_evaluations: int = 5000


@dataclass
class LocalResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    message: str


def deterministic_local_minimize(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray] | None,
    x0,
    bounds=None,
    config: LocalConfig | None = None,
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]] | None = None,
):
    """Bounded L-BFGS with line search (scipy ``L-BFGS-B``).

    Stops on projected-gradient max-norm below ``gtol`` or a step shorter
    than ``xtol``.  Returns ``(x, trace, result)`` where ``trace`` holds the
    objective at the start point and after every accepted step, so it is
    non-increasing.
    """
    cfg = config or LocalConfig()
    x0 = np.array(x0, dtype=float)

    if value_and_grad is None:
        if gradient is None:
            raise ValueError("a gradient callable is required")

        def value_and_grad(x):
            return objective(x), gradient(x)

    cache: dict[bytes, float] = {}
    n_eval = 0

    def fg(x):
        nonlocal n_eval
        n_eval += 1
        f, g = value_and_grad(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise OptimizationError(f"non-finite objective or gradient at x={x.tolist()}")
        cache[x.tobytes()] = float(f)
        return float(f), np.asarray(g, dtype=float)

    f0, g0 = fg(x0)
    trace = [(0, f0)]
    if np.max(np.abs(g0), initial=0.0) < cfg.gtol:
        return x0, trace, LocalResult(x0, f0, 0, n_eval, True, "gradient below tolerance at start")

    last = [x0.copy()]
    steps = [0]

    def callback(intermediate_result):
        x = intermediate_result.x
        steps[0] += 1
        trace.append((steps[0], cache.get(x.tobytes(), float(intermediate_result.fun))))
        if np.linalg.norm(x - last[0]) < cfg.xtol:
            raise StopIteration
        last[0] = x.copy()

    res = minimize(
        fg, x0, jac=True, method="L-BFGS-B", bounds=bounds, callback=callback,
        options={"gtol": cfg.gtol, "ftol": 1e-15, "maxiter": cfg.max_iterations, "maxfun": cfg.max_evaluations},
    )
    converged = bool(res.success) or "StopIteration" in str(res.message) or steps[0] == 0
    gnorm = float(np.max(np.abs(res.jac))) if getattr(res, "jac", None) is not None else math.nan
    converged = converged or gnorm < cfg.gtol
    return res.x, trace, LocalResult(res.x, float(res.fun), steps[0], n_eval, converged, str(res.message))


# --------------------------------------------------------------------------
# VQE driver


@dataclass
class VqeConfig:
    optimizer: str = "deterministic"  # or "spsa"
    objective_mode: str = "exact"  # or "sampled"
    gradient: str = "adjoint"  # or "parameter-shift"
    initial_parameters: list[float] | None = None
    bounds: tuple[float, float] = (-np.pi, np.pi)
    restarts: int = 0  # extra seeded uniform starts for the deterministic optimizer
    tol: float = 1e-8
    patience: int = 50
    max_evaluations: int = 5000
    local: LocalConfig = field(default_factory=LocalConfig)
    spsa: SpsaConfig = field(default_factory=SpsaConfig)
    shots: int = 100_000
    readout_error: float = 0.0
    mitigate: bool = True
    seed: int = 7

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> VqeConfig:
        d = dict(d)
        local = LocalConfig(**d.pop("local", {}))
        spsa = SpsaConfig(**d.pop("spsa", {}))
        if "bounds" in d:
            d["bounds"] = tuple(d["bounds"])
        return cls(local=local, spsa=spsa, **d)


@dataclass
class VqeReport:
    final_energy: float
    optimal_parameters: list[float]
    iterations: int
    evaluations: int
    energy_trace: list[tuple[int, float]]
    objective_mode: str
    converged: bool
    seed: int
    optimizer: str
    message: str = ""
    sampled_trace: list[tuple[int, float]] = field(default_factory=list)
    sampled_energy: float | None = None
    sampled_std_error: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def vqe_minimize(h: PauliSum, ansatz: AnsatzCircuit, init: Statevector,
                 optimizer: str | None = None, config: VqeConfig | None = None) -> VqeReport:
    """Minimize <init| U(theta)^dagger H U(theta) |init> over the ansatz parameters.

    ``deterministic`` uses exact expectations and gradients; ``spsa`` works
    on exact or shot-sampled (optionally noisy and mitigated) energies.  The
    reported energy is always an exact expectation.
    """
    cfg = config or VqeConfig()
    opt = optimizer or cfg.optimizer
    if h.n_qubits != ansatz.n_qubits or init.n_qubits != ansatz.n_qubits:
        raise ValueError(
            f"width mismatch: hamiltonian {h.n_qubits}, ansatz {ansatz.n_qubits}, state {init.n_qubits}"
        )
    npar = ansatz.n_parameters
    x0 = np.zeros(npar) if cfg.initial_parameters is None else np.array(cfg.initial_parameters, dtype=float)
    if x0.shape != (npar,):
        raise ValueError(f"initial parameters have shape {x0.shape}, expected ({npar},)")

    trace: list[tuple[int, float]] = []
    best = {"f": math.inf, "x": x0.copy()}
    counter = [0]

    def record(x, f):
        counter[0] += 1
        trace.append((counter[0], float(f)))
        if f < best["f"]:
            best["f"], best["x"] = float(f), np.array(x, copy=True)

    def exact(x):
        f = energy(h, ansatz, init, x)
        record(x, f)
        return f

    if npar == 0:
        exact(x0)
        return VqeReport(best["f"], [], 0, 1, trace, "exact", True, cfg.seed, opt, "no parameters")

    if opt == "deterministic":
        if cfg.objective_mode != "exact":
            raise ValueError("the deterministic optimizer needs exact expectations")

        def value_and_grad(x):
            if cfg.gradient == "parameter-shift":
                f = energy(h, ansatz, init, x)
                g = parameter_shift_gradient(h, ansatz, init, x)
            else:
                f, g = adjoint_gradient(h, ansatz, init, x)
            record(x, f)
            return f, g

        local = LocalConfig(cfg.local.gtol, cfg.local.xtol, cfg.local.max_iterations, cfg.max_evaluations)
        bounds = [cfg.bounds] * npar
        starts = [x0]
        if cfg.restarts:
            rng = np.random.Generator(np.random.Philox(cfg.seed))
            starts += list(rng.uniform(*cfg.bounds, size=(cfg.restarts, npar)))
        iterations, converged, message = 0, True, ""
        for start in starts:
            _, _, res = deterministic_local_minimize(None, None, start, bounds, local, value_and_grad=value_and_grad)
            iterations += res.iterations
            converged &= res.converged
            message = res.message
        return VqeReport(best["f"], best["x"].tolist(), iterations, counter[0], trace, "exact",
                         converged, cfg.seed, opt, message)

    if opt != "spsa":
        raise ValueError(f"unknown optimizer {opt!r}")
    sampled_trace: list[tuple[int, float]] = []
    noise = ReadoutNoiseModel.uniform(h.n_qubits, cfg.readout_error) if cfg.readout_error > 0 else None
    eval_seed = [cfg.seed]

    def sampled(x):
        eval_seed[0] += 1
        est = estimate_energy(apply_circuit(init, ansatz.bind(x)), h, cfg.shots, noise,
                              mitigate=cfg.mitigate and noise is not None, seed=eval_seed[0])
        sampled_trace.append((len(sampled_trace) + 1, est.energy))
        return est.energy

    objective = exact if cfg.objective_mode == "exact" else sampled
    spsa_cfg = SpsaConfig(**{**asdict(cfg.spsa), "tol": cfg.tol, "patience": cfg.patience})
    spsa_cfg.iterations = min(spsa_cfg.iterations, cfg.max_evaluations // 2)
    x, spsa_trace = spsa_minimize(objective, x0, spsa_cfg, bounds=cfg.bounds)
    converged = len(spsa_trace) < spsa_cfg.iterations
    final = exact(x)
    report = VqeReport(
        final if cfg.objective_mode == "sampled" else best["f"],
        (x if cfg.objective_mode == "sampled" else best["x"]).tolist(),
        len(spsa_trace),
        counter[0] + len(sampled_trace),
        trace if cfg.objective_mode == "exact" else [trace[-1]],
        cfg.objective_mode,
        converged,
        cfg.seed,
        opt,
    )
    if cfg.objective_mode == "sampled":
        report.sampled_trace = sampled_trace
        est = estimate_energy(apply_circuit(init, ansatz.bind(x)), h, cfg.shots, noise,
                              mitigate=cfg.mitigate and noise is not None, seed=cfg.seed + 10**6)
        report.sampled_energy, report.sampled_std_error = est.energy, est.std_error
    return report
