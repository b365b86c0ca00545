"""Second-quantized electronic Hamiltonians and active-space reduction.

Spin orbitals interleave spin: mode ``2p`` is spatial orbital ``p`` spin up,
``2p + 1`` is spin down.  Operator strings are tuples of ``(mode, dagger)``
pairs read left to right; a normal-ordered string has all creators first
and strictly descending mode indices inside each group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .integrals import DEFAULT_THRESHOLD, MolecularIntegrals

Term = tuple[tuple[int, int], ...]

__all__ = [
    "ActiveSpaceSelection",
    "FermionOperator",
    "active_space_integrals",
    "apply_active_space",
    "build_hamiltonian",
    "count_expanded_terms",
    "count_terms",
    "normal_order",
    "select_active_space",
]


def _normal_order_term(term: Term, coeff: complex) -> dict[Term, complex]:
    """Normal-order one ladder string, returning a combination of ordered strings."""
    ops = list(term)
    for i in range(1, len(ops)):
        for j in range(i, 0, -1):
            left, right = ops[j - 1], ops[j]
            if right[1] and not left[1]:
                # a_l a+_r = delta_lr - a+_r a_l
                ops[j - 1], ops[j] = right, left
                out = _normal_order_term(tuple(ops), -coeff)
                if left[0] == right[0]:
                    for t, c in _normal_order_term(tuple(ops[: j - 1] + ops[j + 1:]), coeff).items():
                        out[t] = out.get(t, 0.0) + c
                return out
            if right[1] == left[1]:
                if right[0] == left[0]:
                    return {}
                if right[0] > left[0]:
                    ops[j - 1], ops[j] = right, left
                    coeff = -coeff
    return {tuple(ops): coeff}


def normal_order(terms: Mapping[Term, complex]) -> dict[Term, complex]:
    out: dict[Term, complex] = {}
    for term, coeff in terms.items():
        for t, c in _normal_order_term(tuple(term), coeff).items():
            out[t] = out.get(t, 0.0) + c
    return out


@dataclass(frozen=True)
class FermionOperator:
    """Weighted sum of normal-ordered ladder strings.

    ``expanded_terms`` is set by :func:`build_hamiltonian` and records how
    many spin-orbital integral products the Hamiltonian was assembled from
    before any combination (see :func:`count_terms`).
    """

    terms: Mapping[Term, complex]
    n_spin_orbitals: int
    expanded_terms: int | None = field(default=None, compare=False)

    @classmethod
    def from_terms(
        cls,
        terms: Mapping[Term, complex] | Iterable[tuple[Term, complex]],
        n_spin_orbitals: int,
        threshold: float = DEFAULT_THRESHOLD,
    ) -> FermionOperator:
        if not isinstance(terms, Mapping):
            acc: dict[Term, complex] = {}
            for t, c in terms:
                acc[tuple(t)] = acc.get(tuple(t), 0.0) + c
            terms = acc
        ordered = normal_order(terms)
        for t in ordered:
            for mode, _ in t:
                if not 0 <= mode < n_spin_orbitals:
                    raise ValueError(f"mode {mode} outside {n_spin_orbitals} spin orbitals")
        return cls(_prune(ordered, threshold), n_spin_orbitals)

    @property
    def constant(self) -> float:
        return float(np.real(self.terms.get((), 0.0)))

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: FermionOperator) -> FermionOperator:
        acc = dict(self.terms)
        for t, c in other.terms.items():
            acc[t] = acc.get(t, 0.0) + c
        return FermionOperator(_prune(acc, DEFAULT_THRESHOLD), max(self.n_spin_orbitals, other.n_spin_orbitals))

    def __mul__(self, scalar: complex) -> FermionOperator:
        return FermionOperator(_prune({t: c * scalar for t, c in self.terms.items()}, DEFAULT_THRESHOLD),
                               self.n_spin_orbitals)

    __rmul__ = __mul__

    def __sub__(self, other: FermionOperator) -> FermionOperator:
        return self + other * -1.0

    def adjoint(self) -> FermionOperator:
        flipped = {tuple((m, 1 - d) for m, d in reversed(t)): np.conj(c) for t, c in self.terms.items()}
        return FermionOperator(_prune(normal_order(flipped), DEFAULT_THRESHOLD), self.n_spin_orbitals)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        adj = self.adjoint()
        keys = set(self.terms) | set(adj.terms)
        return all(abs(self.terms.get(k, 0.0) - adj.terms.get(k, 0.0)) <= tol for k in keys)

    def without_constant(self) -> FermionOperator:
        return FermionOperator({t: c for t, c in self.terms.items() if t}, self.n_spin_orbitals,
                               self.expanded_terms)

    def dump(self) -> str:
        """Sorted ``coeff : string`` lines, e.g. ``-1.25 : 1^ 0``."""
        lines = []
        for t in sorted(self.terms):
            s = " ".join(f"{m}^" if d else str(m) for m, d in t)
            lines.append(f"{float(np.real(self.terms[t]))!r} : {s}")
        return "\n".join(lines)


def _prune(terms: Mapping[Term, complex], threshold: float) -> dict[Term, complex]:
    out = {}
    for t, c in terms.items():
        if abs(c) >= threshold:
            out[t] = float(np.real(c)) if abs(np.imag(c)) < 1e-14 else complex(c)
    return out


def count_expanded_terms(one_body: np.ndarray, two_body: np.ndarray) -> int:
    """Spin-orbital integral products before simplification.

    Each non-zero ``h_pq`` yields one term per spin and each non-zero
    ``(pq|rs)`` one term per spin pair, so the count is
    ``2 * nnz(h) + 4 * nnz(g)``.
    """
    return 2 * int(np.count_nonzero(one_body)) + 4 * int(np.count_nonzero(two_body))


def build_hamiltonian(ints: MolecularIntegrals, threshold: float | None = None) -> FermionOperator:
    """Electronic Hamiltonian over ``2 * n_spatial`` spin orbitals.

    H = sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r + core_energy,
    with physicists' <pq|rs> = (pr|qs) restricted to matching spins.
    """
    thr = ints.threshold if threshold is None else threshold
    h, g = ints.one_body, ints.two_body
    n = ints.n_spatial_orbitals
    terms: dict[Term, complex] = {}
    if ints.core_energy != 0.0:
        terms[()] = float(ints.core_energy)

    p, q = np.nonzero(h)
    for spin in (0, 1):
        for a, b, v in zip(2 * p + spin, 2 * q + spin, h[p, q]):
            terms[((int(a), 1), (int(b), 0))] = float(v)

    # (pr|qs) -> a+_{p s1} a+_{q s2} a_{s s2} a_{r s1}
    pp, rr, qq, ss = np.nonzero(g)
    vals = 0.5 * g[pp, rr, qq, ss]
    modes, coeffs = [], []
    for s1 in (0, 1):
        for s2 in (0, 1):
            modes.append(np.stack([2 * pp + s1, 2 * qq + s2, 2 * ss + s2, 2 * rr + s1], axis=1))
            coeffs.append(vals)
    if modes:
        m = np.concatenate(modes)
        c = np.concatenate(coeffs)
        keep = (m[:, 0] != m[:, 1]) & (m[:, 2] != m[:, 3])
        m, c = m[keep], c[keep]
        # sort each pair descending, tracking the fermionic sign
        swap_c = m[:, 0] < m[:, 1]
        swap_a = m[:, 2] < m[:, 3]
        m[swap_c, 0], m[swap_c, 1] = m[swap_c, 1], m[swap_c, 0].copy()
        m[swap_a, 2], m[swap_a, 3] = m[swap_a, 3], m[swap_a, 2].copy()
        c = c * np.where(swap_c ^ swap_a, -1.0, 1.0)
        nso = 2 * n
        key = ((m[:, 0] * nso + m[:, 1]) * nso + m[:, 2]) * nso + m[:, 3]
        order = np.argsort(key, kind="stable")
        key, c = key[order], c[order]
        uniq, start = np.unique(key, return_index=True)
        sums = np.add.reduceat(c, start) if len(c) else c
        for k, v in zip(uniq.tolist(), sums.tolist()):
            if abs(v) < thr:
                continue
            a, rest = divmod(k, nso**3)
            b, rest = divmod(rest, nso**2)
            s, r = divmod(rest, nso)
            terms[((a, 1), (b, 1), (s, 0), (r, 0))] = v

    return FermionOperator(_prune(terms, thr), 2 * n, count_expanded_terms(h, g))


def count_terms(op: FermionOperator, convention: str = "normal_ordered") -> int:
    """Number of non-constant terms.

    ``normal_ordered`` counts the combined, pruned strings stored in ``op``.
    ``expanded`` counts integral products before combination, the convention
    behind published resource tables; it needs an operator produced by
    :func:`build_hamiltonian` or :func:`apply_active_space`.
    """
    if convention == "normal_ordered":
        return sum(1 for t in op.terms if t)
    if convention == "expanded":
        if op.expanded_terms is None:
            raise ValueError("operator carries no expanded term count")
        return op.expanded_terms
    raise ValueError(f"unknown counting convention {convention!r}")


# --------------------------------------------------------------------------
# active spaces


@dataclass(frozen=True)
class ActiveSpaceSelection:
    n_homo: int
    n_lumo: int
    n_active_electrons: int
    active_spatial_indices: tuple[int, ...]
    frozen_occupied_indices: tuple[int, ...]
    discarded_virtual_indices: tuple[int, ...]

    @property
    def n_active_orbitals(self) -> int:
        return len(self.active_spatial_indices)

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_active_orbitals

    @property
    def label(self) -> str:
        return f"{self.n_homo}h{self.n_lumo}l"

    @classmethod
    def full(cls, ints: MolecularIntegrals) -> ActiveSpaceSelection:
        n, nocc = ints.n_spatial_orbitals, -(-ints.n_electrons // 2)
        return cls(nocc, n - nocc, ints.n_electrons, tuple(range(n)), (), ())

    @classmethod
    def explicit(cls, ints: MolecularIntegrals, active: Sequence[int],
                 frozen: Sequence[int] | None = None) -> ActiveSpaceSelection:
        """Arbitrary orbital lists; frozen defaults to every occupied orbital not active."""
        n, nocc = ints.n_spatial_orbitals, ints.n_occupied
        active = tuple(sorted(active))
        if frozen is None:
            frozen = [i for i in range(nocc) if i not in active]
        frozen = tuple(sorted(frozen))
        if set(active) & set(frozen) or any(not 0 <= i < n for i in active + frozen):
            raise ValueError("active and frozen orbital lists overlap or are out of range")
        if any(i >= nocc for i in frozen):
            raise ValueError("frozen orbitals must be doubly occupied")
        n_act_e = ints.n_electrons - 2 * len(frozen)
        if not 0 <= n_act_e <= 2 * len(active):
            raise ValueError(f"{n_act_e} active electrons do not fit {len(active)} active orbitals")
        discarded = tuple(i for i in range(n) if i not in active and i not in frozen)
        n_homo = sum(1 for i in active if i < nocc)
        return cls(n_homo, len(active) - n_homo, n_act_e, active, frozen, discarded)


def select_active_space(ints: MolecularIntegrals, n_homo: int, n_lumo: int) -> ActiveSpaceSelection:
    """Window of the ``n_homo`` highest occupied and ``n_lumo`` lowest virtual orbitals.

    Orbitals are assumed to be in ascending energy order, so ties resolve to
    the lower index.
    """
    if ints.n_electrons % 2:
        raise ValueError("HOMO/LUMO windows need a closed-shell reference")
    nocc, n = ints.n_occupied, ints.n_spatial_orbitals
    if n_homo < 1 or n_lumo < 0:
        raise ValueError("window needs at least one occupied orbital")
    if n_homo > nocc:
        raise ValueError(f"{n_homo} HOMOs requested but only {nocc} occupied orbitals")
    if n_lumo > n - nocc:
        raise ValueError(f"{n_lumo} LUMOs requested but only {n - nocc} virtual orbitals")
    return ActiveSpaceSelection(
        n_homo,
        n_lumo,
        2 * n_homo,
        tuple(range(nocc - n_homo, nocc + n_lumo)),
        tuple(range(nocc - n_homo)),
        tuple(range(nocc + n_lumo, n)),
    )


def active_space_integrals(ints: MolecularIntegrals, sel: ActiveSpaceSelection) -> MolecularIntegrals:
    """Embed frozen orbitals at mean-field level.

    Returns integrals over the active orbitals whose ``core_energy`` is the
    core shift (nuclear repulsion plus frozen-orbital energy) and whose
    one-body part carries the frozen-orbital Coulomb and exchange field.
    """
    h, g = ints.one_body, ints.two_body
    act = np.array(sel.active_spatial_indices, dtype=int)
    fro = np.array(sel.frozen_occupied_indices, dtype=int)
    h_eff = h[np.ix_(act, act)].copy()
    core = ints.core_energy
    if len(fro):
        h_eff += 2.0 * np.einsum("tuii->tu", g[np.ix_(act, act, fro, fro)])
        h_eff -= np.einsum("tiiu->tu", g[np.ix_(act, fro, fro, act)])
        gf = g[np.ix_(fro, fro, fro, fro)]
        core += 2.0 * h[fro, fro].sum() + 2.0 * np.einsum("iijj->", gf) - np.einsum("ijji->", gf)
    h_eff[np.abs(h_eff) < ints.threshold] = 0.0
    g_act = g[np.ix_(act, act, act, act)]
    spin = ints.spin_2ms if len(act) == ints.n_spatial_orbitals else 0
    return MolecularIntegrals(len(act), sel.n_active_electrons, spin, float(core), h_eff, g_act,
                              f"{ints.source_label}[{sel.label}]", ints.threshold)


def apply_active_space(
    ints: MolecularIntegrals, sel: ActiveSpaceSelection
) -> tuple[FermionOperator, float]:
    """Active-space Hamiltonian (no constant term) and its core shift.

    Total energies are the operator's eigenvalues plus ``core_shift``.
    """
    active = active_space_integrals(ints, sel)
    op = build_hamiltonian(active).without_constant()
    return op, active.core_energy
