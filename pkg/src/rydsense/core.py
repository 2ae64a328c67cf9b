"""Ladder-system Hamiltonian, relaxation superoperator and steady-state solver.

All frequencies and rates are angular (rad/s); the Hamiltonian is expressed in
units of hbar, so ``H`` has units of rad/s as well.

Density matrices are vectorized row-major (``rho.reshape(-1)``), for which
``vec(A @ rho @ B) == kron(A, B.T) @ vec(rho)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.constants import epsilon_0, hbar

from .errors import DegenerateSteadyStateError, StructureError, ValidationError

DEPHASING_TERMS = ("collisional", "laser", "magnetic", "rydberg_rydberg")

# Batched solves are chunked so memory stays bounded for 5-level systems.
_CHUNK = 4096


@dataclass(frozen=True)
class Level:
    """One atomic level.

    ``population_decay_out`` is the total population decay rate leaving the
    level. Each ``(target, rate)`` in ``decay_branches`` routes part of it to
    another level; whatever is left over is routed to level 0.
    """

    label: str
    population_decay_out: float = 0.0
    decay_branches: tuple = ()
    rydberg: bool = False

    def __post_init__(self):
        branches = tuple((int(t), float(r)) for t, r in self.decay_branches)
        object.__setattr__(self, "decay_branches", branches)
        if self.population_decay_out < 0 or any(r < 0 for _, r in branches):
            raise ValidationError(f"level {self.label!r}: decay rates must be >= 0")
        total = sum(r for _, r in branches)
        if total > self.population_decay_out * (1 + 1e-12) + 1e-300:
            raise ValidationError(
                f"level {self.label!r}: branch rates ({total:g}) exceed "
                f"population_decay_out ({self.population_decay_out:g})"
            )


@dataclass(frozen=True)
class Coupling:
    """A coherent drive between two levels of the ladder.

    ``wavevector`` is signed (rad/m); its sign encodes the propagation direction
    relative to the probe. RF couplings use 0.
    """

    lower: int
    upper: int
    rabi: float
    detuning: float = 0.0
    wavevector: float = 0.0
    kind: str = "optical"

    def __post_init__(self):
        if self.lower >= self.upper:
            raise StructureError(f"coupling needs lower < upper, got {self.lower}, {self.upper}")
        if self.rabi < 0:
            raise ValidationError("Rabi frequency must be >= 0")
        if self.kind not in ("optical", "rf"):
            raise ValidationError(f"unknown coupling kind {self.kind!r}")


@dataclass(frozen=True)
class LadderScheme:
    levels: tuple
    couplings: tuple
    probe_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        _check_ladder(self)

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def probe(self) -> Coupling:
        return self.couplings[self.probe_index]

    @property
    def rydberg_levels(self) -> tuple:
        return tuple(i for i, lvl in enumerate(self.levels) if lvl.rydberg)

    def with_coupling(self, index: int, **changes) -> "LadderScheme":
        """Return a copy with fields of coupling ``index`` replaced."""
        couplings = list(self.couplings)
        couplings[index] = replace(couplings[index], **changes)
        return replace(self, couplings=tuple(couplings))

    def coupling_index(self, lower: int, upper: int) -> int:
        for i, c in enumerate(self.couplings):
            if (c.lower, c.upper) == (lower, upper):
                return i
        raise KeyError((lower, upper))


def _check_ladder(scheme: LadderScheme) -> None:
    n = len(scheme.levels)
    if n < 2:
        raise StructureError("a ladder needs at least two levels")
    if len(scheme.couplings) != n - 1:
        raise StructureError(f"{n} levels need {n - 1} couplings, got {len(scheme.couplings)}")
    degree = [0] * n
    for c in scheme.couplings:
        if not (0 <= c.lower < n and 0 <= c.upper < n):
            raise StructureError(f"coupling ({c.lower}, {c.upper}) references a missing level")
        degree[c.lower] += 1
        degree[c.upper] += 1
    if max(degree) > 2:
        raise StructureError("a level appears in more than two couplings")
    if len(_traversal(scheme)) != n:
        raise StructureError("coupling graph is not connected")
    if not 0 <= scheme.probe_index < len(scheme.couplings):
        raise StructureError(f"probe_index {scheme.probe_index} out of range")


def _traversal(scheme: LadderScheme):
    """Breadth-first walk from level 0: list of (coupling index, from, to)."""
    adjacency = {i: [] for i in range(len(scheme.levels))}
    for ci, c in enumerate(scheme.couplings):
        adjacency[c.lower].append((ci, c.upper))
        adjacency[c.upper].append((ci, c.lower))
    seen = {0}
    order = [(None, None, 0)]
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for ci, j in adjacency[i]:
            if j not in seen:
                seen.add(j)
                order.append((ci, i, j))
                queue.append(j)
    return order


def cumulative_coefficients(scheme: LadderScheme, weights: Sequence[float]) -> np.ndarray:
    """Propagate per-coupling quantities into per-level cumulative sums.

    Level 0 gets 0; crossing coupling ``c`` upward adds ``weights[c]``,
    crossing it downward subtracts it.
    """
    out = np.zeros(scheme.n)
    for ci, i, j in _traversal(scheme)[1:]:
        c = scheme.couplings[ci]
        sign = 1.0 if (i, j) == (c.lower, c.upper) else -1.0
        out[j] = out[i] + sign * weights[ci]
    return out


def detuning_diagonal(scheme: LadderScheme, velocity=0.0) -> np.ndarray:
    """Rotating-frame diagonal of H for one or many velocities.

    Each optical coupling contributes ``detuning - wavevector * velocity``.
    Returns shape ``(n,)`` for scalar velocity, else ``velocity.shape + (n,)``.
    """
    base = cumulative_coefficients(scheme, [c.detuning for c in scheme.couplings])
    doppler = cumulative_coefficients(scheme, [c.wavevector for c in scheme.couplings])
    v = np.asarray(velocity, dtype=float)
    return base - v[..., None] * doppler


def coupling_matrix(scheme: LadderScheme) -> np.ndarray:
    n = scheme.n
    H = np.zeros((n, n), dtype=complex)
    for c in scheme.couplings:
        H[c.lower, c.upper] = H[c.upper, c.lower] = -0.5 * c.rabi
    return H


def build_hamiltonian(scheme: LadderScheme, velocity: float = 0.0) -> np.ndarray:
    """Rotating-wave ladder Hamiltonian (rad/s) for atoms moving at ``velocity``."""
    H = coupling_matrix(scheme)
    H[np.diag_indices(scheme.n)] = detuning_diagonal(scheme, float(velocity))
    return H


@dataclass(frozen=True)
class DephasingBudget:
    """Experimental relaxation rates (rad/s).

    ``transit`` replaces atoms with fresh ground-state atoms: every excited
    population relaxes to level 0 and every coherence decays at this rate.
    The remaining terms are pure dephasing applied to the coherences listed in
    ``assignment``, a mapping ``(i, j) -> iterable of term names``. When
    ``assignment`` is None, :func:`default_assignment` is used.
    """

    transit: float = 0.0
    collisional: float = 0.0
    laser: float = 0.0
    magnetic: float = 0.0
    rydberg_rydberg: float = 0.0
    assignment: Mapping | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("transit",) + DEPHASING_TERMS:
            if getattr(self, name) < 0:
                raise ValidationError(f"dephasing rate {name} must be >= 0")
        if self.assignment is not None:
            for key, terms in self.assignment.items():
                unknown = set(terms) - set(DEPHASING_TERMS)
                if unknown:
                    raise ValidationError(f"unknown dephasing terms {sorted(unknown)} for {key}")

    def resolved_assignment(self, scheme: LadderScheme) -> dict:
        if self.assignment is None:
            return default_assignment(scheme)
        out = {}
        for (i, j), terms in self.assignment.items():
            out[(min(i, j), max(i, j))] = frozenset(terms)
        return out

    def coherence_rates(self, scheme: LadderScheme) -> np.ndarray:
        """Symmetric matrix of pure-dephasing rates added to each coherence."""
        gamma = np.zeros((scheme.n, scheme.n))
        for (i, j), terms in self.resolved_assignment(scheme).items():
            if i == j:
                continue
            rate = sum(getattr(self, t) for t in terms)
            gamma[i, j] = gamma[j, i] = rate
        return gamma


def default_assignment(scheme: LadderScheme) -> dict:
    """Which dephasing terms act on which coherence.

    Laser dephasing acts on every ground-state coherence (all excited levels
    are reached through the lasers and inherit their phase noise).
    Collisional, magnetic and Rydberg-Rydberg terms act on every coherence
    involving a Rydberg level. Both patterns are partitions of the level set,
    so the resulting dephasing map is completely positive.
    """
    rydberg = set(scheme.rydberg_levels)
    out = {}
    for i in range(scheme.n):
        for j in range(i + 1, scheme.n):
            terms = set()
            if i == 0:
                terms.add("laser")
            if i in rydberg or j in rydberg:
                terms.update(("collisional", "magnetic", "rydberg_rydberg"))
            if terms:
                out[(i, j)] = frozenset(terms)
    return out


def dissipator(C: np.ndarray) -> np.ndarray:
    """Superoperator of ``C rho C^+ - {C^+ C, rho}/2`` (row-major vec)."""
    n = C.shape[0]
    eye = np.eye(n)
    CdC = C.conj().T @ C
    return np.kron(C, C.conj()) - 0.5 * np.kron(CdC, eye) - 0.5 * np.kron(eye, CdC.T)


def collapse_operators(scheme: LadderScheme, budget: DephasingBudget | None = None) -> list:
    n = scheme.n
    ops = []

    def jump(target, source, rate):
        C = np.zeros((n, n))
        C[target, source] = np.sqrt(rate)
        return C

    for k, level in enumerate(scheme.levels):
        routed = 0.0
        for target, rate in level.decay_branches:
            if not 0 <= target < n or target == k:
                raise ValidationError(f"level {level.label!r}: invalid decay target {target}")
            if rate > 0:
                ops.append(jump(target, k, rate))
            routed += rate
        rest = level.population_decay_out - routed
        if k != 0 and rest > 1e-12 * max(level.population_decay_out, 1.0):
            ops.append(jump(0, k, rest))
    if budget is not None and budget.transit > 0:
        ops.extend(jump(0, k, budget.transit) for k in range(n))
    return ops


def build_relaxation(scheme: LadderScheme, budget: DephasingBudget | None = None) -> np.ndarray:
    """Relaxation superoperator ``L`` (n^2 x n^2) acting on row-major vec(rho)."""
    n = scheme.n
    L = np.zeros((n * n, n * n), dtype=complex)
    for C in collapse_operators(scheme, budget):
        L += dissipator(C)
    if budget is not None:
        gamma = budget.coherence_rates(scheme)
        idx = np.arange(n * n)
        L[idx, idx] -= gamma.reshape(-1)
    return L


def liouvillian(H: np.ndarray, L: np.ndarray) -> np.ndarray:
    n = H.shape[0]
    eye = np.eye(n)
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T)) + L


@dataclass(frozen=True)
class SteadyState:
    rho: np.ndarray

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real

    def coherence(self, upper: int, lower: int) -> complex:
        return complex(self.rho[upper, lower])

    def check(self, atol: float = 1e-10, positivity: float = 1e-9) -> None:
        """Raise AssertionError if the trace/Hermiticity/positivity invariants fail."""
        rho = self.rho
        assert abs(np.trace(rho) - 1) < atol, "trace"
        assert np.max(np.abs(rho - rho.conj().T)) < atol, "hermiticity"
        assert np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() > -positivity, "positivity"


def _trace_row(n: int) -> np.ndarray:
    row = np.zeros(n * n, dtype=complex)
    row[:: n + 1] = 1.0
    return row


def steady_state(H: np.ndarray, L: np.ndarray, rank_tol: float = 1e-12) -> SteadyState:
    """Solve ``-i[H, rho] + L rho = 0`` with ``trace(rho) = 1``.

    The dependent population equation for level 0 is replaced by the trace
    condition. The resulting matrix is singular exactly when the Liouvillian
    kernel is not one-dimensional.
    """
    n = H.shape[0]
    A = liouvillian(H, L)
    A[0] = _trace_row(n)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= rank_tol * s[0]:
        raise DegenerateSteadyStateError(
            f"steady state is not unique (smallest singular value {s[-1]:.3g} vs {s[0]:.3g})"
        )
    b = np.zeros(n * n, dtype=complex)
    b[0] = 1.0
    rho = np.linalg.solve(A, b).reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    return SteadyState(rho / np.trace(rho).real)


def solve_batch(H_static: np.ndarray, L: np.ndarray, diagonals: np.ndarray) -> np.ndarray:
    """Steady states for many diagonal (detuning) configurations at once.

    Parameters
    ----------
    H_static : (n, n) off-diagonal part of the Hamiltonian.
    L : (n^2, n^2) relaxation superoperator.
    diagonals : (..., n) per-point Hamiltonian diagonals.

    Returns
    -------
    (..., n, n) density matrices. Each point is solved independently, so
    results do not depend on how the batch is chunked.
    """
    n = H_static.shape[0]
    diagonals = np.asarray(diagonals, dtype=float)
    shape = diagonals.shape[:-1]
    flat = diagonals.reshape(-1, n)
    static = liouvillian(H_static, L)
    trace_row = _trace_row(n)
    idx = np.arange(n * n)
    b = np.zeros(n * n, dtype=complex)
    b[0] = 1.0

    if len(flat):
        # Kernel dimension is structural; checking one point is enough.
        first = static.copy()
        first[idx, idx] += -1j * (flat[0][:, None] - flat[0][None, :]).reshape(-1)
        first[0] = trace_row
        s = np.linalg.svd(first, compute_uv=False)
        if s[-1] <= 1e-12 * s[0]:
            raise DegenerateSteadyStateError("steady state is not unique")

    out = np.empty((len(flat), n, n), dtype=complex)
    for start in range(0, len(flat), _CHUNK):
        d = flat[start:start + _CHUNK]
        A = np.broadcast_to(static, (len(d),) + static.shape).copy()
        A[:, idx, idx] += -1j * (d[:, :, None] - d[:, None, :]).reshape(len(d), -1)
        A[:, 0, :] = trace_row
        try:
            x = np.linalg.solve(A, np.broadcast_to(b, (len(d), n * n))[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise DegenerateSteadyStateError(str(exc)) from exc
        if not np.all(np.isfinite(x)):
            raise DegenerateSteadyStateError("non-finite steady state")
        rho = x.reshape(-1, n, n)
        out[start:start + len(d)] = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
    return out.reshape(shape + (n, n))


def susceptibility(rho_probe, scheme: LadderScheme, density: float, probe_dipole: float):
    """Linear probe susceptibility from the probe coherence ``rho[upper, lower]``."""
    rabi = scheme.probe.rabi
    if rabi <= 0:
        raise ValidationError("probe Rabi frequency must be > 0 to define a susceptibility")
    if density < 0:
        raise ValidationError("density must be >= 0")
    return 2 * density * probe_dipole**2 / (epsilon_0 * hbar * rabi) * np.asarray(rho_probe)


def probe_absorption(state, scheme: LadderScheme, density: float, probe_dipole: float):
    """Intensity absorption coefficient (1/m) of the probe.

    ``state`` may be a :class:`SteadyState` or a complex probe coherence
    (array) ``rho[upper, lower]``.
    """
    k = abs(scheme.probe.wavevector)
    if k == 0:
        raise ValidationError("probe coupling needs a nonzero wavevector")
    if isinstance(state, SteadyState):
        p = scheme.probe
        rho_probe = state.coherence(p.upper, p.lower)
    else:
        rho_probe = state
    chi = susceptibility(rho_probe, scheme, density, probe_dipole)
    return k * np.imag(chi)


def probe_phase_per_length(rho_probe, scheme: LadderScheme, density: float, probe_dipole: float):
    """Field phase accumulated per metre (rad/m) from the dispersive part of chi."""
    k = abs(scheme.probe.wavevector)
    chi = susceptibility(rho_probe, scheme, density, probe_dipole)
    return 0.5 * k * np.real(chi)
