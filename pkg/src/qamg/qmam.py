"""Three-message games: fidelity, the one-coin protocol, and prover optimization.

Registers follow the interactive-proof convention: the verifier's k work
qubits come first (output qubit on top), then the m message qubits, then the
prover's private qubits.  The one-coin game sends the work register as the
prover's first message; heads replays the verifier's second transformation
and checks the output qubit, tails replays the inverse of the first and
checks that the work register returns to zero.

Prover optimization is a see-saw: the state step and the per-coin unitary
step each solve their subproblem exactly, so iterate values are monotone
lower bounds on the true optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .amplification import as_fraction
from .circuits import Circuit, to_unitary
from .spectra import eig_hermitian

DIRECT_OPT_QUBIT_CAP = 6


# --- fidelity ---


def _check_density(rho: np.ndarray, name: str, atol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be square, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > atol:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-6:
        raise ValueError(f"{name} has trace {np.trace(rho)}, expected 1")
    return rho


def _sqrt_psd(mat: np.ndarray, atol: float = 1e-8) -> np.ndarray:
    decomp = eig_hermitian(mat)
    vals = decomp.eigenvalues
    if vals.size and vals[-1] < -atol:
        raise ValueError(f"matrix has negative eigenvalue {vals[-1]}")
    roots = np.sqrt(np.clip(vals, 0.0, None))
    return (decomp.vectors * roots) @ decomp.vectors.conj().T


def fidelity(rho: np.ndarray, xi: np.ndarray) -> float:
    """F(rho, xi) = tr sqrt(sqrt(rho) xi sqrt(rho)), clamped to [0, 1]."""
    rho = _check_density(rho, "rho")
    xi = _check_density(xi, "xi")
    if rho.shape != xi.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {xi.shape}")
    root = _sqrt_psd(rho)
    inner = root @ xi @ root
    vals = eig_hermitian(inner).eigenvalues
    if vals.size and vals[-1] < -1e-8:
        raise ValueError(f"conjugated product has negative eigenvalue {vals[-1]}")
    f = float(np.sqrt(np.clip(vals, 0.0, None)).sum())
    return min(1.0, max(0.0, f))


def fidelity_sum_gap(rho: np.ndarray, sigma: np.ndarray, xi: np.ndarray) -> float:
    """1 + F(rho,xi) - F(rho,sigma)^2 - F(sigma,xi)^2; nonnegative up to rounding."""
    return 1.0 + fidelity(rho, xi) - fidelity(rho, sigma) ** 2 - fidelity(sigma, xi) ** 2


def purify(rho: np.ndarray) -> np.ndarray:
    """Canonical purification on (system, mirror); mirror dim equals system dim."""
    rho = _check_density(rho, "rho")
    decomp = eig_hermitian(rho)
    roots = np.sqrt(np.clip(decomp.eigenvalues, 0.0, None))
    return (decomp.vectors * roots).ravel()


# --- qubit permutations ---


def permute_qubits_vec(vec: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Reorder qubits so new position i holds original qubit perm[i]."""
    n = len(perm)
    return np.asarray(vec).reshape([2] * n).transpose(perm).reshape(-1)


def permute_qubits_op(op: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    n = len(perm)
    axes = list(perm) + [n + p for p in perm]
    return np.asarray(op).reshape([2] * (2 * n)).transpose(axes).reshape(1 << n, 1 << n)


def _interleave_blocks_perm(copies: int, sizes: Sequence[int]) -> list[int]:
    """Map (blockwise per copy) qubit order to (grouped by block kind) order."""
    block = sum(sizes)
    offsets = []
    acc = 0
    for sz in sizes:
        offsets.append(acc)
        acc += sz
    perm = []
    for kind, sz in enumerate(sizes):
        for c in range(copies):
            base = c * block + offsets[kind]
            perm.extend(range(base, base + sz))
    return perm


# --- register-block application helpers ---


def _apply_first(vec: np.ndarray, op: np.ndarray, first_dim: int) -> np.ndarray:
    """Apply op to the leading qubits (row block of size first_dim)."""
    return (op @ vec.reshape(first_dim, -1)).reshape(-1)


def _apply_last(vec: np.ndarray, op: np.ndarray, first_dim: int) -> np.ndarray:
    """Apply op to the trailing qubits, leaving the leading block alone."""
    return (vec.reshape(first_dim, -1) @ op.T).reshape(-1)


# --- instances ---


@dataclass(frozen=True)
class QipInstance:
    """Three-message verifier: two unitary circuits on the (work, message) pair."""

    v1: Circuit
    v2: Circuit
    k: int
    m: int
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if self.k < 1 or self.m < 0:
            raise ValueError("need at least one work qubit and nonnegative message qubits")
        if self.v1.width != self.k + self.m or self.v2.width != self.k + self.m:
            raise ValueError(
                f"circuit widths {self.v1.width},{self.v2.width} != k+m = {self.k + self.m}"
            )
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must be in [0,1], got {self.epsilon}")


def soundness_bound(base: QipInstance) -> float:
    """1/2 + sqrt(epsilon)/2: the one-coin game's soundness guarantee."""
    return 0.5 + math.sqrt(float(base.epsilon)) / 2.0


@dataclass(frozen=True)
class QmamInstance:
    """One-coin game built on a three-message verifier; m1 = k, m2 = m."""

    base: QipInstance
    m1: int
    m2: int
    s: int = 1

    @property
    def l(self) -> int:
        # enough private qubits to purify the (work, message) pair
        return self.m1 + self.m2

    def lambda_tails(self) -> np.ndarray:
        """Test operator for tails: undo the first transformation, check zeros."""
        u1 = to_unitary(self.base.v1)
        idx = np.arange(u1.shape[0])
        delta = (idx >> self.base.m == 0).astype(np.complex128)
        return (u1 * delta) @ u1.conj().T

    def lambda_heads(self) -> np.ndarray:
        """Test operator for heads: finish the verification, check the output."""
        u2 = to_unitary(self.base.v2)
        n = self.base.k + self.base.m
        idx = np.arange(u2.shape[0])
        pi = ((idx >> (n - 1)) & 1 == 1).astype(np.complex128)
        return (u2.conj().T * pi) @ u2


def build_qmam(base: QipInstance) -> QmamInstance:
    return QmamInstance(base=base, m1=base.k, m2=base.m)


@dataclass(frozen=True)
class MerlinStrategy:
    """A prepared state plus a unitary response for each coin value."""

    psi: np.ndarray
    u_by_coin: dict

    def __post_init__(self):
        if abs(np.linalg.norm(self.psi) - 1.0) > 1e-9:
            raise ValueError("strategy state must be normalized")
        for y, u in self.u_by_coin.items():
            gap = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
            if gap > 1e-9:
                raise ValueError(f"coin {y!r}: response deviates from unitary by {gap}")


@dataclass(frozen=True)
class CheatGame:
    """Coin-averaged projective tests on (sent registers) x (kept register)."""

    k: int  # first-message qubits, tested side
    m: int  # second-message qubits
    l: int  # prover-kept qubits
    lambdas: dict  # coin -> projector on the k+m sent qubits

    @property
    def total_qubits(self) -> int:
        return self.k + self.m + self.l

    def coins(self) -> list:
        return sorted(self.lambdas)


def cheat_game(inst: QmamInstance) -> CheatGame:
    return CheatGame(
        k=inst.m1,
        m=inst.m2,
        l=inst.l,
        lambdas={"0": inst.lambda_tails(), "1": inst.lambda_heads()},
    )


def strategy_value(game: CheatGame, psi: np.ndarray, u_by_coin: dict) -> float:
    """Coin-averaged acceptance of a concrete strategy."""
    dim_first = 1 << game.k
    dim_front = 1 << (game.k + game.m)
    total = 0.0
    for y in game.coins():
        moved = _apply_last(psi, u_by_coin[y], dim_first)
        tested = _apply_first(moved, game.lambdas[y], dim_front)
        total += float(np.real(np.vdot(moved, tested)))
    return total / len(game.lambdas)


@dataclass(frozen=True)
class OptimizationResult:
    value: float
    strategy: MerlinStrategy
    converged: bool
    iterations: int


def _polar_align(c: np.ndarray) -> np.ndarray:
    """Unitary U maximizing Re tr(U C)."""
    v, _, wh = np.linalg.svd(c)
    return (v @ wh).conj().T


def _seesaw_cheat(
    game: CheatGame,
    psi0: np.ndarray,
    u0: dict,
    tol: float,
    max_iters: int,
) -> tuple[float, np.ndarray, dict, bool, int]:
    coins = game.coins()
    weight = 1.0 / len(coins)
    dim_first = 1 << game.k
    dim_front = 1 << (game.k + game.m)
    psi = psi0 / np.linalg.norm(psi0)
    us = dict(u0)
    value = -1.0
    for it in range(1, max_iters + 1):
        # target step: project each moved state onto its accepting subspace
        targets = {}
        new_value = 0.0
        for y in coins:
            moved = _apply_last(psi, us[y], dim_first)
            projected = _apply_first(moved, game.lambdas[y], dim_front)
            new_value += weight * float(np.real(np.vdot(moved, projected)))
            norm = np.linalg.norm(projected)
            targets[y] = projected / norm if norm > 1e-150 else None
        if new_value < value - 1e-9:
            raise AssertionError(f"see-saw value decreased: {value} -> {new_value}")
        if new_value <= value + tol:
            return max(new_value, value), psi, us, True, it
        value = new_value
        # unitary step: best alignment of the state with each target
        psi_mat = psi.reshape(dim_first, -1)
        for y in coins:
            if targets[y] is None:
                continue
            t_mat = targets[y].reshape(dim_first, -1)
            us[y] = _polar_align((t_mat.conj().T @ psi_mat).T)
        # state step: top eigenvector of the rank-|coins| induced operator
        back = [
            _apply_last(targets[y], us[y].conj().T, dim_first)
            for y in coins
            if targets[y] is not None
        ]
        if not back:
            return value, psi, us, True, it
        b = np.stack(back, axis=1) * math.sqrt(weight)
        gram = b.conj().T @ b
        coeff = eig_hermitian(gram).vectors[:, 0]
        candidate = b @ coeff
        norm = np.linalg.norm(candidate)
        if norm > 1e-150:
            psi = candidate / norm
    return value, psi, us, False, max_iters


def optimize_cheating(
    target,
    tol: float = 1e-8,
    max_iters: int = 500,
    restarts: int = 16,
    seed: int = 0,
    seeds: Optional[Sequence[MerlinStrategy]] = None,
) -> OptimizationResult:
    """Best prover found by multi-restart see-saw; a certified lower bound.

    Accepts a one-coin instance or a prepared CheatGame.  Each restart
    alternates exact subproblem solutions (target projection, polar unitary
    alignment, small-Gram state update), so per-restart values never
    decrease; the result reports the best restart.
    """
    game = cheat_game(target) if isinstance(target, QmamInstance) else target
    coins = game.coins()
    dim = 1 << game.total_qubits
    du = 1 << (game.m + game.l)
    rng = np.random.Generator(np.random.Philox(key=seed))
    chains: list[tuple[np.ndarray, dict]] = []
    for _ in range(max(1, restarts)):
        psi0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        chains.append((psi0, {y: np.eye(du, dtype=np.complex128) for y in coins}))
    if seeds:
        for st in seeds:
            chains.append((np.asarray(st.psi, dtype=np.complex128), dict(st.u_by_coin)))
    best = None
    for psi0, u0 in chains:
        result = _seesaw_cheat(game, psi0, u0, tol, max_iters)
        if best is None or result[0] > best[0]:
            best = result
    value, psi, us, converged, iters = best
    return OptimizationResult(
        value=value,
        strategy=MerlinStrategy(psi=psi, u_by_coin=us),
        converged=converged,
        iterations=iters,
    )


def translate_honest(
    inst: QmamInstance,
    psi_base: Optional[np.ndarray] = None,
    u: Optional[np.ndarray] = None,
) -> MerlinStrategy:
    """The honest prover lifted into the one-coin game.

    The prover zeroes the work qubits next to its own state, applies the
    verifier's first transformation, and later answers heads with the base
    response and tails with no action.
    """
    k, m, l = inst.m1, inst.m2, inst.l
    du = 1 << (m + l)
    if psi_base is None:
        psi_base = np.zeros(du, dtype=np.complex128)
        psi_base[0] = 1.0
    if u is None:
        u = np.eye(du, dtype=np.complex128)
    psi_base = np.asarray(psi_base, dtype=np.complex128)
    u = np.asarray(u, dtype=np.complex128)
    if psi_base.shape != (du,) or u.shape != (du, du):
        raise ValueError("base prover arities do not match the game")
    start = np.zeros(1 << (k + m + l), dtype=np.complex128)
    start.reshape(1 << k, du)[0, :] = psi_base
    prepared = _apply_first(start, to_unitary(inst.base.v1), 1 << (k + m))
    return MerlinStrategy(
        psi=prepared,
        u_by_coin={"0": np.eye(du, dtype=np.complex128), "1": u},
    )


def honest_value(inst: QmamInstance, prover: Optional[tuple] = None) -> float:
    """Value of the lifted honest strategy (defaults to a trivial base prover)."""
    psi_base, u = prover if prover is not None else (None, None)
    strategy = translate_honest(inst, psi_base, u)
    return strategy_value(cheat_game(inst), strategy.psi, strategy.u_by_coin)


# --- the two characterizations of three-message max acceptance ---


def _seesaw_direct(
    base: QipInstance, psi0: np.ndarray, tol: float, max_iters: int
) -> tuple[float, np.ndarray, np.ndarray, bool, int]:
    """max ||project(V2 (I (x) U) V1 |0..0, psi>)||^2 over psi and U."""
    k, m = base.k, base.m
    l = k + m
    dim_vm = 1 << (k + m)
    u1 = to_unitary(base.v1)
    u2 = to_unitary(base.v2)
    n_tot = k + m + l
    idx = np.arange(1 << n_tot)
    pi_mask = (idx >> (n_tot - 1)) & 1 == 1
    du = 1 << (m + l)
    psi = psi0 / np.linalg.norm(psi0)
    u = np.eye(du, dtype=np.complex128)
    value = -1.0
    for it in range(1, max_iters + 1):
        start = np.zeros(1 << n_tot, dtype=np.complex128)
        start.reshape(1 << k, du)[0, :] = psi
        w = _apply_first(start, u1, dim_vm)
        moved = _apply_last(w, u, 1 << k)
        final = _apply_first(moved, u2, dim_vm)
        projected = np.where(pi_mask, final, 0.0)
        new_value = float(np.real(np.vdot(final, projected)))
        if new_value <= value + tol:
            return max(new_value, value), psi, u, True, it
        value = new_value
        norm_t = np.linalg.norm(projected)
        if norm_t < 1e-150:
            # dead end: nothing reaches the accepting subspace from here
            return value, psi, u, True, it
        t = projected / norm_t
        # unitary step against the fixed prepared state
        alpha = _apply_first(t, u2.conj().T, dim_vm)
        c = (alpha.reshape(1 << k, du).conj().T @ w.reshape(1 << k, du)).T
        u = _polar_align(c)
        # state step: pull the target back and read off the zeroed-work block
        back = _apply_last(alpha, u.conj().T, 1 << k)
        back = _apply_first(back, u1.conj().T, dim_vm)
        block = back.reshape(1 << k, du)[0, :]
        norm = np.linalg.norm(block)
        if norm > 1e-150:
            psi = block / norm
    return value, psi, u, False, max_iters


def _range_projector(op: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    decomp = eig_hermitian(op)
    keep = decomp.eigenvalues > atol
    v = decomp.vectors[:, keep]
    return v @ v.conj().T


def _seesaw_overlap(
    proj_a: np.ndarray,
    proj_b: np.ndarray,
    dim_v: int,
    dim_vm: int,
    x0: np.ndarray,
    y0: np.ndarray,
    tol: float,
    max_iters: int,
    w0: Optional[np.ndarray] = None,
    pin_a: bool = False,
) -> float:
    """max |<u|(I (x) W)|w>|^2 with u, w confined to lifted front subspaces.

    proj_a and proj_b act on the leading dim_vm block; W acts on everything
    after the leading dim_v block.  With pin_a the u side stays fixed at x0.
    """
    u_vec = x0 if pin_a else _apply_first(x0, proj_a, dim_vm)
    w_vec = _apply_first(y0, proj_b, dim_vm)
    nu, nw = np.linalg.norm(u_vec), np.linalg.norm(w_vec)
    if nu < 1e-12 or nw < 1e-12:
        return 0.0
    u_vec, w_vec = u_vec / nu, w_vec / nw
    dw = x0.size // dim_v
    w_op = np.eye(dw, dtype=np.complex128) if w0 is None else w0
    value = -1.0
    for _ in range(max_iters):
        moved = _apply_last(w_vec, w_op, dim_v)
        new_value = float(abs(np.vdot(u_vec, moved)) ** 2)
        if new_value <= value + tol:
            break
        value = new_value
        if not pin_a:
            u_new = _apply_first(moved, proj_a, dim_vm)
            norm = np.linalg.norm(u_new)
            if norm > 1e-150:
                u_vec = u_new / norm
        back = _apply_last(u_vec, w_op.conj().T, dim_v)
        w_new = _apply_first(back, proj_b, dim_vm)
        norm = np.linalg.norm(w_new)
        if norm > 1e-150:
            w_vec = w_new / norm
        c = (u_vec.reshape(dim_v, dw).conj().T @ w_vec.reshape(dim_v, dw)).T
        w_op = _polar_align(c)
    return max(value, 0.0)


def acceptance_tests(base: QipInstance) -> tuple[np.ndarray, np.ndarray]:
    """(tails, heads) test operators on the (work, message) register."""
    inst = build_qmam(base)
    return inst.lambda_tails(), inst.lambda_heads()


def max_accept_two_ways(
    base: QipInstance,
    tol: float = 1e-10,
    max_iters: int = 2000,
    restarts: int = 12,
    seed: int = 0,
) -> tuple[float, float]:
    """Direct prover optimization vs the reduced-state fidelity form.

    Both are see-saw lower bounds of the same maximum acceptance
    probability.  The fidelity form is seeded from the direct winner (whose
    prepared state lives in the lifted tails subspace), so the two agree at
    convergence instead of stalling in different local optima.
    """
    if base.k + base.m > DIRECT_OPT_QUBIT_CAP:
        raise ValueError(f"dense optimization capped at {DIRECT_OPT_QUBIT_CAP} qubits")
    k, m = base.k, base.m
    l = k + m
    dim_vm = 1 << (k + m)
    rng = np.random.Generator(np.random.Philox(key=seed))
    du = 1 << (m + l)
    direct = -1.0
    best_direct = None
    for _ in range(max(1, restarts)):
        psi0 = rng.normal(size=du) + 1j * rng.normal(size=du)
        val, psi, u, _, _ = _seesaw_direct(base, psi0, tol, max_iters)
        if val > direct:
            direct, best_direct = val, (psi, u)

    lam_a, lam_b = acceptance_tests(base)
    proj_a = _range_projector(lam_a)  # tails side: reachable first messages
    proj_b = _range_projector(lam_b)
    dim = 1 << (k + m + l)
    fidelity_form = -1.0
    starts = []
    if best_direct is not None:
        psi, u = best_direct
        start = np.zeros(dim, dtype=np.complex128)
        start.reshape(1 << k, du)[0, :] = psi
        x0 = _apply_first(start, to_unitary(base.v1), dim_vm)
        y0 = _apply_last(x0, u, 1 << k)
        starts.append((x0, y0, u.conj().T))
    for _ in range(max(1, restarts)):
        x0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        y0 = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        starts.append((x0, y0, None))
    for x0, y0, w0 in starts:
        val = _seesaw_overlap(proj_a, proj_b, 1 << k, dim_vm, x0, y0, tol, max_iters, w0=w0)
        fidelity_form = max(fidelity_form, val)
    return direct, fidelity_form


def uhlmann_bound_check(
    joint: np.ndarray,
    lambda1: np.ndarray,
    dim_v: int,
    dim_m: int,
    tol: float = 1e-10,
    max_iters: int = 2000,
    restarts: int = 8,
    seed: int = 0,
) -> tuple[float, float]:
    """Measured outcome-1 probability vs the reduced-state fidelity bound.

    The bound's see-saw starts from the projected joint purification, whose
    overlap already equals the measured probability, so the reported bound
    never undercuts the measurement.
    """
    joint = _check_density(joint, "joint")
    dim = dim_v * dim_m
    if joint.shape != (dim, dim) or lambda1.shape != (dim, dim):
        raise ValueError("joint and projector must act on dim_v * dim_m")
    if dim_v & (dim_v - 1) or dim_m & (dim_m - 1):
        raise ValueError("dims must be powers of two")
    measured = float(np.real(np.trace(lambda1 @ joint)))
    j_vec = purify(joint)  # on (work+message, mirror)
    rng = np.random.Generator(np.random.Philox(key=seed))
    starts = [_apply_first(j_vec, lambda1, dim)]
    for _ in range(max(0, restarts - 1)):
        starts.append(rng.normal(size=dim * dim) + 1j * rng.normal(size=dim * dim))
    bound = 0.0
    for y0 in starts:
        val = _seesaw_overlap(
            np.eye(dim), lambda1, dim_v, dim, j_vec, y0, tol, max_iters, pin_a=True
        )
        bound = max(bound, val)
    if measured > bound + 1e-6:
        raise AssertionError(f"measured {measured} exceeds fidelity bound {bound}")
    return measured, bound


# --- parallel repetition ---


def repeated_cheat_game(inst: QmamInstance, copies: int) -> CheatGame:
    """AND-repetition: joint coins, tensored tests, registers grouped by kind."""
    if copies < 1:
        raise ValueError("need at least one copy")
    k, m = inst.m1, inst.m2
    perm = _interleave_blocks_perm(copies, [k, m])
    single = {"0": inst.lambda_tails(), "1": inst.lambda_heads()}
    lambdas = {}
    for joint in range(1 << copies):
        coin = format(joint, f"0{copies}b")
        op = np.eye(1)
        for c in coin:
            op = np.kron(op, single[c])
        lambdas[coin] = permute_qubits_op(op, perm)
    return CheatGame(k=copies * k, m=copies * m, l=copies * inst.l, lambdas=lambdas)


def product_strategy(inst: QmamInstance, single: MerlinStrategy, copies: int) -> MerlinStrategy:
    """Play one strategy independently in every repetition."""
    k, m, l = inst.m1, inst.m2, inst.l
    psi = np.array([1.0 + 0j])
    for _ in range(copies):
        psi = np.kron(psi, single.psi)
    psi = permute_qubits_vec(psi, _interleave_blocks_perm(copies, [k, m, l]))
    u_perm = _interleave_blocks_perm(copies, [m, l])
    u_by_coin = {}
    for joint in range(1 << copies):
        coin = format(joint, f"0{copies}b")
        u = np.eye(1, dtype=np.complex128)
        for c in coin:
            u = np.kron(u, single.u_by_coin[c])
        u_by_coin[coin] = permute_qubits_op(u, u_perm)
    return MerlinStrategy(psi=psi, u_by_coin=u_by_coin)


def repeated_honest_value(
    inst: QmamInstance, copies: int, prover: Optional[tuple] = None
) -> float:
    """Honest product play of the repeated game."""
    game = repeated_cheat_game(inst, copies)
    honest = translate_honest(inst, *(prover or (None, None)))
    strategy = product_strategy(inst, honest, copies)
    return strategy_value(game, strategy.psi, strategy.u_by_coin)
