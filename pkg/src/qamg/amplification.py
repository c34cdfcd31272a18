"""Witness-preserving amplification and exact counting certificates.

The alternating-measurement procedure replays a verifier forward and backward
against the same witness, measuring the output qubit after each forward pass
and the workspace-restored projector after each backward pass.  The agreement
pattern of consecutive outcomes is binomially distributed with the witness's
acceptance probability as bias, so error shrinks exponentially in the number
of events while the witness register never grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .circuits import (
    Circuit,
    StateVector,
    apply_circuit,
    dagger,
    measure_projector,
    output_qubit_projector,
    to_unitary,
    workspace_zero_projector,
)
from .exact import ExactScalar
from .spectra import acceptance_operator, acceptance_operator_exact

ENUMERATE_EVENT_CAP = 20
_CERT_EXPONENT_CAP = 100_000

Rational = Union[Fraction, int, str, float]


def as_fraction(x: Rational) -> Fraction:
    """Exact threshold values; floats convert by their binary value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


@dataclass(frozen=True)
class QmaInstance:
    """Single-message game: verifier on m witness qubits plus k work qubits."""

    verifier: Circuit
    m: int
    k: int
    a: Fraction
    b: Fraction
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "a", as_fraction(self.a))
        object.__setattr__(self, "b", as_fraction(self.b))
        if self.m < 0 or self.k < 0 or self.verifier.width != self.m + self.k:
            raise ValueError(
                f"verifier width {self.verifier.width} != m+k = {self.m}+{self.k}"
            )
        if not (0 <= self.b < self.a <= 1):
            raise ValueError(f"thresholds need 0 <= b < a <= 1, got a={self.a}, b={self.b}")
        if self.label not in (None, "yes", "no"):
            raise ValueError(f"label must be yes/no/None, got {self.label!r}")

    @property
    def gap_q(self) -> int:
        """Smallest integer q with 1/q <= a - b."""
        return math.ceil(1 / (self.a - self.b))

    def q_operator(self) -> np.ndarray:
        return acceptance_operator(self.verifier, self.m, self.k)

    def q_operator_exact(self) -> list[list[ExactScalar]]:
        return acceptance_operator_exact(self.verifier, self.m, self.k)


@dataclass(frozen=True)
class TrajectoryDistribution:
    """Distribution over agreement patterns z; exact when probs are Fractions."""

    n_events: int
    probs: dict
    accept_threshold: Fraction

    def total(self):
        return sum(self.probs.values())

    def acceptance_probability(self):
        return sum(p for z, p in self.probs.items() if sum(z) >= self.accept_threshold)

    def weight_distribution(self) -> dict:
        out: dict = {}
        for z, p in self.probs.items():
            w = sum(z)
            out[w] = out.get(w, 0) + p
        return out


def _embed_witness(witness: StateVector, m: int, k: int) -> StateVector:
    """Witness on m qubits joined with k work qubits in |0..0> (message first)."""
    if witness.n != m:
        raise ValueError(f"witness width {witness.n} != m = {m}")
    if witness.exact:
        planes = tuple(np.zeros(1 << (m + k), dtype=p.dtype) for p in witness.planes)
        for full, msg in zip(planes, witness.planes):
            full[np.arange(1 << m) << k] = msg
        return StateVector(
            m + k, True, planes=planes, exponent=witness.exponent,
            mag_bits=witness._mag_bits,
        )
    vec = np.zeros(1 << (m + k), dtype=np.complex128)
    vec[np.arange(1 << m) << k] = witness.vec
    return StateVector(m + k, False, vec=vec)


def _check_normalized(witness: StateVector) -> None:
    ns = witness.norm_sq()
    if witness.exact:
        if ns != ExactScalar.from_int(1):
            raise ValueError("witness must be exactly normalized in exact mode")
    elif abs(ns - 1.0) > 1e-9:
        raise ValueError(f"witness norm^2 = {ns}, not normalized")


def _is_dead(state: StateVector) -> bool:
    if state.exact:
        return not any(p.any() for p in state.planes)
    return not state.vec.any()


def run_alternating_measurements(
    inst: QmaInstance,
    witness: StateVector,
    n_events: int,
    mode: str = "enumerate",
    seed: int = 0,
):
    """Alternating forward/backward measurement procedure.

    Odd events apply the verifier and measure the output qubit; even events
    apply its inverse and measure whether the workspace is restored to zero.
    A run of exactly n_events outcomes y_1..y_N (y_0 = 1) yields agreements
    z_i = [y_i = y_{i-1}]; acceptance is sum(z) >= N(a+b)/2, compared exactly.

    enumerate mode returns the full TrajectoryDistribution (both branches of
    every measurement, zero branches pruned); sample mode draws one seeded
    trajectory and returns (z_sequence, accepted).
    """
    if n_events < 1:
        raise ValueError("need at least one measurement event")
    _check_normalized(witness)
    threshold = Fraction(n_events) * (inst.a + inst.b) / 2
    forward = inst.verifier
    backward = dagger(inst.verifier)
    pi_mask = output_qubit_projector(0).outcome_one_mask(inst.verifier.width)
    delta_mask = workspace_zero_projector(inst.k).outcome_one_mask(inst.verifier.width)

    if mode == "sample":
        state = _embed_witness(witness if not witness.exact else witness.to_float(), inst.m, inst.k)
        rng = np.random.Generator(np.random.Philox(key=seed))
        y_prev, z = 1, []
        for i in range(1, n_events + 1):
            state = apply_circuit(state, forward if i % 2 == 1 else backward)
            spec = output_qubit_projector(0) if i % 2 == 1 else workspace_zero_projector(inst.k)
            prob_one, post0, post1 = measure_projector(state, spec)
            y = 1 if rng.random() < prob_one else 0
            state = post1 if y == 1 else post0
            z.append(1 if y == y_prev else 0)
            y_prev = y
        return tuple(z), Fraction(sum(z)) >= threshold

    if mode != "enumerate":
        raise ValueError(f"unknown mode {mode!r}")
    if n_events > ENUMERATE_EVENT_CAP:
        raise ValueError(
            f"enumerate mode capped at {ENUMERATE_EVENT_CAP} events, got {n_events}"
        )

    start = _embed_witness(witness, inst.m, inst.k)
    branches = [((), 1, start)]  # (z-prefix, y_prev, unnormalized state)
    for i in range(1, n_events + 1):
        circ = forward if i % 2 == 1 else backward
        mask = pi_mask if i % 2 == 1 else delta_mask
        nxt = []
        for z, y_prev, state in branches:
            moved = apply_circuit(state, circ)
            for outcome, keep in ((1, mask), (0, ~mask)):
                branch = moved.project(keep)
                if _is_dead(branch):
                    continue
                nxt.append((z + (1 if outcome == y_prev else 0,), outcome, branch))
        branches = nxt

    probs: dict = {}
    for z, _, state in branches:
        ns = state.norm_sq()
        p = ns.to_fraction() if witness.exact else float(ns)
        probs[z] = probs.get(z, 0) + p
    return TrajectoryDistribution(n_events, probs, threshold)


def binomial_tail(p: Rational, n: int, t0: int):
    """Pr[Binomial(n, p) >= t0]; exact for Fraction p."""
    exact = isinstance(p, (Fraction, int, str))
    pv = as_fraction(p) if exact else float(p)
    one = Fraction(1) if exact else 1.0
    total = Fraction(0) if exact else 0.0
    for j in range(max(t0, 0), n + 1):
        total += math.comb(n, j) * pv**j * (one - pv) ** (n - j)
    return total


def threshold_count(n: int, a: Fraction, b: Fraction) -> int:
    """Smallest integer agreement count meeting the n(a+b)/2 rule."""
    return math.ceil(Fraction(n) * (a + b) / 2)


def analytic_acceptance(
    eigen_weights: Sequence[tuple], n_events: int, a: Rational, b: Rational
):
    """Acceptance of the alternating procedure from the witness's spectrum.

    eigen_weights lists (p_j, weight_j) with weights summing to 1; on each
    eigencomponent the agreement count is Binomial(n, p_j).
    """
    af, bf = as_fraction(a), as_fraction(b)
    t0 = threshold_count(n_events, af, bf)
    exact = all(isinstance(p, (Fraction, int)) and isinstance(w, (Fraction, int))
                for p, w in eigen_weights)
    wsum = sum(w for _, w in eigen_weights)
    if exact:
        if wsum != 1:
            raise ValueError(f"eigenweights sum to {wsum}, expected 1")
        return sum(Fraction(w) * binomial_tail(Fraction(p), n_events, t0)
                   for p, w in eigen_weights)
    if abs(float(wsum) - 1.0) > 1e-9:
        raise ValueError(f"eigenweights sum to {wsum}, expected 1")
    return float(sum(w * binomial_tail(float(p), n_events, t0) for p, w in eigen_weights))


def sequence_probability(eigen_weights: Sequence[tuple], z: Sequence[int]):
    """Pr[agreement pattern z] = sum_j w_j p_j^w(z) (1-p_j)^(N-w(z))."""
    w = sum(z)
    n = len(z)
    return sum(wt * p**w * (1 - p) ** (n - w) for p, wt in eigen_weights)


@dataclass(frozen=True)
class WitnessPreservingAmplification:
    """Amplified game descriptor; the witness register width is unchanged."""

    base: QmaInstance
    r: int
    n_events: int
    accept_threshold: Fraction
    m: int
    completeness: Fraction
    soundness: Fraction

    def acceptance_probability(self, p: Rational):
        t0 = threshold_count(self.n_events, self.base.a, self.base.b)
        return binomial_tail(p, self.n_events, t0)

    def run(self, witness: StateVector, mode: str = "sample", seed: int = 0):
        return run_alternating_measurements(self.base, witness, self.n_events, mode, seed)


def amplify_preserving_witness(inst: QmaInstance, r: int) -> WitnessPreservingAmplification:
    """Error reduction to (1 - 2^-r, 2^-r) with no growth of the witness."""
    if r < 1:
        raise ValueError("target exponent r must be >= 1")
    q = inst.gap_q
    n = 8 * q * q * r
    return WitnessPreservingAmplification(
        base=inst,
        r=r,
        n_events=n,
        accept_threshold=Fraction(n) * (inst.a + inst.b) / 2,
        m=inst.m,
        completeness=1 - Fraction(1, 2**r),
        soundness=Fraction(1, 2**r),
    )


@dataclass(frozen=True)
class CopyAmplification:
    """Majority vote over t independent runs; witness width scales by t."""

    base: QmaInstance
    copies: int
    message_width: int
    accept_threshold: Fraction

    def acceptance_probability(self, p: Rational):
        t0 = threshold_count(self.copies, self.base.a, self.base.b)
        return binomial_tail(p, self.copies, t0)


def amplify_by_copies(inst: QmaInstance, t: int) -> CopyAmplification:
    if t < 1:
        raise ValueError("need at least one copy")
    return CopyAmplification(
        base=inst,
        copies=t,
        message_width=t * inst.m,
        accept_threshold=Fraction(t) * (inst.a + inst.b) / 2,
    )


@dataclass(frozen=True)
class GapCertificate:
    """Integer pair with h / 2^g equal to an exact operator trace."""

    h: int
    g: int
    claim: str

    @property
    def value(self) -> Fraction:
        return Fraction(self.h, 2**self.g)

    @property
    def decision_value(self) -> int:
        return 2 * self.h - 2**self.g


def _exact_trace(q: list[list[ExactScalar]]) -> Fraction:
    total = Fraction(0)
    for i in range(len(q)):
        d = q[i][i]
        if not d.is_rational():
            raise ValueError("acceptance operator diagonal must be rational")
        total += d.to_fraction()
    return total


def counting_certificate(inst: QmaInstance) -> GapCertificate:
    """tr(Q) = h / 2^g bit-exactly, g = Hadamard count of the verifier."""
    g = inst.verifier.hadamard_count()
    trace = _exact_trace(inst.q_operator_exact())
    h = trace * 2**g
    if h.denominator != 1:
        raise ValueError(f"trace {trace} is not dyadic with exponent {g}")
    if not 0 <= trace <= 2**inst.m:
        raise ValueError(f"trace {trace} outside [0, 2^m]")
    return GapCertificate(h=h.numerator, g=g, claim="2h - 2^g > 0 iff tr(Q) > 1/2")


def tail_polynomial_coefficients(n: int, t0: int) -> list[int]:
    """Integer coefficients of f(x) = sum_{j>=t0} C(n,j) x^j (1-x)^(n-j)."""
    coeffs = [0] * (n + 1)
    for j in range(max(t0, 0), n + 1):
        cj = math.comb(n, j)
        for i in range(n - j + 1):
            coeffs[j + i] += cj * math.comb(n - j, i) * (-1) ** i
    return coeffs


def _exact_identity(dim: int) -> list[list[ExactScalar]]:
    one, zero = ExactScalar.from_int(1), ExactScalar.from_int(0)
    return [[one if i == j else zero for j in range(dim)] for i in range(dim)]


def _exact_matmul(a: list[list[ExactScalar]], b: list[list[ExactScalar]]) -> list[list[ExactScalar]]:
    dim = len(a)
    out = []
    for i in range(dim):
        row = []
        for j in range(dim):
            acc = ExactScalar.from_int(0)
            for t in range(dim):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def amplified_counting_certificate(inst: QmaInstance, r: int) -> GapCertificate:
    """Certificate for the amplified game, via the agreement-tail polynomial.

    The amplified acceptance operator is f(Q) for the binomial tail f, so its
    trace is sum_t alpha_t tr(Q^t) with integer alpha_t; every tr(Q^t) is
    dyadic with exponent t*g, making the total exact at exponent N*g.
    """
    amp = amplify_preserving_witness(inst, r)
    n = amp.n_events
    g_base = inst.verifier.hadamard_count()
    g = n * g_base
    if g > _CERT_EXPONENT_CAP:
        raise ValueError(f"certificate exponent {g} exceeds cap {_CERT_EXPONENT_CAP}")
    coeffs = tail_polynomial_coefficients(n, threshold_count(n, inst.a, inst.b))
    q = inst.q_operator_exact()
    power = _exact_identity(len(q))
    trace = Fraction(coeffs[0]) * len(q)
    for t in range(1, n + 1):
        power = _exact_matmul(power, q)
        if coeffs[t]:
            trace += coeffs[t] * _exact_trace(power)
    h = trace * 2**g
    if h.denominator != 1:
        raise ValueError(f"amplified trace {trace} is not dyadic with exponent {g}")
    return GapCertificate(h=h.numerator, g=g, claim="2h - 2^g > 0 iff tr(f(Q)) > 1/2")


def a0pp_check(cert: GapCertificate) -> tuple[bool, bool]:
    """(2h >= 2^g, 2h <= 2^g / 2), both evaluated over integers."""
    yes_cond = 2 * cert.h >= 2**cert.g
    no_cond = 4 * cert.h <= 2**cert.g
    return yes_cond, no_cond


def mixed_state_acceptance(inst: QmaInstance, exact: bool = False):
    """Acceptance of the totally mixed witness, 2^-m tr(Q), checked two ways.

    Route one takes the trace of the acceptance operator; route two averages
    the verifier's output-qubit statistics over every standard-basis message.
    """
    dim = 1 << inst.m
    if exact:
        trace_route = _exact_trace(inst.q_operator_exact()) / dim
        avg = Fraction(0)
        for j in range(dim):
            st = StateVector.basis(inst.verifier.width, j << inst.k, exact=True)
            st = apply_circuit(st, inst.verifier)
            prob_one, _, _ = measure_projector(st, output_qubit_projector(0))
            avg += prob_one.to_fraction()
        avg /= dim
        if trace_route != avg:
            raise AssertionError(f"exact routes disagree: {trace_route} vs {avg}")
        return trace_route
    trace_route = float(np.trace(inst.q_operator()).real) / dim
    avg = 0.0
    for j in range(dim):
        st = StateVector.basis(inst.verifier.width, j << inst.k)
        st = apply_circuit(st, inst.verifier)
        prob_one, _, _ = measure_projector(st, output_qubit_projector(0))
        avg += prob_one
    avg /= dim
    if abs(trace_route - avg) > 1e-12:
        raise AssertionError(f"routes disagree: {trace_route} vs {avg}")
    return trace_route


@dataclass(frozen=True)
class TransitionFrame:
    """The four unit vectors of the two-outcome measurement cycle.

    For an eigenvector phi (workspace-zero embedded) with interior acceptance
    probability p, forward/backward passes move among gamma/delta rays with
    amplitudes +-sqrt(p), sqrt(1-p); tails holds the workspace-restored pair,
    heads the output-qubit pair.
    """

    p: float
    phi: np.ndarray
    gamma0: np.ndarray
    gamma1: np.ndarray
    delta0: np.ndarray
    delta1: np.ndarray
    verifier: Circuit = field(compare=False)

    def recurrence_residuals(self) -> dict:
        u = to_unitary(self.verifier)
        sp, sq = math.sqrt(self.p), math.sqrt(1.0 - self.p)
        return {
            "forward_from_delta0": float(
                np.linalg.norm(u @ self.delta0 - (-sp * self.gamma0 + sq * self.gamma1))
            ),
            "forward_from_delta1": float(
                np.linalg.norm(u @ self.delta1 - (sq * self.gamma0 + sp * self.gamma1))
            ),
            "backward_from_gamma0": float(
                np.linalg.norm(u.conj().T @ self.gamma0 - (-sp * self.delta0 + sq * self.delta1))
            ),
            "backward_from_gamma1": float(
                np.linalg.norm(u.conj().T @ self.gamma1 - (sq * self.delta0 + sp * self.delta1))
            ),
            "delta1_is_start": float(np.linalg.norm(self.delta1 - self.phi)),
        }


def transition_frame(inst: QmaInstance, witness: np.ndarray, atol: float = 1e-9) -> TransitionFrame:
    """Build the measurement-cycle frame for an eigenvector witness."""
    q = inst.q_operator()
    witness = np.asarray(witness, dtype=np.complex128)
    witness = witness / np.linalg.norm(witness)
    image = q @ witness
    p = float(np.real(np.vdot(witness, image)))
    if np.linalg.norm(image - p * witness) > atol:
        raise ValueError("witness is not an eigenvector of the acceptance operator")
    if not atol < p < 1.0 - atol:
        raise ValueError(f"need interior eigenvalue, got p = {p}")
    n = inst.verifier.width
    pi_mask = output_qubit_projector(0).outcome_one_mask(n)
    delta_mask = workspace_zero_projector(inst.k).outcome_one_mask(n)
    u = to_unitary(inst.verifier)
    phi = np.zeros(1 << n, dtype=np.complex128)
    phi[np.arange(1 << inst.m) << inst.k] = witness
    a_phi = u @ phi
    gamma0 = np.where(pi_mask, 0.0, a_phi) / math.sqrt(1.0 - p)
    gamma1 = np.where(pi_mask, a_phi, 0.0) / math.sqrt(p)
    back = u.conj().T @ gamma1
    delta0 = np.where(delta_mask, 0.0, back) / math.sqrt(1.0 - p)
    delta1 = np.where(delta_mask, back, 0.0) / math.sqrt(p)
    return TransitionFrame(
        p=p, phi=phi, gamma0=gamma0, gamma1=gamma1, delta0=delta0, delta1=delta1,
        verifier=inst.verifier,
    )
