"""Circuits over the {Toffoli, Hadamard, i-shift} gate set and their statevectors.

Qubit 0 is the leftmost / most significant bit of a basis index.  Exact-mode
states store Gaussian-integer coefficient planes for 1 and sqrt(2) with a
single shared power-of-two exponent, so gate application is integer-only:
Hadamard is add/subtract plus an exponent bump, the i-shift is a component
rotation, and Toffoli is a slice swap.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exact import ExactScalar

FLOAT_WIDTH_CAP = 14
EXACT_WIDTH_CAP = 10
_UNITARY_WIDTH_CAP = 10
_INT64_SAFE_BITS = 62

_GATE_ARITY = {"H": 1, "S": 1, "T": 3}


class CircuitParseError(ValueError):
    """Malformed circuit text; carries the offending 1-based line number."""

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class WidthCapError(ValueError):
    """Requested register width exceeds the configured cap."""


def width_cap(exact: bool) -> int:
    raw = os.environ.get("QAMG_WIDTH_CAP")
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ValueError(f"QAMG_WIDTH_CAP must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ValueError(f"QAMG_WIDTH_CAP must be positive, got {cap}")
        return cap
    return EXACT_WIDTH_CAP if exact else FLOAT_WIDTH_CAP


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        arity = _GATE_ARITY.get(self.kind)
        if arity is None:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} takes {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} qubits must be distinct, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")


def hadamard(q: int) -> Gate:
    return Gate("H", (q,))


def ishift(q: int) -> Gate:
    """|1> -> i|1> on qubit q."""
    return Gate("S", (q,))


def toffoli(c1: int, c2: int, t: int) -> Gate:
    return Gate("T", (c1, c2, t))


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...]
    layout: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise ValueError(f"gate {g} out of range for width {self.width}")
        if self.layout is not None and sum(self.layout) != self.width:
            raise ValueError(f"layout {self.layout} does not sum to width {self.width}")

    def __len__(self) -> int:
        return len(self.gates)

    def hadamard_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == "H")


def circuit(width: int, gates: Iterable[Gate] = (), layout: tuple[int, ...] | None = None) -> Circuit:
    return Circuit(width, tuple(gates), layout)


def parse_circuit(text: str) -> Circuit:
    width: int | None = None
    gates: list[Gate] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0]
        if width is None:
            if op != "qubits":
                raise CircuitParseError(line_no, f"expected 'qubits N' header, got {raw!r}")
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise CircuitParseError(line_no, f"bad qubit count in {raw!r}")
            width = int(parts[1])
            continue
        if op == "qubits":
            raise CircuitParseError(line_no, "duplicate 'qubits' header")
        arity = _GATE_ARITY.get(op)
        if arity is None:
            raise CircuitParseError(line_no, f"unknown gate {op!r}")
        args = parts[1:]
        if len(args) != arity or not all(a.lstrip("-").isdigit() for a in args):
            raise CircuitParseError(line_no, f"{op} expects {arity} qubit index(es), got {raw!r}")
        qubits = tuple(int(a) for a in args)
        try:
            gate = Gate(op, qubits)
        except ValueError as exc:
            raise CircuitParseError(line_no, str(exc)) from exc
        if max(qubits) >= width:
            raise CircuitParseError(line_no, f"qubit index out of range in {raw!r}")
        gates.append(gate)
    if width is None:
        raise CircuitParseError(1, "missing 'qubits N' header")
    return Circuit(width, tuple(gates))


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.width}"]
    lines.extend(f"{g.kind} {' '.join(str(q) for q in g.qubits)}" for g in c.gates)
    return "\n".join(lines) + "\n"


def dagger(c: Circuit) -> Circuit:
    """Inverse circuit; the i-shift inverse is recorded as three i-shifts."""
    inv: list[Gate] = []
    for g in reversed(c.gates):
        if g.kind == "S":
            inv.extend([g, g, g])
        else:
            inv.append(g)
    return Circuit(c.width, tuple(inv), c.layout)


# --- library-level macros (gate lists, ancilla-free conjugations) ---


def x_gates(q: int) -> list[Gate]:
    """X = H S S H (H Z H with Z = S^2)."""
    return [hadamard(q), ishift(q), ishift(q), hadamard(q)]


def z_gates(q: int) -> list[Gate]:
    return [ishift(q), ishift(q)]


def cnot_gates(control: int, target: int, borrow: int) -> list[Gate]:
    """CNOT from two Toffolis; `borrow` may hold any state and is restored."""
    return (
        [toffoli(control, borrow, target)]
        + x_gates(borrow)
        + [toffoli(control, borrow, target)]
        + x_gates(borrow)
    )


def swap_gates(a: int, b: int, borrow: int) -> list[Gate]:
    return (
        cnot_gates(a, b, borrow)
        + cnot_gates(b, a, borrow)
        + cnot_gates(a, b, borrow)
    )


def multi_controlled_x_gates(
    controls: Sequence[int], target: int, borrows: Sequence[int]
) -> list[Gate]:
    """X on `target` controlled on all of `controls` being 1.

    Borrow qubits may hold arbitrary states and are returned unchanged.  One
    borrow (distinct from controls and target) suffices for any control count
    because the recursion reuses the outer target as the inner borrow.
    """
    used = set(controls) | {target} | set(borrows)
    if len(used) != len(controls) + 1 + len(borrows):
        raise ValueError("controls, target, and borrows must be distinct")
    n = len(controls)
    if n == 0:
        return x_gates(target)
    if n == 1:
        if not borrows:
            raise ValueError("1-controlled X needs one borrow qubit")
        return cnot_gates(controls[0], target, borrows[0])
    if n == 2:
        return [toffoli(controls[0], controls[1], target)]
    if not borrows:
        raise ValueError(f"{n}-controlled X needs a borrow qubit")
    b = borrows[0]
    # t ^= (b ^ c_rest)*c_last twice cancels the dirty borrow contribution.
    inner = multi_controlled_x_gates(controls[:-1], b, list(borrows[1:]) + [target])
    step = inner + [toffoli(b, controls[-1], target)]
    return step + step


# --- projector specs ---


@dataclass(frozen=True)
class ProjectorSpec:
    """Binary projective measurement; `kind` fixes which outcome counts as 1."""

    kind: str
    param: int

    def outcome_one_mask(self, n: int) -> np.ndarray:
        idx = np.arange(1 << n)
        if self.kind == "qubit_one":
            if not 0 <= self.param < n:
                raise ValueError(f"qubit {self.param} out of range for width {n}")
            return (idx >> (n - 1 - self.param)) & 1 == 1
        # zero-length windows are trivially restored: outcome is always 1
        if self.kind == "suffix_zero":
            if not 0 <= self.param <= n:
                raise ValueError(f"suffix length {self.param} out of range for width {n}")
            return idx & ((1 << self.param) - 1) == 0
        if self.kind == "prefix_zero":
            if not 0 <= self.param <= n:
                raise ValueError(f"prefix length {self.param} out of range for width {n}")
            return idx >> (n - self.param) == 0
        raise ValueError(f"unknown projector kind {self.kind!r}")


def output_qubit_projector(q: int = 0) -> ProjectorSpec:
    """Outcome 1 iff qubit q reads 1 (the decision-qubit measurement)."""
    return ProjectorSpec("qubit_one", q)


def workspace_zero_projector(k: int) -> ProjectorSpec:
    """Outcome 1 iff the last k qubits all read 0 (workspace restored)."""
    return ProjectorSpec("suffix_zero", k)


def prefix_zero_projector(k: int) -> ProjectorSpec:
    """Outcome 1 iff the first k qubits all read 0 (verifier-first layouts)."""
    return ProjectorSpec("prefix_zero", k)


# --- statevectors ---


class StateVector:
    """Dense state on n qubits, exact (integer planes) or float (complex128)."""

    __slots__ = ("n", "exact", "vec", "planes", "exponent", "_mag_bits")

    def __init__(
        self,
        n: int,
        exact: bool,
        vec: np.ndarray | None = None,
        planes: tuple[np.ndarray, ...] | None = None,
        exponent: int = 0,
        mag_bits: int = 1,
        skip_cap_check: bool = False,
    ) -> None:
        if not skip_cap_check:
            cap = width_cap(exact)
            if n > cap:
                raise WidthCapError(f"width {n} exceeds {'exact' if exact else 'float'} cap {cap}")
        self.n = n
        self.exact = exact
        self.vec = vec
        self.planes = planes
        self.exponent = exponent
        self._mag_bits = mag_bits

    @classmethod
    def basis(cls, n: int, index: int = 0, exact: bool = False) -> StateVector:
        if not 0 <= index < (1 << n):
            raise ValueError(f"basis index {index} out of range for width {n}")
        if exact:
            planes = tuple(np.zeros(1 << n, dtype=np.int64) for _ in range(4))
            planes[0][index] = 1
            return cls(n, True, planes=planes, exponent=0, mag_bits=1)
        vec = np.zeros(1 << n, dtype=np.complex128)
        vec[index] = 1.0
        return cls(n, False, vec=vec)

    @classmethod
    def from_amplitudes(cls, amps: Sequence, exact: bool = False) -> StateVector:
        size = len(amps)
        n = size.bit_length() - 1
        if 1 << n != size:
            raise ValueError(f"amplitude count {size} is not a power of two")
        if not exact:
            vec = np.asarray(amps, dtype=np.complex128).copy()
            return cls(n, False, vec=vec)
        if not all(isinstance(a, ExactScalar) for a in amps):
            raise TypeError("exact states take ExactScalar amplitudes")
        e = max(a.components[4] for a in amps)
        planes = tuple(np.zeros(size, dtype=object) for _ in range(4))
        for i, a in enumerate(amps):
            xr, xi, yr, yi, ea = a.components
            shift = e - ea
            planes[0][i] = xr << shift
            planes[1][i] = xi << shift
            planes[2][i] = yr << shift
            planes[3][i] = yi << shift
        state = cls(n, True, planes=planes, exponent=e, mag_bits=0)
        state._refresh_mag_bits()
        return state

    def _refresh_mag_bits(self) -> None:
        assert self.planes is not None
        bits = 1
        for plane in self.planes:
            for v in plane:
                b = int(v).bit_length()
                if b > bits:
                    bits = b
        self._mag_bits = bits

    def copy(self) -> StateVector:
        if self.exact:
            return StateVector(
                self.n, True,
                planes=tuple(p.copy() for p in self.planes),
                exponent=self.exponent, mag_bits=self._mag_bits,
                skip_cap_check=True,
            )
        return StateVector(self.n, False, vec=self.vec.copy(), skip_cap_check=True)

    def _widen_if_needed(self, extra_bits: int) -> None:
        if self.planes[0].dtype == np.int64 and self._mag_bits + extra_bits > _INT64_SAFE_BITS:
            self.planes = tuple(p.astype(object) for p in self.planes)

    # gate application (in place)

    def _pairs(self, q: int) -> tuple[np.ndarray, ...]:
        shape = (1 << q, 2, 1 << (self.n - 1 - q))
        if self.exact:
            return tuple(p.reshape(shape) for p in self.planes)
        return (self.vec.reshape(shape),)

    def apply_gate(self, g: Gate) -> None:
        if g.kind == "H":
            q = g.qubits[0]
            if self.exact:
                self._widen_if_needed(2)
                xr, xi, yr, yi = self._pairs(q)
                sxr, dxr = xr[:, 0, :] + xr[:, 1, :], xr[:, 0, :] - xr[:, 1, :]
                sxi, dxi = xi[:, 0, :] + xi[:, 1, :], xi[:, 0, :] - xi[:, 1, :]
                syr, dyr = yr[:, 0, :] + yr[:, 1, :], yr[:, 0, :] - yr[:, 1, :]
                syi, dyi = yi[:, 0, :] + yi[:, 1, :], yi[:, 0, :] - yi[:, 1, :]
                # (x + y*sqrt2)/sqrt2 = (2y + x*sqrt2)/2
                xr[:, 0, :], yr[:, 0, :] = 2 * syr, sxr
                xr[:, 1, :], yr[:, 1, :] = 2 * dyr, dxr
                xi[:, 0, :], yi[:, 0, :] = 2 * syi, sxi
                xi[:, 1, :], yi[:, 1, :] = 2 * dyi, dxi
                self.exponent += 1
                self._mag_bits += 2
            else:
                (v,) = self._pairs(q)
                a0 = v[:, 0, :].copy()
                a1 = v[:, 1, :]
                inv = 1.0 / np.sqrt(2.0)
                v[:, 0, :] = (a0 + a1) * inv
                v[:, 1, :] = (a0 - a1) * inv
        elif g.kind == "S":
            q = g.qubits[0]
            if self.exact:
                xr, xi, yr, yi = self._pairs(q)
                xr1 = xr[:, 1, :].copy()
                xr[:, 1, :] = -xi[:, 1, :]
                xi[:, 1, :] = xr1
                yr1 = yr[:, 1, :].copy()
                yr[:, 1, :] = -yi[:, 1, :]
                yi[:, 1, :] = yr1
            else:
                (v,) = self._pairs(q)
                v[:, 1, :] *= 1j
        elif g.kind == "T":
            c1, c2, t = g.qubits
            idx = np.arange(1 << self.n)
            b1 = (idx >> (self.n - 1 - c1)) & 1
            b2 = (idx >> (self.n - 1 - c2)) & 1
            bt = (idx >> (self.n - 1 - t)) & 1
            src = idx[(b1 & b2 & (bt ^ 1)).astype(bool)]
            dst = src | (1 << (self.n - 1 - t))
            if self.exact:
                for p in self.planes:
                    tmp = p[src].copy()
                    p[src] = p[dst]
                    p[dst] = tmp
            else:
                tmp = self.vec[src].copy()
                self.vec[src] = self.vec[dst]
                self.vec[dst] = tmp
        else:  # pragma: no cover - Gate validates kinds
            raise ValueError(f"unknown gate kind {g.kind!r}")

    # accessors

    def amplitude(self, i: int):
        if self.exact:
            return ExactScalar(
                int(self.planes[0][i]), int(self.planes[1][i]),
                int(self.planes[2][i]), int(self.planes[3][i]),
                self.exponent,
            )
        return complex(self.vec[i])

    def amplitudes(self) -> list:
        return [self.amplitude(i) for i in range(1 << self.n)]

    def to_float(self) -> StateVector:
        if not self.exact:
            return self.copy()
        scale = 0.5 ** self.exponent
        r2 = np.sqrt(2.0)
        xr, xi, yr, yi = (p.astype(np.float64) for p in self.planes)
        vec = ((xr + r2 * yr) + 1j * (xi + r2 * yi)) * scale
        return StateVector(self.n, False, vec=vec.astype(np.complex128), skip_cap_check=True)

    def norm_sq(self):
        if self.exact:
            xr, xi, yr, yi = self.planes
            rational = sum(int(a) * int(a) for a in xr) + sum(int(a) * int(a) for a in xi)
            rational += 2 * (sum(int(a) * int(a) for a in yr) + sum(int(a) * int(a) for a in yi))
            root2 = 2 * (
                sum(int(a) * int(b) for a, b in zip(xr, yr))
                + sum(int(a) * int(b) for a, b in zip(xi, yi))
            )
            return ExactScalar(rational, 0, root2, 0, 2 * self.exponent)
        return float(np.vdot(self.vec, self.vec).real)

    def inner(self, other: StateVector):
        """<self|other>; modes must match."""
        if self.exact != other.exact or self.n != other.n:
            raise ValueError("inner product needs matching mode and width")
        if not self.exact:
            return complex(np.vdot(self.vec, other.vec))
        axr, axi, ayr, ayi = self.planes
        bxr, bxi, byr, byi = other.planes
        xr = xi = yr = yi = 0
        for i in range(1 << self.n):
            ar, ai = int(axr[i]), -int(axi[i])
            cr, ci = int(ayr[i]), -int(ayi[i])
            br, bi = int(bxr[i]), int(bxi[i])
            dr, di = int(byr[i]), int(byi[i])
            xr += ar * br - ai * bi + 2 * (cr * dr - ci * di)
            xi += ar * bi + ai * br + 2 * (cr * di + ci * dr)
            yr += ar * dr - ai * di + cr * br - ci * bi
            yi += ar * di + ai * dr + cr * bi + ci * br
        return ExactScalar(xr, xi, yr, yi, self.exponent + other.exponent)

    def project(self, mask: np.ndarray) -> StateVector:
        """Zero out amplitudes where mask is False (unnormalized)."""
        out = self.copy()
        if self.exact:
            for p in out.planes:
                p[~mask] = 0
        else:
            out.vec[~mask] = 0.0
        return out


def apply_gates(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    out = state.copy()
    for g in gates:
        out.apply_gate(g)
    return out


def apply_circuit(state: StateVector, c: Circuit) -> StateVector:
    if c.width != state.n:
        raise ValueError(f"circuit width {c.width} != state width {state.n}")
    return apply_gates(state, c.gates)


def measure_projector(state: StateVector, spec: ProjectorSpec):
    """Measure {outcome 0, outcome 1}; returns (prob_one, post_0, post_1).

    Exact mode returns unnormalized branch states (their squared norms are the
    branch probabilities).  Float mode renormalizes and returns None for a
    zero-probability branch.
    """
    mask = spec.outcome_one_mask(state.n)
    one = state.project(mask)
    zero = state.project(~mask)
    if state.exact:
        return one.norm_sq(), zero, one
    p_one = one.norm_sq()
    p_zero = zero.norm_sq()
    if p_one > 0.0:
        one.vec /= np.sqrt(p_one)
    else:
        one = None
    if p_zero > 0.0:
        zero.vec /= np.sqrt(p_zero)
    else:
        zero = None
    return p_one, zero, one


def to_unitary(c: Circuit) -> np.ndarray:
    """Dense complex matrix of the circuit (small widths only)."""
    if c.width > _UNITARY_WIDTH_CAP:
        raise WidthCapError(f"to_unitary capped at width {_UNITARY_WIDTH_CAP}, got {c.width}")
    dim = 1 << c.width
    cols = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        state = StateVector.basis(c.width, j, exact=False)
        cols[:, j] = apply_circuit(state, c).vec
    return cols


def to_exact_columns(c: Circuit) -> list[list[ExactScalar]]:
    """Columns of the circuit's matrix as ExactScalar lists."""
    out = []
    for j in range(1 << c.width):
        state = StateVector.basis(c.width, j, exact=True)
        out.append(apply_circuit(state, c).amplitudes())
    return out
