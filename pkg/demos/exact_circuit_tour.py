"""
Exact circuit simulation over the Hadamard / i-shift / Toffoli set
==================================================================

Every amplitude produced by this gate set lives in the ring of
Gaussian-integer pairs x + y/sqrt(2) scaled by a power of 1/sqrt(2),
so states can be tracked with integer arithmetic only.  Measurement
probabilities then come out as exact dyadic rationals, and claims like
"this circuit is exactly its own inverse" become integer identities
instead of floating-point near-misses.
"""
from fractions import Fraction

import numpy as np

from qamg import ExactScalar, StateVector, circuit, dagger, parse_circuit, serialize_circuit
from qamg.circuits import apply_circuit, hadamard, ishift, toffoli, x_gates

# %% Scalars first: the canonical form is (x + y*sqrt(2)) / 2^e with
# Gaussian-integer x and y, so 1/sqrt(2) is sqrt(2)/2.
root_half = ExactScalar(0, 0, 1, 0, 1)
print("1/sqrt(2)              =", root_half)
print("(1/sqrt(2))^2          =", (root_half * root_half).to_fraction())
print("|1/sqrt(2) * i|^2      =", (root_half * ExactScalar.from_gaussian(0, 1)).abs_sq().to_fraction())

# Powers of the i-shift close a cycle of length four.
s = ExactScalar.from_gaussian(0, 1)
print("i^4 == 1               :", s * s * s * s == ExactScalar.from_int(1))

# %% The missing X gate is a two-sided Hadamard conjugation of S^2:
# H S S H maps |0> -> |1> exactly.
flip = circuit(1, [hadamard(0), ishift(0), ishift(0), hadamard(0)])
state = apply_circuit(StateVector.basis(1, 0, exact=True), flip)
print()
print("H S S H on |0>         =", [str(a) for a in state.amplitudes()])
tokens = serialize_circuit(circuit(1, x_gates(0))).splitlines()[1:]
print("library x_gates helper =", " / ".join(tokens))

# %% A three-qubit interference circuit with exact amplitudes.
entangler = circuit(3, [hadamard(0), hadamard(1), toffoli(0, 1, 2), ishift(2), hadamard(2)])
out = apply_circuit(StateVector.basis(3, 0, exact=True), entangler)
print()
print("circuit:", serialize_circuit(entangler))
for i, amp in enumerate(out.amplitudes()):
    if not amp.is_zero():
        print(f"  amp[{i:03b}] = {str(amp):>22}   |amp|^2 = {amp.abs_sq().to_fraction()}")
total = sum((amp.abs_sq().to_fraction() for amp in out.amplitudes()), Fraction(0))
print("probabilities sum to   =", total)

# %% Serialized text round-trips through the parser unchanged.
text = serialize_circuit(entangler)
assert serialize_circuit(parse_circuit(text)) == text
print()
print("parse/serialize round-trip ok")

# %% The adjoint circuit undoes the original exactly: applying circuit
# then dagger to each basis state returns that basis state with integer
# amplitude 1, not 0.9999999999.
undone = apply_circuit(out, dagger(entangler))
for i, amp in enumerate(undone.amplitudes()):
    expected = ExactScalar.from_int(1 if i == 0 else 0)
    assert amp == expected
print("dagger(entangler) restores |000> exactly")

# %% Floats track the exact values to machine precision.
float_state = apply_circuit(StateVector.basis(3, 0), entangler)
drift = max(
    abs(complex(fv) - ev.to_complex())
    for fv, ev in zip(float_state.vec, out.amplitudes())
)
print("max float drift        = %.3e" % drift)
print("float norm             = %.17f" % np.linalg.norm(float_state.vec))
