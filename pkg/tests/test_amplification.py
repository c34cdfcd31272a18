"""Amplification tests.

The alternating-measurement enumerator is cross-checked against a brute-force
dense-matrix measurement tree that shares no code with the StateVector branch
logic, and against the closed-form binomial sequence probabilities.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from qamg.circuits import (
    StateVector,
    circuit,
    cnot_gates,
    hadamard,
    ishift,
    swap_gates,
    to_unitary,
    toffoli,
    x_gates,
)
from qamg.amplification import (
    GapCertificate,
    QmaInstance,
    a0pp_check,
    amplified_counting_certificate,
    amplify_by_copies,
    amplify_preserving_witness,
    analytic_acceptance,
    binomial_tail,
    counting_certificate,
    mixed_state_acceptance,
    run_alternating_measurements,
    sequence_probability,
    threshold_count,
    transition_frame,
)
from qamg.spectra import eig_hermitian


def _identity_instance(a=Fraction(3, 4), b=Fraction(1, 4)) -> QmaInstance:
    return QmaInstance(circuit(2), m=1, k=1, a=a, b=b)


def _half_instance() -> QmaInstance:
    """Acceptance operator exactly I/2: coin into the spare, swapped to output."""
    gates = [hadamard(1)] + cnot_gates(1, 0, 2)
    return QmaInstance(circuit(3, gates), m=1, k=2, a=Fraction(3, 4), b=Fraction(1, 4))


def _quarter_instance() -> QmaInstance:
    """Acceptance operator exactly I/4: two coins AND-ed into the spare."""
    gates = [hadamard(1), hadamard(2), toffoli(1, 2, 3)] + swap_gates(0, 3, 1)
    return QmaInstance(
        circuit(4, gates), m=1, k=3, a=Fraction(3, 4), b=Fraction(1, 4), label="no"
    )


def _always_accept_instance() -> QmaInstance:
    """Q = I: the work qubit is set to 1 and swapped onto the output."""
    gates = x_gates(2) + swap_gates(0, 2, 1)
    return QmaInstance(circuit(3, gates), m=1, k=2, a=Fraction(3, 4), b=Fraction(1, 4))


def _oracle_tree(inst: QmaInstance, witness: np.ndarray, n_events: int) -> dict:
    """Dense-matrix enumeration of the measurement tree, no pruning."""
    n = inst.verifier.width
    u = to_unitary(inst.verifier)
    idx = np.arange(1 << n)
    pi_one = (idx >> (n - 1)) & 1 == 1
    delta_one = idx & ((1 << inst.k) - 1) == 0
    start = np.zeros(1 << n, dtype=np.complex128)
    start[np.arange(1 << inst.m) << inst.k] = witness
    branches = [((), 1, start)]
    for i in range(1, n_events + 1):
        mat = u if i % 2 == 1 else u.conj().T
        keep_one = pi_one if i % 2 == 1 else delta_one
        nxt = []
        for z, y_prev, v in branches:
            w = mat @ v
            for outcome in (1, 0):
                branch = np.where(keep_one if outcome == 1 else ~keep_one, w, 0.0)
                nxt.append((z + (1 if outcome == y_prev else 0,), outcome, branch))
        branches = nxt
    probs: dict = {}
    for z, _, v in branches:
        probs[z] = probs.get(z, 0.0) + float(np.real(np.vdot(v, v)))
    return probs


class TestQmaInstance:
    def test_validation(self):
        with pytest.raises(ValueError, match="width"):
            QmaInstance(circuit(2), m=2, k=1, a=Fraction(2, 3), b=Fraction(1, 3))
        with pytest.raises(ValueError, match="thresholds"):
            QmaInstance(circuit(2), m=1, k=1, a=Fraction(1, 3), b=Fraction(2, 3))
        with pytest.raises(ValueError, match="label"):
            QmaInstance(circuit(2), m=1, k=1, a=Fraction(2, 3), b=Fraction(1, 3), label="maybe")

    def test_gap_q(self):
        assert _identity_instance().gap_q == 2
        assert QmaInstance(circuit(2), 1, 1, Fraction(2, 3), Fraction(1, 3)).gap_q == 3
        assert QmaInstance(circuit(2), 1, 1, 1, 0).gap_q == 1

    def test_threshold_strings(self):
        inst = QmaInstance(circuit(2), 1, 1, "3/4", "1/4")
        assert inst.a == Fraction(3, 4) and inst.b == Fraction(1, 4)


class TestRunAlternatingMeasurements:
    def test_certain_witness_gives_all_ones(self):
        inst = _identity_instance()
        witness = StateVector.basis(1, 1, exact=True)
        dist = run_alternating_measurements(inst, witness, 4)
        assert dist.probs == {(1, 1, 1, 1): Fraction(1)}
        assert dist.acceptance_probability() == 1

    def test_rejected_witness_gives_all_zeros(self):
        inst = _identity_instance()
        witness = StateVector.basis(1, 0, exact=True)
        dist = run_alternating_measurements(inst, witness, 5)
        assert dist.probs == {(0, 0, 0, 0, 0): Fraction(1)}
        assert dist.acceptance_probability() == 0

    def test_half_eigenvalue_is_fair_bernoulli(self):
        inst = _half_instance()
        witness = StateVector.basis(1, 0, exact=True)
        dist = run_alternating_measurements(inst, witness, 4)
        assert dist.total() == 1
        assert len(dist.probs) == 16
        for z, p in dist.probs.items():
            assert p == Fraction(1, 16)
        # agreement counts are Binomial(4, 1/2)
        wd = dist.weight_distribution()
        assert wd == {w: Fraction(math.comb(4, w), 16) for w in range(5)}

    def test_superposed_witness_mixes_eigencomponents(self):
        # eigenvalues {1, 0}; |0> splits evenly between the two eigenvectors
        inst = QmaInstance(circuit(1, [hadamard(0)]), 1, 0, Fraction(3, 4), Fraction(1, 4))
        witness = StateVector.basis(1, 0, exact=True)
        dist = run_alternating_measurements(inst, witness, 6)
        assert dist.probs == {
            (1,) * 6: Fraction(1, 2),
            (0,) * 6: Fraction(1, 2),
        }

    def test_matches_brute_force_tree(self):
        rng = np.random.default_rng(41)
        for _ in range(6):
            gates = []
            for _ in range(25):
                r = rng.integers(0, 3)
                if r == 0:
                    gates.append(hadamard(int(rng.integers(0, 4))))
                elif r == 1:
                    gates.append(ishift(int(rng.integers(0, 4))))
                else:
                    qs = rng.permutation(4)[:3]
                    gates.append(toffoli(int(qs[0]), int(qs[1]), int(qs[2])))
            inst = QmaInstance(circuit(4, gates), 2, 2, Fraction(3, 4), Fraction(1, 4))
            w = rng.normal(size=4) + 1j * rng.normal(size=4)
            w /= np.linalg.norm(w)
            dist = run_alternating_measurements(
                inst, StateVector.from_amplitudes(w), n_events=4
            )
            oracle = _oracle_tree(inst, w, 4)
            for z, p in oracle.items():
                assert abs(dist.probs.get(z, 0.0) - p) <= 1e-12
            assert abs(dist.total() - 1.0) <= 1e-12

    def test_matches_sequence_probability_formula(self):
        inst = _half_instance()
        q = inst.q_operator()
        decomp = eig_hermitian(q)
        witness = np.array([0.6, 0.8j])
        weights = [
            (float(decomp.eigenvalues[i]), float(abs(np.vdot(decomp.vectors[:, i], witness)) ** 2))
            for i in range(2)
        ]
        dist = run_alternating_measurements(inst, StateVector.from_amplitudes(witness), 5)
        for z, p in dist.probs.items():
            assert abs(p - sequence_probability(weights, z)) <= 1e-12

    def test_sample_mode_is_seeded_and_consistent(self):
        inst = _half_instance()
        witness = StateVector.basis(1, 0)
        one = run_alternating_measurements(inst, witness, 6, mode="sample", seed=9)
        two = run_alternating_measurements(inst, witness, 6, mode="sample", seed=9)
        assert one == two
        z, accepted = one
        assert len(z) == 6
        assert accepted == (Fraction(sum(z)) >= Fraction(6) * (inst.a + inst.b) / 2)
        # frequency agrees with the analytic value within 4 sigma
        analytic = analytic_acceptance([(Fraction(1, 2), 1)], 6, inst.a, inst.b)
        runs = 600
        hits = sum(
            run_alternating_measurements(inst, witness, 6, mode="sample", seed=s)[1]
            for s in range(runs)
        )
        sigma = math.sqrt(float(analytic) * (1 - float(analytic)) / runs)
        assert abs(hits / runs - float(analytic)) <= 4 * sigma + 1e-9

    def test_errors(self):
        inst = _identity_instance()
        good = StateVector.basis(1, 1)
        with pytest.raises(ValueError, match="event"):
            run_alternating_measurements(inst, good, 0)
        with pytest.raises(ValueError, match="capped"):
            run_alternating_measurements(inst, good, 21)
        with pytest.raises(ValueError, match="mode"):
            run_alternating_measurements(inst, good, 2, mode="guess")
        bad = StateVector.from_amplitudes([0.5, 0.5])
        with pytest.raises(ValueError, match="normalized"):
            run_alternating_measurements(inst, bad, 2)


class TestAnalyticAcceptance:
    def test_endpoints(self):
        assert analytic_acceptance([(1, 1)], 7, Fraction(3, 4), Fraction(1, 4)) == 1
        assert analytic_acceptance([(0, 1)], 7, Fraction(3, 4), Fraction(1, 4)) == 0

    def test_half_two_events(self):
        got = analytic_acceptance([(Fraction(1, 2), 1)], 2, Fraction(3, 4), Fraction(1, 4))
        assert got == Fraction(3, 4)

    def test_weight_validation(self):
        with pytest.raises(ValueError, match="sum"):
            analytic_acceptance([(Fraction(1, 2), Fraction(1, 2))], 2, "3/4", "1/4")

    def test_float_mixture(self):
        got = analytic_acceptance([(0.9, 0.5), (0.1, 0.5)], 3, 0.75, 0.25)
        tail9 = 3 * 0.9**2 * 0.1 + 0.9**3
        tail1 = 3 * 0.1**2 * 0.9 + 0.1**3
        assert abs(got - 0.5 * (tail9 + tail1)) <= 1e-12

    def test_threshold_count_rounding(self):
        assert threshold_count(4, Fraction(3, 4), Fraction(1, 4)) == 2
        assert threshold_count(5, Fraction(3, 4), Fraction(1, 4)) == 3
        assert threshold_count(3, Fraction(2, 3), Fraction(1, 3)) == 2


class TestAmplifyPreservingWitness:
    def test_event_count_formula(self):
        amp = amplify_preserving_witness(_identity_instance(), r=2)
        assert amp.n_events == 64
        assert amp.m == 1
        amp = amplify_preserving_witness(_identity_instance(), r=1)
        assert amp.n_events == 32

    def test_error_endpoints_exact(self):
        inst = _identity_instance()
        for r in (1, 2, 4):
            amp = amplify_preserving_witness(inst, r)
            assert amp.acceptance_probability(inst.a) >= 1 - Fraction(1, 2**r)
            assert amp.acceptance_probability(inst.b) <= Fraction(1, 2**r)
            assert amp.completeness == 1 - Fraction(1, 2**r)
            assert amp.soundness == Fraction(1, 2**r)

    def test_executable_form(self):
        inst = _identity_instance()
        amp = amplify_preserving_witness(inst, 1)
        z, accepted = amp.run(StateVector.basis(1, 1), mode="sample", seed=0)
        assert accepted and sum(z) == amp.n_events

    def test_rejects_bad_r(self):
        with pytest.raises(ValueError, match="r must"):
            amplify_preserving_witness(_identity_instance(), 0)


class TestAmplifyByCopies:
    def test_single_copy_is_identity_rule(self):
        amp = amplify_by_copies(_identity_instance(), 1)
        assert amp.message_width == 1
        for p in (Fraction(0), Fraction(1, 3), Fraction(1)):
            assert amp.acceptance_probability(p) == p

    def test_three_copy_majority(self):
        amp = amplify_by_copies(_identity_instance(), 3)
        assert amp.message_width == 3
        got = amp.acceptance_probability(0.9)
        assert abs(got - (3 * 0.9**2 * 0.1 + 0.9**3)) <= 1e-12

    def test_witness_growth_contrast(self):
        inst = _identity_instance()
        assert amplify_preserving_witness(inst, 5).m == inst.m
        assert amplify_by_copies(inst, 5).message_width == 5 * inst.m


class TestCountingCertificate:
    def test_identity_instance(self):
        cert = counting_certificate(_identity_instance())
        assert (cert.h, cert.g) == (1, 0)
        assert cert.value == 1

    def test_single_hadamard_half(self):
        inst = QmaInstance(circuit(1, [hadamard(0)]), m=0, k=1, a=Fraction(2, 3), b=Fraction(1, 3))
        cert = counting_certificate(inst)
        assert (cert.h, cert.g) == (1, 1)
        assert cert.value == Fraction(1, 2)
        assert cert.decision_value == 0

    def test_trace_matches_spectra_diagonal(self):
        inst = _quarter_instance()
        cert = counting_certificate(inst)
        g = inst.verifier.hadamard_count()
        assert cert.g == g
        assert cert.value == Fraction(1, 2)  # tr(I/4 on dim 2)
        q = inst.q_operator_exact()
        diag_sum = sum(q[i][i].to_fraction() for i in range(2))
        assert cert.value == diag_sum

    def test_amplified_pair_separates(self):
        r = 3  # m + 2 for m = 1
        yes_cert = amplified_counting_certificate(_identity_instance(), r)
        assert yes_cert.h >= Fraction(3, 4) * 2**yes_cert.g
        yes_a0, yes_no = a0pp_check(yes_cert)
        assert yes_a0 and not yes_no

        no_cert = amplified_counting_certificate(_quarter_instance(), r)
        assert no_cert.h <= Fraction(1, 4) * 2**no_cert.g
        no_a0_yes, no_a0_no = a0pp_check(no_cert)
        assert no_a0_no and not no_a0_yes

    def test_amplified_trace_matches_binomial_tail_oracle(self):
        # Q = I/4 exactly, so tr f(Q) = 2 * Binomial tail at p = 1/4
        inst = _quarter_instance()
        r = 2
        cert = amplified_counting_certificate(inst, r)
        n = 8 * inst.gap_q**2 * r
        t0 = threshold_count(n, inst.a, inst.b)
        assert cert.value == 2 * binomial_tail(Fraction(1, 4), n, t0)
        assert cert.g == n * inst.verifier.hadamard_count()


class TestA0ppCheck:
    def test_boundary_values(self):
        assert a0pp_check(GapCertificate(h=4, g=2, claim="")) == (True, False)
        assert a0pp_check(GapCertificate(h=0, g=2, claim="")) == (False, True)
        assert a0pp_check(GapCertificate(h=1, g=2, claim="")) == (False, True)
        assert a0pp_check(GapCertificate(h=2, g=2, claim="")) == (True, False)


class TestMixedStateAcceptance:
    def test_identity_instance_half(self):
        assert mixed_state_acceptance(_identity_instance(), exact=True) == Fraction(1, 2)
        assert abs(mixed_state_acceptance(_identity_instance()) - 0.5) <= 1e-15

    def test_always_accept_instance(self):
        inst = _always_accept_instance()
        assert mixed_state_acceptance(inst, exact=True) == 1
        assert abs(mixed_state_acceptance(inst) - 1.0) <= 1e-12

    def test_random_two_qubit_message(self):
        rng = np.random.default_rng(53)
        gates = []
        for _ in range(30):
            r = rng.integers(0, 3)
            if r == 0:
                gates.append(hadamard(int(rng.integers(0, 4))))
            elif r == 1:
                gates.append(ishift(int(rng.integers(0, 4))))
            else:
                qs = rng.permutation(4)[:3]
                gates.append(toffoli(int(qs[0]), int(qs[1]), int(qs[2])))
        inst = QmaInstance(circuit(4, gates), 2, 2, Fraction(2, 3), Fraction(1, 3))
        val = mixed_state_acceptance(inst)  # asserts the two routes agree
        q = inst.q_operator()
        assert abs(val - np.trace(q).real / 4) <= 1e-12


class TestTransitionFrame:
    def test_interior_half_instance(self):
        inst = _half_instance()
        frame = transition_frame(inst, np.array([1.0, 0.0]))
        assert abs(frame.p - 0.5) <= 1e-12
        for name, res in frame.recurrence_residuals().items():
            assert res <= 1e-9, name

    def test_random_interior_eigenvectors(self):
        rng = np.random.default_rng(61)
        found = 0
        seed = 0
        while found < 5:
            seed += 1
            gen = np.random.default_rng(seed)
            gates = []
            for _ in range(20):
                r = gen.integers(0, 3)
                if r == 0:
                    gates.append(hadamard(int(gen.integers(0, 3))))
                elif r == 1:
                    gates.append(ishift(int(gen.integers(0, 3))))
                else:
                    qs = gen.permutation(3)
                    gates.append(toffoli(int(qs[0]), int(qs[1]), int(qs[2])))
            inst = QmaInstance(circuit(3, gates), 1, 2, Fraction(2, 3), Fraction(1, 3))
            decomp = eig_hermitian(inst.q_operator())
            for i, p in enumerate(decomp.eigenvalues):
                if 1e-3 < p < 1 - 1e-3:
                    frame = transition_frame(inst, decomp.vectors[:, i])
                    for name, res in frame.recurrence_residuals().items():
                        assert res <= 1e-9, (seed, name)
                    found += 1
                    break

    def test_rejects_non_eigenvector_and_boundary(self):
        with pytest.raises(ValueError, match="interior"):
            transition_frame(_identity_instance(), np.array([0.0, 1.0]))
        inst = QmaInstance(circuit(1, [hadamard(0)]), 1, 0, Fraction(2, 3), Fraction(1, 3))
        with pytest.raises(ValueError, match="eigenvector"):
            transition_frame(inst, np.array([1.0, 0.0]))
