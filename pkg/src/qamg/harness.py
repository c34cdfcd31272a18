"""Instance generation, JSON serialization, and experiment orchestration.

Instances and reports are JSON with sorted keys; exact thresholds travel as
rational strings like "3/4".  Every seeded path draws from a 64-bit
counter-based generator keyed by the seed, so identical configs produce
byte-identical reports apart from the wall-clock field.  File writes go
through a temp-then-rename step so concurrent batch runs never expose a
partial file.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .amplification import (
    QmaInstance,
    amplify_by_copies,
    analytic_acceptance,
    as_fraction,
    counting_certificate,
    run_alternating_measurements,
)
from .circuits import (
    Circuit,
    CircuitParseError,
    Gate,
    StateVector,
    WidthCapError,
    circuit,
    dagger,
    hadamard,
    ishift,
    multi_controlled_x_gates,
    parse_circuit,
    serialize_circuit,
    toffoli,
    width_cap,
    x_gates,
)
from .qam import QamInstance, coin_spectra, coin_strings, markov_check, parallel_repetition_value
from .qmam import QipInstance, build_qmam, honest_value, optimize_cheating, soundness_bound
from .spectra import acceptance_spectrum

RNG_NAME = "philox-4x64-counter"

GENERATOR_KINDS = (
    "qma-p",
    "qma-random",
    "qam-bounded",
    "qam-random",
    "qip-perfect",
    "qip-no",
)

VALID_MODES = {
    "qma": ("enumerate", "sample", "analytic"),
    "qam": ("enumerate", "sample", "analytic"),
    "qmam": ("sample", "analytic"),
}

TABLE_COLUMNS = ("N_or_t", "message_qubits", "error")


class SchemaError(ValueError):
    """Instance or report JSON does not match the expected shape."""


Instance = Union[QmaInstance, QamInstance, QipInstance]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


# --- rational JSON round-trip ---


def _num_to_json(value: Fraction) -> Union[int, str]:
    frac = as_fraction(value)
    if frac.denominator == 1:
        return int(frac)
    return f"{frac.numerator}/{frac.denominator}"


def _num_from_json(value) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise SchemaError(f"expected number or rational string, got {value!r}")
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise SchemaError(f"bad rational value {value!r}") from exc


# --- instance serialization ---


def instance_to_dict(inst: Instance) -> dict:
    if isinstance(inst, QmaInstance):
        out = {
            "type": "qma",
            "m": inst.m,
            "k": inst.k,
            "a": _num_to_json(inst.a),
            "b": _num_to_json(inst.b),
            "circuit": serialize_circuit(inst.verifier),
        }
        if inst.label is not None:
            out["label"] = inst.label
        return out
    if isinstance(inst, QamInstance):
        return {
            "type": "qam",
            "s": inst.s,
            "m": inst.m,
            "k": inst.k,
            "a": _num_to_json(inst.a),
            "b": _num_to_json(inst.b),
            "circuits": {y: serialize_circuit(c) for y, c in sorted(inst.family.items())},
        }
    if isinstance(inst, QipInstance):
        return {
            "type": "qmam",
            "k": inst.k,
            "m": inst.m,
            "epsilon": _num_to_json(inst.epsilon),
            "v1": serialize_circuit(inst.v1),
            "v2": serialize_circuit(inst.v2),
        }
    raise SchemaError(f"cannot serialize {type(inst).__name__}")


def _require(d: dict, keys: Sequence[str]) -> None:
    missing = [key for key in keys if key not in d]
    if missing:
        raise SchemaError(f"instance JSON missing fields {missing}")


def _parse_or_schema_error(text, field: str) -> Circuit:
    if not isinstance(text, str):
        raise SchemaError(f"field {field!r} must be circuit text")
    try:
        return parse_circuit(text)
    except CircuitParseError as exc:
        raise SchemaError(f"field {field!r}: {exc}") from exc


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict) or "type" not in data:
        raise SchemaError("instance JSON must be an object with a 'type' field")
    kind = data["type"]
    try:
        if kind == "qma":
            _require(data, ["m", "k", "a", "b", "circuit"])
            return QmaInstance(
                verifier=_parse_or_schema_error(data["circuit"], "circuit"),
                m=int(data["m"]),
                k=int(data["k"]),
                a=_num_from_json(data["a"]),
                b=_num_from_json(data["b"]),
                label=data.get("label"),
            )
        if kind == "qam":
            _require(data, ["s", "m", "k", "a", "b", "circuits"])
            if not isinstance(data["circuits"], dict):
                raise SchemaError("field 'circuits' must map coin strings to circuit text")
            family = {
                y: _parse_or_schema_error(text, f"circuits[{y!r}]")
                for y, text in data["circuits"].items()
            }
            return QamInstance(
                s=int(data["s"]),
                family=family,
                m=int(data["m"]),
                k=int(data["k"]),
                a=_num_from_json(data["a"]),
                b=_num_from_json(data["b"]),
            )
        if kind == "qmam":
            _require(data, ["k", "m", "epsilon", "v1", "v2"])
            return QipInstance(
                v1=_parse_or_schema_error(data["v1"], "v1"),
                v2=_parse_or_schema_error(data["v2"], "v2"),
                k=int(data["k"]),
                m=int(data["m"]),
                epsilon=_num_from_json(data["epsilon"]),
            )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"invalid {kind} instance: {exc}") from exc
    raise SchemaError(f"unknown instance type {kind!r}")


def write_atomic(path: Union[str, Path], text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a torn file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_instance(inst: Instance, path: Union[str, Path]) -> None:
    write_atomic(path, json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n")


def load_instance(path: Union[str, Path]) -> Instance:
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    return instance_from_dict(data)


# --- generators ---


def _random_gates(rng: np.random.Generator, width: int, count: int) -> list[Gate]:
    gates: list[Gate] = []
    for _ in range(count):
        kind = int(rng.integers(0, 3 if width >= 3 else 2))
        if kind == 0:
            gates.append(hadamard(int(rng.integers(0, width))))
        elif kind == 1:
            gates.append(ishift(int(rng.integers(0, width))))
        else:
            q = [int(x) for x in rng.permutation(width)[:3]]
            gates.append(toffoli(q[0], q[1], q[2]))
    return gates


def _coin_pattern_gates(
    coin_qubits: Sequence[int], pattern: int, target: int, borrow: int
) -> list[Gate]:
    """Flip target iff the coin qubits spell the given pattern."""
    d = len(coin_qubits)
    flips: list[Gate] = []
    for pos, q in enumerate(coin_qubits):
        if not (pattern >> (d - 1 - pos)) & 1:
            flips.extend(x_gates(q))
    core = multi_controlled_x_gates(list(coin_qubits), target, [borrow])
    return flips + core + flips


def _dyadic_hit_circuit(width: int, coin_qubits: Sequence[int], count: int, borrow: int) -> Circuit:
    """Toss the coin qubits and flip the output on `count` chosen patterns.

    The output qubit ends XORed with an indicator of probability
    count / 2^len(coin_qubits), exactly.
    """
    gates = [hadamard(q) for q in coin_qubits]
    for pattern in range(count):
        gates += _coin_pattern_gates(coin_qubits, pattern, 0, borrow)
    return circuit(width, gates)


def _generate_qma_p(target, m: int, k: int) -> QmaInstance:
    """Verifier whose top acceptance eigenvalue is an exact dyadic near target.

    Work coins drive a minterm indicator XORed onto the output qubit, so the
    spectrum is {count/2^d, 1 - count/2^d}; the realized top eigenvalue is
    re-measured and declared as the threshold a.
    """
    if m < 1 or k < 2:
        raise ValueError("qma-p needs m >= 1 and k >= 2 (coins plus a borrow)")
    _check_width(m + k, exact=True)
    goal = as_fraction(target)
    if not 0 <= goal <= 1:
        raise ValueError(f"target must be in [0,1], got {goal}")
    d = k - 1
    while d > 1 and (goal * 2 ** (d - 1)).denominator == 1:
        d -= 1  # smallest coin count that realizes the target exactly
    count = min(1 << d, max(0, round(goal * (1 << d))))
    coin_qubits = list(range(m, m + d))
    verifier = _dyadic_hit_circuit(m + k, coin_qubits, count, borrow=m + d)
    inst = QmaInstance(verifier=verifier, m=m, k=k, a=Fraction(3, 4), b=Fraction(1, 4))
    realized = Fraction(max(count, (1 << d) - count), 1 << d)
    top = float(acceptance_spectrum(inst.q_operator()).eigenvalues[0])
    if abs(top - float(realized)) > 1e-9:
        raise AssertionError(f"realized spectrum {top} != declared {realized}")
    if realized == 1:
        a, b = Fraction(1), Fraction(1, 2)
    else:
        a, b = realized, realized / 2
    return QmaInstance(verifier=verifier, m=m, k=k, a=a, b=b, label="yes")


def _generate_qam_bounded(s: int, m: int, k: int, error) -> QamInstance:
    """Coin family whose expected rejection is a dyadic value <= error.

    All coins but one accept perfectly; the all-zero coin hides a two-coin
    miss whose weight is the largest quarter-multiple under error * 2^s.
    """
    if s < 1 or m < 1 or k < 3:
        raise ValueError("qam-bounded needs s >= 1, m >= 1, k >= 3")
    _check_width(m + k, exact=True)
    budget = as_fraction(error) * (1 << s)
    miss_quarters = min(2, int(budget * 4 // 1))
    if miss_quarters < 1:
        raise ValueError(f"error budget {error} too small to realize with two coins")
    perfect = circuit(m + k, [*x_gates(0)])
    coins = list(range(m, m + 2))
    lossy_gates = [hadamard(q) for q in coins]
    for pattern in range(miss_quarters):
        lossy_gates += _coin_pattern_gates(coins, pattern, 0, borrow=m + 2)
    lossy_gates += x_gates(0)
    lossy = circuit(m + k, lossy_gates)
    family = {y: perfect for y in coin_strings(s)}
    family["0" * s] = lossy
    return QamInstance(s=s, family=family, m=m, k=k, a=Fraction(2, 3), b=Fraction(1, 3))


def generate_instance(kind: str, seed: int, **params) -> Instance:
    """Deterministic seeded instance construction for the supported kinds.

    qma-p: target (rational), m, k; exact-by-construction spectrum.
    qma-random / qam-random: random gate lists with conventional thresholds.
    qam-bounded: s, m, k, error; passes the 2/3-fraction precondition.
    qip-perfect: k, m; second transformation inverts the first then flips
    the output, so the honest value is exactly 1.
    qip-no: k, m, coins; soundness error exactly 2^-coins (0 when coins=0).
    """
    rng = _rng(seed)
    if kind == "qma-p":
        return _generate_qma_p(
            params.get("target", "1/2"),
            int(params.get("m", 1)),
            int(params.get("k", 2)),
        )
    if kind == "qma-random":
        m = int(params.get("m", 1))
        k = int(params.get("k", 2))
        _check_width(m + k, exact=True)
        gates = _random_gates(rng, m + k, int(params.get("gates", 3 * (m + k))))
        return QmaInstance(
            verifier=circuit(m + k, gates), m=m, k=k, a=Fraction(3, 4), b=Fraction(1, 4)
        )
    if kind == "qam-bounded":
        return _generate_qam_bounded(
            int(params.get("s", 3)),
            int(params.get("m", 1)),
            int(params.get("k", 3)),
            params.get("error", "1/20"),
        )
    if kind == "qam-random":
        s = int(params.get("s", 1))
        m = int(params.get("m", 1))
        k = int(params.get("k", 2))
        _check_width(m + k, exact=True)
        family = {
            y: circuit(m + k, _random_gates(rng, m + k, int(params.get("gates", 3 * (m + k)))))
            for y in coin_strings(s)
        }
        return QamInstance(s=s, family=family, m=m, k=k, a=Fraction(2, 3), b=Fraction(1, 3))
    if kind == "qip-perfect":
        k = int(params.get("k", 1))
        m = int(params.get("m", 1))
        _check_width(k + m, exact=False)
        v1 = circuit(k + m, _random_gates(rng, k + m, int(params.get("gates", 8))))
        v2 = circuit(k + m, [*dagger(v1).gates, *x_gates(0)])
        return QipInstance(v1=v1, v2=v2, k=k, m=m, epsilon=Fraction(1))
    if kind == "qip-no":
        k = int(params.get("k", 3))
        m = int(params.get("m", 1))
        coins = int(params.get("coins", 2))
        if coins and k < coins + 1:
            raise ValueError("qip-no needs k >= coins + 1")
        _check_width(k + m, exact=False)
        gates: list[Gate] = [hadamard(q) for q in range(1, 1 + coins)]
        if coins:
            gates += multi_controlled_x_gates(list(range(1, 1 + coins)), 0, [k + m - 1])
        return QipInstance(
            v1=circuit(k + m),
            v2=circuit(k + m, gates),
            k=k,
            m=m,
            epsilon=Fraction(1, 1 << coins) if coins else Fraction(0),
        )
    raise ValueError(f"unknown kind {kind!r}; expected one of {GENERATOR_KINDS}")


def _check_width(width: int, exact: bool) -> None:
    cap = width_cap(exact)
    if width > cap:
        raise WidthCapError(f"width {width} exceeds cap {cap}")


# --- experiment orchestration ---


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a protocol, an instance file, and a compute mode."""

    protocol: str
    instance: str
    mode: str
    seed: int = 0
    reps: Optional[int] = None
    copies: Optional[int] = None
    restarts: Optional[int] = None
    exact: bool = False
    out: Optional[str] = None

    def __post_init__(self):
        if self.protocol not in VALID_MODES:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.mode not in VALID_MODES[self.protocol]:
            raise ValueError(
                f"mode {self.mode!r} not valid for {self.protocol}; "
                f"choose from {VALID_MODES[self.protocol]}"
            )
        if self.mode == "sample" and self.seed is None:
            raise ValueError("sampling modes require a seed")

    def echo(self) -> dict:
        return {
            "protocol": self.protocol,
            "instance": self.instance,
            "mode": self.mode,
            "seed": self.seed,
            "reps": self.reps,
            "copies": self.copies,
            "restarts": self.restarts,
            "exact": self.exact,
        }


def _top_witness(inst: QmaInstance) -> tuple[float, StateVector]:
    decomp = acceptance_spectrum(inst.q_operator())
    top = float(decomp.eigenvalues[0])
    vec = decomp.vectors[:, 0]
    return top, StateVector.from_amplitudes([complex(x) for x in vec])


def _run_qma(config: ExperimentConfig, inst: QmaInstance) -> tuple[dict, dict, dict, dict]:
    top, witness = _top_witness(inst)
    values: dict = {"top_eigenvalue": top, "gap_q": inst.gap_q}
    residuals: dict = {}
    checks: dict = {}
    if config.copies is not None:
        amplified = amplify_by_copies(inst, config.copies)
        acc = float(amplified.acceptance_probability(top))
        values.update(
            {
                "copies": amplified.copies,
                "message_qubits": amplified.message_width,
                "acceptance": acc,
            }
        )
        row = {"N_or_t": amplified.copies, "message_qubits": amplified.message_width}
    else:
        n_events = config.reps if config.reps is not None else 8 * inst.gap_q**2
        analytic = float(analytic_acceptance([(top, 1)], n_events, inst.a, inst.b))
        values.update({"n_events": n_events, "message_qubits": inst.m, "analytic": analytic})
        if config.mode == "enumerate":
            dist = run_alternating_measurements(inst, witness, n_events, mode="enumerate")
            acc = float(dist.acceptance_probability())
            residuals["enumerate_vs_analytic"] = abs(acc - analytic)
            checks["enumerate_matches_analytic"] = residuals["enumerate_vs_analytic"] < 1e-9
            residuals["distribution_total"] = abs(float(dist.total()) - 1.0)
            checks["distribution_normalized"] = residuals["distribution_total"] < 1e-9
        elif config.mode == "sample":
            draws = 256
            hits = 0
            for i in range(draws):
                _, accepted = run_alternating_measurements(
                    inst, witness, n_events, mode="sample", seed=config.seed + i
                )
                hits += bool(accepted)
            acc = hits / draws
            sigma = math.sqrt(max(analytic * (1 - analytic), 1e-12) / draws)
            residuals["sample_vs_analytic"] = abs(acc - analytic)
            checks["sample_within_noise"] = residuals["sample_vs_analytic"] <= 6 * sigma + 1e-9
            values["sample_draws"] = draws
        else:
            acc = analytic
        values["acceptance"] = acc
        row = {"N_or_t": n_events, "message_qubits": inst.m}
    if config.exact:
        cert = counting_certificate(inst)
        values["certificate"] = {"h": cert.h, "g": cert.g}
        residuals["certificate_vs_trace"] = abs(
            float(cert.value) - float(np.trace(inst.q_operator()).real)
        )
        checks["certificate_matches_trace"] = residuals["certificate_vs_trace"] < 1e-12
    error = 1.0 - values["acceptance"] if top >= float(inst.a + inst.b) / 2 else values["acceptance"]
    row["error"] = error
    values["error"] = error
    return values, residuals, checks, row


def _run_qam(config: ExperimentConfig, inst: QamInstance) -> tuple[dict, dict, dict, dict]:
    spectra = coin_spectra(inst)  # also enforces the exact complement identity
    mu = {y: float(spectra[y].accept[0]) for y in inst.coins()}
    expected_error = 1.0 - sum(mu.values()) / len(mu)
    values: dict = {"mu_by_coin": mu, "expected_error": expected_error}
    residuals: dict = {}
    checks: dict = {"complement_identity": True}
    if config.mode == "analytic":
        n = config.reps if config.reps is not None else 2
        worst = 0.0
        for y_tuple in product(inst.coins(), repeat=n):
            lam, independent = parallel_repetition_value(inst, n, list(y_tuple))
            worst = max(worst, abs(lam - independent))
        residuals["repetition_vs_independent"] = worst
        checks["repetition_matches_independent"] = worst < 1e-9
        values["repetitions"] = n
        row = {"N_or_t": n, "message_qubits": inst.m, "error": expected_error}
    else:
        cap = None if config.mode == "enumerate" else 64 * max(1, inst.s)
        report = markov_check(inst, "yes", seed=config.seed, sample_cap=cap)
        values.update(
            {
                "fraction_good": float(report.fraction_good),
                "precondition_ok": report.precondition_ok,
                "exhaustive": report.exhaustive,
            }
        )
        checks["markov_two_thirds"] = (not report.precondition_ok) or report.passes
        row = {"N_or_t": 1, "message_qubits": inst.m, "error": expected_error}
    return values, residuals, checks, row


def _run_qmam(config: ExperimentConfig, base: QipInstance) -> tuple[dict, dict, dict, dict]:
    inst = build_qmam(base)
    honest = honest_value(inst)
    bound = soundness_bound(base)
    values: dict = {
        "honest_value": honest,
        "bound": bound,
        "epsilon": float(base.epsilon),
    }
    residuals: dict = {}
    checks: dict = {"honest_within_unit": -1e-9 <= honest <= 1 + 1e-9}
    if config.mode == "sample":
        restarts = config.restarts if config.restarts is not None else 16
        result = optimize_cheating(inst, restarts=restarts, seed=config.seed)
        values.update(
            {
                "cheat_value": result.value,
                "converged": result.converged,
                "iterations": result.iterations,
                "restarts": restarts,
            }
        )
        residuals["cheat_over_bound"] = max(0.0, result.value - bound)
        checks["cheat_below_bound"] = result.value <= bound + 1e-4
        checks["cheat_reaches_half"] = result.value >= 0.5 - 1e-6
        error = result.value - 0.5
    else:
        error = 1.0 - honest
    row = {"N_or_t": config.restarts or 1, "message_qubits": base.m, "error": error}
    values["error"] = error
    return values, residuals, checks, row


def run_experiment(config: ExperimentConfig) -> dict:
    """Dispatch one config to its protocol module and assemble the report.

    The report echoes the config, records computed values and residuals, and
    carries a checks map; the experiment counts as passing when every check
    is true.  When config.out is set the JSON is written atomically.
    """
    started = time.monotonic()
    inst = load_instance(config.instance)
    expected = {"qma": QmaInstance, "qam": QamInstance, "qmam": QipInstance}[config.protocol]
    if not isinstance(inst, expected):
        raise SchemaError(
            f"instance {config.instance} is {type(inst).__name__}, "
            f"but protocol {config.protocol} was requested"
        )
    if config.protocol == "qma":
        values, residuals, checks, row = _run_qma(config, inst)
    elif config.protocol == "qam":
        values, residuals, checks, row = _run_qam(config, inst)
    else:
        values, residuals, checks, row = _run_qmam(config, inst)
    report = {
        "config": config.echo(),
        "values": values,
        "residuals": residuals,
        "checks": checks,
        "passed": all(checks.values()),
        "table_row": row,
        "rng": RNG_NAME,
        "wall_clock_seconds": time.monotonic() - started,
    }
    if config.out:
        write_atomic(config.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def run_batch(configs: Sequence[ExperimentConfig], max_workers: Optional[int] = None) -> list[dict]:
    """Run several experiments concurrently; reports come back in input order."""
    if not configs:
        return []
    with ThreadPoolExecutor(max_workers=max_workers or min(8, len(configs))) as pool:
        return list(pool.map(run_experiment, configs))


def emit_tables(reports: Sequence[dict]) -> str:
    """Render report table rows as CSV with a stable column order.

    Every report must carry the same table_row keys; an empty list yields a
    header-only CSV with the canonical sweep columns.
    """
    if not reports:
        return ",".join(TABLE_COLUMNS) + "\n"
    rows = []
    for report in reports:
        row = report.get("table_row")
        if not isinstance(row, dict):
            raise SchemaError("report lacks a table_row object")
        rows.append(row)
    keys = sorted(rows[0])
    canonical = [c for c in TABLE_COLUMNS if c in rows[0]]
    columns = canonical + [k for k in keys if k not in canonical]
    for row in rows[1:]:
        if sorted(row) != keys:
            raise SchemaError(
                f"heterogeneous table rows: {sorted(row)} vs {keys}"
            )
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_csv_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text
