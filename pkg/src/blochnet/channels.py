"""Quantum noise channels as Kraus-operator lists.

The catalog covers bit-flip, phase-flip, bit-phase-flip, general Pauli,
depolarizing, generalized amplitude damping and a correlated two-qubit
amplitude damping channel, plus tensor-product composition. Every
constructor yields a trace-preserving channel (completeness residual
below 1e-10).

Channels can also be built from a compact textual grammar::

    spec := term ('*' term)*
    term := NAME '(' num (',' num)* ')' | 'I'

with NAME in {X, Z, Y, PAULI, DEP, GAD, CAD} taking 1, 1, 1, 4, 1, 2, 2
parameters respectively. '*' denotes the tensor product.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .qstate import PAULI_1Q, num_qubits_from_dim

CPTP_TOL = 1e-10


class ChannelSpecError(ValueError):
    """Raised for malformed channel-spec strings; carries the text position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class KrausChannel:
    """An n-qubit channel rho -> sum_i E_i rho E_i^dagger."""

    n: int
    kraus: tuple
    label: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        dim = 2**self.n
        for op in self.kraus:
            if op.shape != (dim, dim):
                raise ValueError("Kraus operators must all be %dx%d" % (dim, dim))
        residual = cptp_residual(self)
        if residual > CPTP_TOL:
            raise ValueError(
                "Kraus operators violate trace preservation (residual %.3e)" % residual
            )

    def __call__(self, rho):
        return apply_channel(self, rho)


def cptp_residual(ch):
    """Frobenius norm of sum_i E_i^dagger E_i - I."""
    dim = 2**ch.n
    acc = np.zeros((dim, dim), dtype=complex)
    for op in ch.kraus:
        acc += op.conj().T @ op
    return float(np.linalg.norm(acc - np.eye(dim)))


def validate_cptp(ch, tol=CPTP_TOL):
    """(passes, residual) for the trace-preservation check."""
    residual = cptp_residual(ch)
    return residual < tol, residual


def apply_channel(ch, rho):
    """Apply the channel: sum_i E_i rho E_i^dagger."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2**ch.n, 2**ch.n):
        raise ValueError("dimension mismatch between channel and state")
    out = np.zeros_like(rho)
    for op in ch.kraus:
        out += op @ rho @ op.conj().T
    return out


def identity_channel(n=1):
    return KrausChannel(n, (np.eye(2**n, dtype=complex),), "I" if n == 1 else "I" + "*I" * (n - 1))


def _check_prob(p, name="p"):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def bit_flip(p):
    """Kraus {sqrt(1-p) I, sqrt(p) X}."""
    _check_prob(p)
    kraus = (np.sqrt(1 - p) * PAULI_1Q["I"], np.sqrt(p) * PAULI_1Q["X"])
    return KrausChannel(1, kraus, f"X({p:g})", {"p": p})


def phase_flip(p):
    """Kraus {sqrt(1-p) I, sqrt(p) Z}."""
    _check_prob(p)
    kraus = (np.sqrt(1 - p) * PAULI_1Q["I"], np.sqrt(p) * PAULI_1Q["Z"])
    return KrausChannel(1, kraus, f"Z({p:g})", {"p": p})


def bit_phase_flip(p):
    """Kraus {sqrt(1-p) I, sqrt(p) Y}."""
    _check_prob(p)
    kraus = (np.sqrt(1 - p) * PAULI_1Q["I"], np.sqrt(p) * PAULI_1Q["Y"])
    return KrausChannel(1, kraus, f"Y({p:g})", {"p": p})


def pauli_channel(p0, p1, p2, p3):
    """Kraus {sqrt(p0) I, sqrt(p1) X, sqrt(p2) Y, sqrt(p3) Z}; probabilities sum to 1."""
    for name, p in zip("p0 p1 p2 p3".split(), (p0, p1, p2, p3)):
        _check_prob(p, name)
    if abs(p0 + p1 + p2 + p3 - 1.0) > 1e-12:
        raise ValueError("Pauli probabilities must sum to 1")
    kraus = (
        np.sqrt(p0) * PAULI_1Q["I"],
        np.sqrt(p1) * PAULI_1Q["X"],
        np.sqrt(p2) * PAULI_1Q["Y"],
        np.sqrt(p3) * PAULI_1Q["Z"],
    )
    return KrausChannel(
        1, kraus, f"PAULI({p0:g},{p1:g},{p2:g},{p3:g})",
        {"p0": p0, "p1": p1, "p2": p2, "p3": p3},
    )


def depolarizing(p):
    """Single-qubit depolarizing channel: keep with prob 1-p, else fully mix."""
    _check_prob(p)
    kraus = (
        np.sqrt(1 - 3 * p / 4) * PAULI_1Q["I"],
        (np.sqrt(p) / 2) * PAULI_1Q["X"],
        (np.sqrt(p) / 2) * PAULI_1Q["Y"],
        (np.sqrt(p) / 2) * PAULI_1Q["Z"],
    )
    return KrausChannel(1, kraus, f"DEP({p:g})", {"p": p})


def depolarizing_d(p, rho):
    """d-dimensional depolarizing action: (1-p) rho + p I_d / d.

    Affine form; for a single qubit it coincides with depolarizing(p).
    """
    _check_prob(p)
    rho = np.asarray(rho, dtype=complex)
    num_qubits_from_dim(rho.shape[0])
    d = rho.shape[0]
    return (1 - p) * rho + p * np.eye(d) / d


def _gad_e01(gamma):
    e0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    e1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return e0, e1


def generalized_amplitude_damping(p, gamma):
    """Finite-temperature amplitude damping with stationary state diag(p, 1-p)."""
    _check_prob(p)
    _check_prob(gamma, "gamma")
    e0, e1 = _gad_e01(gamma)
    e2 = np.array([[np.sqrt(1 - gamma), 0], [0, 1]], dtype=complex)
    e3 = np.array([[0, 0], [np.sqrt(gamma), 0]], dtype=complex)
    kraus = (
        np.sqrt(p) * e0,
        np.sqrt(p) * e1,
        np.sqrt(1 - p) * e2,
        np.sqrt(1 - p) * e3,
    )
    return KrausChannel(1, kraus, f"GAD({p:g},{gamma:g})", {"p": p, "gamma": gamma})


def correlated_ad(eta, mu):
    """Two-qubit correlated amplitude damping.

    Convex combination (1-mu) N0 + mu N1 of independent dampings
    N0 = {E0 x E0, E0 x E1, E1 x E0, E1 x E1} (damping rate eta) and a
    jointly acting damping N1 = {B0, B1}, folded into a single Kraus list
    by sqrt-weighting. Basis ordering is |00>, |01>, |10>, |11|.
    """
    _check_prob(eta, "eta")
    _check_prob(mu, "mu")
    e0, e1 = _gad_e01(eta)
    a_ops = [np.kron(e0, e0), np.kron(e0, e1), np.kron(e1, e0), np.kron(e1, e1)]
    b0 = np.diag([1, 1, 1, np.sqrt(eta)]).astype(complex)
    b1 = np.zeros((4, 4), dtype=complex)
    b1[0, 3] = np.sqrt(1 - eta)
    kraus = tuple(np.sqrt(1 - mu) * a for a in a_ops) + tuple(
        np.sqrt(mu) * b for b in (b0, b1)
    )
    return KrausChannel(2, kraus, f"CAD({eta:g},{mu:g})", {"eta": eta, "mu": mu})


def tensor(a, b):
    """Tensor product of two channels: all pairwise Kraus products."""
    kraus = tuple(np.kron(ka, kb) for ka in a.kraus for kb in b.kraus)
    params = {f"a.{k}": v for k, v in a.params.items()}
    params.update({f"b.{k}": v for k, v in b.params.items()})
    return KrausChannel(a.n + b.n, kraus, f"{a.label}*{b.label}", params)


_CONSTRUCTORS = {
    "X": (bit_flip, 1),
    "Z": (phase_flip, 1),
    "Y": (bit_phase_flip, 1),
    "PAULI": (pauli_channel, 4),
    "DEP": (depolarizing, 1),
    "GAD": (generalized_amplitude_damping, 2),
    "CAD": (correlated_ad, 2),
}

_TOKEN_RE = re.compile(r"\s*(?:(?P<name>[A-Za-z]+)|(?P<num>[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)|(?P<punct>[(),*]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ChannelSpecError(f"unexpected character {stripped[0]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


def parse_channel_spec(text):
    """Parse a channel-spec string like "Z(0.2)*X(0.2)" into a KrausChannel."""
    tokens = _tokenize(text)
    if not tokens:
        raise ChannelSpecError("empty channel spec", 0)

    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else (None, None, len(text))

    def term():
        nonlocal idx
        kind, value, pos = peek()
        if kind != "name":
            raise ChannelSpecError("expected channel name", pos)
        idx += 1
        if value == "I":
            return identity_channel(1)
        if value not in _CONSTRUCTORS:
            raise ChannelSpecError(f"unknown channel name {value!r}", pos)
        ctor, arity = _CONSTRUCTORS[value]
        kind, _, pos = peek()
        if kind != "punct" or tokens[idx][1] != "(":
            raise ChannelSpecError("expected '('", pos)
        idx += 1
        args = []
        while True:
            kind, num, pos = peek()
            if kind != "num":
                raise ChannelSpecError("expected a number", pos)
            args.append(float(num))
            idx += 1
            kind, punct, pos = peek()
            if kind == "punct" and punct == ",":
                idx += 1
                continue
            if kind == "punct" and punct == ")":
                idx += 1
                break
            raise ChannelSpecError("expected ',' or ')'", pos)
        if len(args) != arity:
            raise ChannelSpecError(
                f"{value} takes {arity} parameter(s), got {len(args)}", pos
            )
        return ctor(*args)

    result = term()
    while idx < len(tokens):
        kind, punct, pos = peek()
        if kind != "punct" or punct != "*":
            raise ChannelSpecError("expected '*'", pos)
        idx += 1
        result = tensor(result, term())
    return result
