"""Circuit plans and their dense simulation against a concrete unitary.

A plan alternates SU(2) ancilla rotations with signal applications. The
ancilla is the most-significant tensor factor, so the assembled matrix has
the block layout [[top_left, top_right], [bottom_left, bottom_right]] and
the signal operator is diag(U, I); its conjugate variant is diag(I, Udg).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .poly import LaurentPoly

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Rotation:
    theta: float
    phi: float
    lam: float = 0.0


@dataclass(frozen=True)
class SignalU:
    pass


@dataclass(frozen=True)
class SignalUdg:
    pass


def rotation_matrix(theta: float, phi: float, lam: float = 0.0) -> np.ndarray:
    return np.array([
        [np.exp(1j * (lam + phi)) * np.cos(theta), np.exp(1j * phi) * np.sin(theta)],
        [np.exp(1j * lam) * np.sin(theta), -np.cos(theta)],
    ])


@dataclass(frozen=True, eq=False)
class CircuitPlan:
    gates: tuple

    def __post_init__(self):
        gates = tuple(self.gates)
        if not gates:
            raise InvalidInputError("plan must contain at least one gate")
        for i, gate in enumerate(gates):
            if i % 2 == 0:
                if not isinstance(gate, Rotation):
                    raise InvalidInputError(f"gate {i} must be a rotation")
                if i > 0 and gate.lam != 0.0:
                    raise InvalidInputError(
                        "only the first rotation may carry a nonzero lambda"
                    )
            elif not isinstance(gate, (SignalU, SignalUdg)):
                raise InvalidInputError(f"gate {i} must be a signal application")
        if not isinstance(gates[-1], Rotation):
            raise InvalidInputError("plan must end with a rotation")
        object.__setattr__(self, "gates", gates)

    @property
    def degree(self) -> int:
        """Number of signal applications."""
        return len(self.gates) // 2

    @property
    def k_negative(self) -> int:
        return sum(isinstance(g, SignalUdg) for g in self.gates)

    def to_json_dict(self) -> dict:
        out = []
        for gate in self.gates:
            if isinstance(gate, Rotation):
                out.append({
                    "kind": "rotation",
                    "theta": float(gate.theta),
                    "phi": float(gate.phi),
                    "lambda": float(gate.lam),
                })
            elif isinstance(gate, SignalU):
                out.append({"kind": "signal"})
            else:
                out.append({"kind": "signal_dag"})
        return {"gates": out}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "CircuitPlan":
        try:
            gates = []
            for entry in obj["gates"]:
                kind = entry["kind"]
                if kind == "rotation":
                    gates.append(Rotation(float(entry["theta"]), float(entry["phi"]),
                                          float(entry.get("lambda", 0.0))))
                elif kind == "signal":
                    gates.append(SignalU())
                elif kind == "signal_dag":
                    gates.append(SignalUdg())
                else:
                    raise InvalidInputError(f"unknown gate kind {kind!r}")
            return cls(tuple(gates))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed circuit JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "CircuitPlan":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(obj)


def plan_circuit(angles, k_negative: int = 0) -> CircuitPlan:
    """Gate list R0, (signal, R1), ..., with the last k_negative signal
    slots conjugated; realizes e^{-ikx} P(e^{ix}) on the top-left block."""
    d = angles.degree
    if not 0 <= k_negative <= d:
        raise InvalidInputError(f"k_negative must be in [0, {d}], got {k_negative}")
    gates: list = [Rotation(float(angles.theta[0]), float(angles.phi[0]), angles.lam)]
    for j in range(1, d + 1):
        gates.append(SignalUdg() if j > d - k_negative else SignalU())
        gates.append(Rotation(float(angles.theta[j]), float(angles.phi[j])))
    return CircuitPlan(tuple(gates))


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    top_left: np.ndarray
    top_right: np.ndarray
    bottom_left: np.ndarray
    bottom_right: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.block([
            [self.top_left, self.top_right],
            [self.bottom_left, self.bottom_right],
        ])

    def unitarity_defect(self) -> float:
        v = self.matrix()
        eye = np.eye(v.shape[0])
        return float(np.linalg.norm(v.conj().T @ v - eye))


def _as_unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InvalidInputError("U must be a square matrix")
    defect = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))
    if defect > UNITARY_TOL * np.sqrt(u.shape[0]):
        raise InvalidInputError(f"U is not unitary (defect {defect:.3e})")
    return u


def simulate(plan: CircuitPlan, u) -> BlockEncoding:
    """Multiply out the plan against U, tracked as four N x N blocks."""
    u = _as_unitary(u)
    n = u.shape[0]
    eye = np.eye(n, dtype=complex)
    udg = u.conj().T

    first = plan.gates[0]
    r = rotation_matrix(first.theta, first.phi, first.lam)
    blocks = [[r[0, 0] * eye, r[0, 1] * eye], [r[1, 0] * eye, r[1, 1] * eye]]
    for gate in plan.gates[1:]:
        if isinstance(gate, Rotation):
            r = rotation_matrix(gate.theta, gate.phi, gate.lam)
            top = [r[0, 0] * blocks[0][0] + r[0, 1] * blocks[1][0],
                   r[0, 0] * blocks[0][1] + r[0, 1] * blocks[1][1]]
            bot = [r[1, 0] * blocks[0][0] + r[1, 1] * blocks[1][0],
                   r[1, 0] * blocks[0][1] + r[1, 1] * blocks[1][1]]
            blocks = [top, bot]
        elif isinstance(gate, SignalU):
            blocks[0] = [u @ blocks[0][0], u @ blocks[0][1]]
        else:
            blocks[1] = [udg @ blocks[1][0], udg @ blocks[1][1]]
    return BlockEncoding(blocks[0][0], blocks[0][1], blocks[1][0], blocks[1][1])


def poly_of_unitary(p: LaurentPoly, u) -> np.ndarray:
    """P(U) by explicit matrix powers; U^{-k} = (Udg)^k."""
    u = np.asarray(u, dtype=complex)
    if p.min_degree >= 0:
        cur = np.linalg.matrix_power(u, p.min_degree)
    else:
        cur = np.linalg.matrix_power(u.conj().T, -p.min_degree)
    out = np.zeros_like(cur)
    for i, c in enumerate(p.coeffs):
        out += c * cur
        if i < len(p.coeffs) - 1:
            cur = cur @ u
    return out


def verify_block(plan: CircuitPlan, u, p_target: LaurentPoly) -> float:
    """Frobenius error of the top-left block against P(U), normalized by sqrt(N)."""
    enc = simulate(plan, u)
    target = poly_of_unitary(p_target, np.asarray(u, dtype=complex))
    n = target.shape[0]
    return float(np.linalg.norm(enc.top_left - target) / np.sqrt(n))


def apply_to_state(plan: CircuitPlan, u, state) -> np.ndarray:
    """Apply the assembled 2N x 2N unitary to a normalized state vector."""
    u = _as_unitary(u)
    n = u.shape[0]
    state = np.asarray(state, dtype=complex)
    if state.shape != (2 * n,):
        raise InvalidInputError(f"state must have length {2 * n}")
    if abs(np.linalg.norm(state) - 1.0) > 1e-8:
        raise InvalidInputError("state must be normalized")
    udg = u.conj().T

    s0, s1 = state[:n].copy(), state[n:].copy()
    first = plan.gates[0]
    r = rotation_matrix(first.theta, first.phi, first.lam)
    s0, s1 = r[0, 0] * s0 + r[0, 1] * s1, r[1, 0] * s0 + r[1, 1] * s1
    for gate in plan.gates[1:]:
        if isinstance(gate, Rotation):
            r = rotation_matrix(gate.theta, gate.phi, gate.lam)
            s0, s1 = r[0, 0] * s0 + r[0, 1] * s1, r[1, 0] * s0 + r[1, 1] * s1
        elif isinstance(gate, SignalU):
            s0 = u @ s0
        else:
            s1 = udg @ s1
    return np.concatenate([s0, s1])


def random_unitary(n: int, seed: int = 0) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def unitary_to_json_dict(u: np.ndarray) -> dict:
    u = np.asarray(u, dtype=complex)
    return {"n": u.shape[0], "re": u.real.tolist(), "im": u.imag.tolist()}


def unitary_from_json_dict(obj: dict) -> np.ndarray:
    try:
        n = int(obj["n"])
        u = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed unitary JSON: {exc}") from exc
    if u.shape != (n, n):
        raise InvalidInputError(f"unitary JSON shape {u.shape} != ({n}, {n})")
    return u
