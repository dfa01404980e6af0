"""Application kernels built on completion + angles + circuit.

Jacobi-Anger coefficient generation for trigonometric phase functions,
generic Fourier-series fitting, root-of-unity phase gates, diagonal-matrix
synthesis over U_omega, and circulant synthesis via DFT conjugation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import compute_angles
from .circuit import CircuitPlan, plan_circuit
from .completion import CompletionConfig, complete_via_optimization
from .errors import DegeneracyError, InvalidInputError, NonConvergenceError
from .poly import LaurentPoly, sup_norm_sq

_BESSEL_SERIES_CUTOFF = 12.0


def _bessel_series(n: int, t: float) -> float:
    """Ascending power series, adequate for |t| <= 12."""
    half = 0.5 * t
    # first term (t/2)^n / n! via logs to dodge overflow at larger n
    if half == 0.0:
        return 1.0 if n == 0 else 0.0
    term = math.exp(n * math.log(half) - math.lgamma(n + 1))
    total = term
    x2 = half * half
    for k in range(1, 400):
        term *= -x2 / (k * (n + k))
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def _bessel_miller(n: int, t: float) -> float:
    """Downward recurrence with sum normalization J0 + 2*sum J_{2k} = 1."""
    top = max(n, int(math.ceil(t)))
    start = top + 40 + int(14.0 * top ** (1.0 / 3.0))
    if start % 2:
        start += 1
    j_plus = 0.0
    j_cur = 1e-30
    norm = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        j_minus = (2.0 * k / t) * j_cur - j_plus
        j_plus = j_cur
        j_cur = j_minus
        if k % 2 == 0:
            norm += 2.0 * j_plus  # accumulates J_k for even k
        if k - 1 == n:
            result = j_cur
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_plus *= 1e-250
            norm *= 1e-250
            result *= 1e-250
    norm += j_cur  # J_0 term
    return result / norm


def bessel_j(n: int, t: float) -> float:
    """Bessel function of the first kind, integer order n >= 0, |t| <= 1e3.

    Ascending series for |t| <= 12, Miller's downward recurrence with sum
    normalization above; 1e-12 absolute accuracy over the documented range.
    """
    if n < 0 or n != int(n):
        raise InvalidInputError("order n must be a non-negative integer")
    n = int(n)
    t = float(t)
    sign = 1.0
    if t < 0.0:
        t = -t
        sign = -1.0 if n % 2 else 1.0  # J_n(-t) = (-1)^n J_n(t)
    if t == 0.0:
        return 1.0 if n == 0 else 0.0
    if t <= _BESSEL_SERIES_CUTOFF:
        return sign * _bessel_series(n, t)
    return sign * _bessel_miller(n, t)


def truncation_order(t: float, eps: float) -> int:
    """Smallest n' >= ceil(|t|) with sum_{|n| > n'} |J_n(t)| < eps.

    The tail is summed explicitly, stopping once terms drop below eps*1e-3.
    """
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    t = abs(float(t))
    n0 = int(math.ceil(t))
    cutoff = eps * 1e-3
    values = []
    n = n0 + 1
    while True:
        j = abs(bessel_j(n, t))
        values.append(j)
        if j < cutoff:
            break
        n += 1
        if n > n0 + 100000:
            raise NonConvergenceError("tail summation failed to terminate")
    # tail(n') for n' = n0 + i is 2 * sum(values[i:])
    suffix = np.cumsum(values[::-1])[::-1]
    for i in range(len(values)):
        if 2.0 * suffix[i] < eps:
            return n0 + i
    return n0 + len(values)


def _jacobi_anger(t: float, eps: float, cos_kind: bool) -> LaurentPoly:
    order = truncation_order(t, eps)
    ns = np.arange(-order, order + 1)
    mags = np.array([bessel_j(abs(int(n)), t) for n in ns])
    reflect = np.where((ns < 0) & (np.abs(ns) % 2 == 1), -1.0, 1.0)
    coeffs = mags * reflect  # J_n with J_{-n} = (-1)^n J_n
    if cos_kind:
        coeffs = coeffs * (1j ** np.mod(ns, 4))
    return LaurentPoly(coeffs, min_degree=-order)


def jacobi_anger_cos(t: float, eps: float) -> LaurentPoly:
    """Truncated expansion of e^{it cos(theta)}: coefficients i^n J_n(t)."""
    return _jacobi_anger(float(t), float(eps), cos_kind=True)


def jacobi_anger_sin(t: float, eps: float) -> LaurentPoly:
    """Truncated expansion of e^{it sin(theta)}: coefficients J_n(t)."""
    return _jacobi_anger(float(t), float(eps), cos_kind=False)


@dataclass(frozen=True)
class FourierFitConfig:
    m: int
    delta: float
    grid_size: int | None = None
    target_tol: float = 1e-8

    def __post_init__(self):
        if self.m < 0:
            raise InvalidInputError("M must be >= 0")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError("delta must be in (0, 1)")

    @property
    def effective_grid_size(self) -> int:
        return self.grid_size if self.grid_size is not None else 8 * (2 * self.m + 1)


@dataclass(frozen=True, eq=False)
class FourierFit:
    coeffs: np.ndarray  # c_m for m = -M..M in the basis e^{i pi m x / 2}
    m: int
    delta: float
    max_residual: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ms = np.arange(-self.m, self.m + 1)
        return np.exp(0.5j * np.pi * np.outer(x, ms)) @ self.coeffs


def fit_fourier_series(f, cfg: FourierFitConfig) -> FourierFit:
    """Least-squares fit of f on [-1+delta, 1-delta] in the basis e^{i pi m x/2}.

    The residual is re-measured on a 4x denser grid and reported as
    max_residual.
    """
    grid_size = cfg.effective_grid_size
    n_basis = 2 * cfg.m + 1
    if grid_size < n_basis:
        raise InvalidInputError(
            f"grid_size {grid_size} underdetermined for 2M+1 = {n_basis} coefficients"
        )
    lo, hi = -1.0 + cfg.delta, 1.0 - cfg.delta
    x = np.linspace(lo, hi, grid_size)
    ms = np.arange(-cfg.m, cfg.m + 1)
    design = np.exp(0.5j * np.pi * np.outer(x, ms))
    y = np.asarray(f(x), dtype=complex)
    if y.shape != x.shape:
        y = np.array([f(v) for v in x], dtype=complex)
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)

    x_dense = np.linspace(lo, hi, 4 * grid_size)
    y_dense = np.asarray(f(x_dense), dtype=complex)
    if y_dense.shape != x_dense.shape:
        y_dense = np.array([f(v) for v in x_dense], dtype=complex)
    fit_dense = np.exp(0.5j * np.pi * np.outer(x_dense, ms)) @ coeffs
    residual = float(np.max(np.abs(fit_dense - y_dense)))
    return FourierFit(coeffs=coeffs, m=cfg.m, delta=cfg.delta, max_residual=residual)


def named_function(name: str):
    """Named fit targets: const1, exp-arcsin:<t>, exp-sqrt:<t>."""
    if name == "const1":
        return lambda x: np.ones_like(np.asarray(x, dtype=float), dtype=complex)
    if name.startswith("exp-arcsin:"):
        t = float(name.split(":", 1)[1])
        return lambda x: np.exp(1j * t * np.arcsin(np.asarray(x, dtype=float)))
    if name.startswith("exp-sqrt:"):
        t = float(name.split(":", 1)[1])
        return lambda x: np.exp(1j * t * np.sqrt(np.asarray(x, dtype=float) + 1.0))
    raise InvalidInputError(f"unknown function name {name!r}")


@dataclass(frozen=True, eq=False)
class PhaseGateList:
    """Per-qubit phase angles, qubit index ascending (qubit 0 least significant)."""

    phases: np.ndarray

    def __post_init__(self):
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        if phases.size == 0:
            raise InvalidInputError("phase list must be non-empty")
        object.__setattr__(self, "phases", phases)

    @property
    def n_qubits(self) -> int:
        return len(self.phases)

    def induced_diagonal(self) -> np.ndarray:
        """Diagonal of the tensor product of the per-qubit phase gates."""
        diag = np.ones(1, dtype=complex)
        for q in range(self.n_qubits - 1, -1, -1):  # most significant first
            diag = np.kron(diag, np.array([1.0, np.exp(1j * self.phases[q])]))
        return diag


def synth_root_of_unity_plan(n_qubits: int) -> PhaseGateList:
    """Phase gates realizing U_omega = diag(omega_N^j): angle 2pi 2^q / N on qubit q."""
    if n_qubits < 1:
        raise InvalidInputError("n_qubits must be >= 1")
    big_n = 2 ** n_qubits
    return PhaseGateList(np.array([2.0 * np.pi * (2 ** q) / big_n for q in range(n_qubits)]))


def root_of_unity_diagonal(n_qubits: int) -> np.ndarray:
    """U_omega as a dense diagonal matrix."""
    big_n = 2 ** n_qubits
    return np.diag(np.exp(2j * np.pi * np.arange(big_n) / big_n))


def qft_matrix(n: int) -> np.ndarray:
    """QFT with the e^{+2 pi i jk / N} / sqrt(N) convention (see synth_circulant)."""
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def cyclic_permutation_matrix(n: int) -> np.ndarray:
    """The shift |j> -> |j+1 mod N>."""
    if n < 2:
        raise InvalidInputError("N must be >= 2")
    perm = np.zeros((n, n))
    perm[(np.arange(n) + 1) % n, np.arange(n)] = 1.0
    return perm


_SYNTH_CFG = CompletionConfig(objective_tol=1e-20, max_iters=60000, restarts=4)


def _dense_window(p: LaurentPoly):
    """Coefficients as a min_degree-0 vector plus the conjugate-signal count."""
    if p.min_degree >= 0:
        return np.concatenate([np.zeros(p.min_degree, dtype=complex), p.coeffs]), 0
    return p.coeffs.copy(), -p.min_degree


def synth_diagonal(p: LaurentPoly, n_qubits: int,
                   cfg: CompletionConfig | None = None) -> tuple[CircuitPlan, float]:
    """Plan over U_omega whose top-left block is diag(P(omega_N^j)) / scale.

    scale = sqrt(max(sup|P|^2, 1) + 1e-12); completion and angles run on
    P/scale.
    """
    if not isinstance(p, LaurentPoly):
        p = LaurentPoly(np.asarray(p, dtype=complex))
    big_n = 2 ** n_qubits
    if p.span > big_n - 1:
        raise InvalidInputError(
            f"degree span {p.span} exceeds N-1 = {big_n - 1}"
        )
    scale = float(np.sqrt(max(sup_norm_sq(p), 1.0) + 1e-12))
    dense, k_negative = _dense_window(p)
    a = dense / scale
    b, report = complete_via_optimization(a, cfg or _SYNTH_CFG)
    if report.final_objective > (cfg or _SYNTH_CFG).objective_tol:
        raise NonConvergenceError(
            f"completion stalled at objective {report.final_objective:.3e}"
        )
    angles = compute_angles(LaurentPoly(a), LaurentPoly(b))
    return plan_circuit(angles, k_negative=k_negative), scale


@dataclass(frozen=True, eq=False)
class CirculantSpec:
    n: int
    filter: LaurentPoly

    def __post_init__(self):
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise InvalidInputError("N must be a power of two, >= 2")
        if self.filter.span > self.n - 1:
            raise InvalidInputError("filter degree span must be <= N-1")

    @property
    def n_qubits(self) -> int:
        return self.n.bit_length() - 1


@dataclass(frozen=True, eq=False)
class CirculantSynthesis:
    """C / scale = QFTdg . (top-left of plan over U_omega) . QFT."""

    plan: CircuitPlan
    scale: float
    n: int
    pre: str = "dft"
    post: str = "idft"

    def to_json_dict(self) -> dict:
        return {
            "pre": self.pre,
            "plan": self.plan.to_json_dict(),
            "post": self.post,
            "scale": self.scale,
            "n": self.n,
        }


def circulant_matrix(spec: CirculantSpec) -> np.ndarray:
    """Brute-force C = sum_n c_n P^n from the cyclic permutation matrix."""
    perm = cyclic_permutation_matrix(spec.n)
    out = np.zeros((spec.n, spec.n), dtype=complex)
    for degree, c in zip(spec.filter.degrees(), spec.filter.coeffs):
        out += c * np.linalg.matrix_power(perm, int(degree) % spec.n)
    return out


def circular_convolve_bruteforce(x, filt: LaurentPoly, n: int) -> np.ndarray:
    """(x * c)_m = sum_k c_k x_{(m - k) mod N}, by direct double loop."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (n,):
        raise InvalidInputError(f"x must have length {n}")
    out = np.zeros(n, dtype=complex)
    for m in range(n):
        acc = 0.0 + 0.0j
        for k, c in zip(filt.degrees(), filt.coeffs):
            acc += c * x[(m - int(k)) % n]
        out[m] = acc
    return out


def synth_circulant(spec: CirculantSpec,
                    cfg: CompletionConfig | None = None) -> CirculantSynthesis:
    """GQSP plan for the circulant with symbol P: C = QFTdg P(U_omega) QFT.

    The DFT convention is pinned at runtime against the permutation matrix
    rather than assumed.
    """
    n_qubits = spec.n_qubits
    qft = qft_matrix(spec.n)
    perm_check = qft.conj().T @ root_of_unity_diagonal(n_qubits) @ qft
    if np.linalg.norm(perm_check - cyclic_permutation_matrix(spec.n)) > 1e-12 * spec.n:
        raise DegeneracyError("DFT convention check against the cyclic shift failed")
    plan, scale = synth_diagonal(spec.filter, n_qubits, cfg)
    return CirculantSynthesis(plan=plan, scale=scale, n=spec.n)
