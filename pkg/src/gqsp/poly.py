"""Complex Laurent polynomials on the unit circle.

Coefficients are stored in ascending degree order with an explicit
``min_degree`` offset, so ordinary polynomials and Laurent polynomials
(negative powers) share one representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


def next_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


@dataclass(frozen=True, eq=False)
class LaurentPoly:
    """P(z) = sum_n coeffs[n] * z^(min_degree + n) evaluated on |z| = 1."""

    coeffs: np.ndarray
    min_degree: int = 0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise InvalidInputError("coeffs must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "min_degree", int(self.min_degree))

    @property
    def degree(self) -> int:
        return self.min_degree + len(self.coeffs) - 1

    @property
    def span(self) -> int:
        """Width of the degree window, degree - min_degree."""
        return len(self.coeffs) - 1

    def degrees(self) -> np.ndarray:
        return np.arange(self.min_degree, self.degree + 1)

    def to_json_dict(self) -> dict:
        return {
            "min_degree": self.min_degree,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "LaurentPoly":
        try:
            coeffs = np.array([complex(re, im) for re, im in obj["coeffs"]])
            return cls(coeffs, int(obj.get("min_degree", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed polynomial JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "LaurentPoly":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid JSON: {exc}") from exc
        return cls.from_json_dict(obj)


def eval_unit_circle(p: LaurentPoly, t):
    """Evaluate P(e^{it}); t may be a scalar or an array of angles."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    # rows: angles, cols: stored degrees
    phases = np.exp(1j * np.outer(t_arr, p.degrees()))
    vals = phases @ p.coeffs
    return vals[0] if np.isscalar(t) or np.ndim(t) == 0 else vals

def eval_grid(p: LaurentPoly, m: int) -> np.ndarray:
    """Values of P at t_k = 2*pi*k/m for k = 0..m-1.

    Uses an inverse FFT over degree bins; degrees are folded mod m, which
    agrees with pointwise evaluation exactly since e^{int_k} is m-periodic
    in n.
    """
    if m < 1:
        raise InvalidInputError("grid size must be >= 1")
    buf = np.zeros(m, dtype=complex)
    np.add.at(buf, p.degrees() % m, p.coeffs)
    return np.fft.ifft(buf) * m

def default_grid_size(p: LaurentPoly) -> int:
    """8x oversampled grid, rounded up to a power of two."""
    return next_pow2(8 * (p.span + 1))

def sup_norm_sq(p: LaurentPoly, m: int | None = None) -> float:
    """Max of |P|^2 over an m-point grid.

    A lower bound on the true sup over the circle; the default grid
    oversamples the degree span 8x to keep the bound tight.
    """
    if m is None:
        m = default_grid_size(p)
    vals = eval_grid(p, m)
    return float(np.max(vals.real**2 + vals.imag**2))

def convolve(a, b) -> np.ndarray:
    """Full linear convolution via FFT; length len(a)+len(b)-1.

    Real inputs take an rfft path and return a real array.
    """
    a = np.atleast_1d(np.asarray(a))
    b = np.atleast_1d(np.asarray(b))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("convolve requires non-empty inputs")
    n_out = len(a) + len(b) - 1
    n_fft = next_pow2(n_out)
    if not (np.iscomplexobj(a) or np.iscomplexobj(b)):
        out = np.fft.irfft(np.fft.rfft(a, n_fft) * np.fft.rfft(b, n_fft), n_fft)
    else:
        out = np.fft.ifft(np.fft.fft(a, n_fft) * np.fft.fft(b, n_fft))
    return out[:n_out]

def convolve_naive(a, b) -> np.ndarray:
    """Direct O(n^2) convolution; the non-FFT reference path."""
    a = np.atleast_1d(np.asarray(a))
    b = np.atleast_1d(np.asarray(b))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("convolve requires non-empty inputs")
    return np.convolve(a, b)

def autocorrelation(a) -> np.ndarray:
    """convolve(a, reverse(conjugate(a))); entry d+l is the lag-l sum."""
    a = np.atleast_1d(np.asarray(a))
    return convolve(a, np.conj(a[::-1]))
