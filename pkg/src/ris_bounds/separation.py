"""Channel separation: sum-rate as a scalar quadratic form in the RIS phases.

With a rank-1 RIS-BS channel ``H_br = d1 u1 v1^H``, rotating the global
channel by the left singular basis of ``H_br`` confines every RIS-dependent
term to one row ``w^H``. The determinant lemma then gives

    log2|I + H^H H| = log2|Q| + log2(1 + w^H Q^{-1} w)

with ``Q = I + H_d^H (I - u1 u1^H) H_d`` and ``w = w1 + Z'^H x``.

When ``H_br`` is not exactly rank-1 the same construction uses its best
rank-1 approximation; the separated rate is then only an approximation of
the true rate and is meant for optimizer internals.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .numerics import HPDFactor, as_complex_matrix, logdet_hpd, rank1_svd

UNIT_TOL = 1e-9
LN2 = np.log(2.0)


@dataclass(frozen=True, eq=False)
class SeparatedChannel:
    q: np.ndarray
    w1: np.ndarray
    zp: np.ndarray
    a_b: np.ndarray
    a_r: np.ndarray
    scale: float
    d1: float
    factor: HPDFactor

    @property
    def n_ris(self):
        return self.zp.shape[0]

    @property
    def users(self):
        return self.zp.shape[1]

    @property
    def logdet_q(self):
        return self.factor.logdet()


def separate(ch):
    """Build the separated representation of a :class:`ChannelSet`.

    Raises
    ------
    DomainError
        If ``H_br`` is zero.
    """
    d1, u1, v1, degenerate = rank1_svd(ch.h_br)
    if degenerate:
        raise DomainError("H_br is zero; channel separation is undefined")
    h_d = ch.h_d
    m, k = h_d.shape
    n = ch.h_ru.shape[0]
    w1 = h_d.conj().T @ u1
    g = h_d - np.outer(u1, w1.conj())
    q = np.eye(k) + g.conj().T @ g
    q = 0.5 * (q + q.conj().T)
    a_b = np.sqrt(m) * u1
    a_r = np.sqrt(n) * v1
    scale = d1 / np.sqrt(n)
    zp = scale * a_r.conj()[:, None] * ch.h_ru
    return SeparatedChannel(q, w1, zp, a_b, a_r, scale, d1, HPDFactor(q))


def check_unit_modulus(x, n=None, tol=UNIT_TOL):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or (n is not None and x.size != n):
        raise ValidationError(f"phase vector must have shape ({n},), got {x.shape}")
    if np.max(np.abs(np.abs(x) - 1.0)) > tol:
        raise ValidationError("phase vector entries must have unit modulus")
    return x


def compose_w(sep, x):
    """The RIS-dependent row ``w = w1 + Z'^H x``."""
    x = check_unit_modulus(x, sep.n_ris)
    return sep.w1 + sep.zp.conj().T @ x


def quadratic_objective(sep, x):
    """``w^H Q^{-1} w``, evaluated as ``||L^{-1} w||^2``."""
    y = sep.factor.whiten(compose_w(sep, x))
    return float(np.real(np.vdot(y, y)))


def sum_rate_separated(sep, x):
    """``log2|Q| + log2(1 + w^H Q^{-1} w)`` in bits."""
    return sep.logdet_q + float(np.log1p(quadratic_objective(sep, x)) / LN2)


def rate_from_objective(sep, f):
    """Map quadratic-form values to separated sum-rate (bits); vectorized."""
    return sep.logdet_q + np.log1p(f) / LN2


def sum_rate_direct(h):
    """Uplink sum-rate ``log2|I_K + H^H H|`` with unit symbol and noise power."""
    h = as_complex_matrix(h, "H")
    gram = h.conj().T @ h
    return logdet_hpd(np.eye(h.shape[1]) + 0.5 * (gram + gram.conj().T))


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """``f(x) = const + x^H B x + 2 Re{x^H w2}`` with ``B = Z' Q^{-1} Z'^H``.

    ``whitened`` is ``L^{-1} Z'^H`` (K x N) so that ``B = whitened^H whitened``;
    it gives O(NK) products with ``B`` without forming it.
    """

    const: float
    b: np.ndarray
    w2: np.ndarray
    whitened: np.ndarray

    def __call__(self, x):
        return float(self.const + np.real(np.vdot(x, self.b @ x)) + 2.0 * np.real(np.vdot(x, self.w2)))

    def gradient_field(self, x):
        """``B x + w2``, the vector driving every coordinate update."""
        return self.whitened.conj().T @ (self.whitened @ x) + self.w2


def expand_quadratic(sep, form_b=True):
    """Three-term expansion of ``w^H Q^{-1} w`` around the RIS phases."""
    y = sep.factor.whiten(sep.zp.conj().T)
    y1 = sep.factor.whiten(sep.w1)
    const = float(np.real(np.vdot(y1, y1)))
    w2 = y.conj().T @ y1
    b = None
    if form_b:
        b = y.conj().T @ y
        b = 0.5 * (b + b.conj().T)  # exactly Hermitian, real diagonal
    return QuadraticForm(const, b, w2, y)
