"""RIS phase designs on the separated quadratic form.

Every design is a phase vector ``x`` of conjugated RIS coefficients. The
objective is ``f(x) = w^H Q^{-1} w = c + x^H B x + 2 Re{x^H w2}``.

* :func:`relaxed_solution` - maximal eigenvector of ``B`` under ``||x||^2 = N``,
  obtained from a K x K eigenproblem.
* :func:`lower_bound_phases` - element-wise phase projection of the relaxed
  solution (an achievable design, hence a lower bound).
* :func:`ao_optimize` - cyclic closed-form coordinate updates.
* :func:`upper_bound` - triangle-inequality bound on ``f`` over all feasible ``x``.
* :func:`numerical_baseline` - multi-start gradient ascent on the phase angles.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.linalg.blas import zaxpy as _axpy

from .errors import ConvergenceError
from .numerics import hermitian_max_eigpair
from .separation import LN2, check_unit_modulus, expand_quadratic

RelaxedSolution = namedtuple("RelaxedSolution", ["x", "eigenvalue", "degenerate", "tied"])

TIE_TOL = 1e-9


def relaxed_solution(sep):
    """Relaxed optimum ``x* = sqrt(N) Z' x' / ||Z' x'||``.

    ``x'`` is the maximal eigenvector of ``Q^{-1} Z'^H Z'``. That matrix is
    similar to the Hermitian ``L^{-1} Z'^H Z' L^{-H}`` (``Q = L L^H``), which is
    what the eigen-solver sees. ``eigenvalue`` is ``lambda_max(B)``; ``tied``
    reports a repeated top eigenvalue, in which case any vector of the top
    eigenspace is an equally good relaxed optimum.
    """
    n = sep.n_ris
    y = sep.factor.whiten(sep.zp.conj().T)  # K x N, B = y^H y
    if not np.any(y):
        return RelaxedSolution(np.ones(n, dtype=complex), 0.0, True, False)
    t = y @ y.conj().T
    t = 0.5 * (t + t.conj().T)
    lam, vec, _ = hermitian_max_eigpair(t)
    tied = False
    if t.shape[0] > 1:
        rest = t - lam * np.outer(vec, vec.conj())
        rest = 0.5 * (rest + rest.conj().T)
        norms = np.linalg.norm(rest, axis=0)
        if norms.max() > TIE_TOL * lam:
            # start inside range(rest); all-ones may lie in the deflated direction
            lam2 = hermitian_max_eigpair(rest, v0=rest[:, np.argmax(norms)]).value
            tied = lam - lam2 <= TIE_TOL * lam
    x = y.conj().T @ vec
    x *= np.sqrt(n) / np.linalg.norm(x)
    # x must be an eigenvector of B = y^H y for the same eigenvalue
    resid = np.linalg.norm(y.conj().T @ (y @ x) - lam * x)
    if resid > 1e-6 * lam * np.sqrt(n):
        raise ConvergenceError(f"relaxed solution failed eigenvector check (residual {resid:.3e})")
    return RelaxedSolution(x, float(lam), False, bool(tied))


def project_phases(x, return_zero_mask=False):
    """Nearest unit-modulus vector, ``exp(j angle(x_i))`` element-wise.

    This minimizes ``sum_i |x_i - y_i|`` over unit-modulus ``y``. Exact zeros
    have no defined angle and map to 1.
    """
    x = np.asarray(x, dtype=complex)
    mag = np.abs(x)
    zero = mag == 0
    out = np.where(zero, 1.0 + 0j, x / np.where(zero, 1.0, mag))
    return (out, zero) if return_zero_mask else out


def lower_bound_phases(sep):
    """Feasible design from projecting the relaxed eigen-solution."""
    return project_phases(relaxed_solution(sep).x)


@dataclass
class AOTrace:
    """Objective ``f`` at the start and after each sweep."""

    objectives: np.ndarray
    sweeps: int
    converged: bool
    epsilon: float

    def rates(self, sep):
        """Separated sum-rate (bits) after each sweep."""
        return sep.logdet_q + np.log1p(self.objectives) / LN2


def ao_optimize(sep, epsilon=1e-6, max_sweeps=100, x0=None, form=None):
    """Alternating (cyclic coordinate) maximization of the quadratic form.

    Each coordinate is set to ``exp(j angle(b_n^H x_(-n) + w2_n))``, the exact
    maximizer with the other N-1 coordinates fixed, so the objective never
    decreases. Sweeps stop once a full sweep gains less than ``epsilon``.

    Parameters
    ----------
    sep : SeparatedChannel
    epsilon : float
        Per-sweep gain threshold on ``f``.
    max_sweeps : int
    x0 : array_like, optional
        Feasible start; all-ones by default.
    form : QuadraticForm, optional
        Precomputed ``expand_quadratic(sep)``.

    Returns
    -------
    x : ndarray
    trace : AOTrace
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    n = sep.n_ris
    x = np.ones(n, dtype=complex) if x0 is None else check_unit_modulus(x0, n).copy()
    qf = form if form is not None and form.b is not None else expand_quadratic(sep)
    b = qf.b
    cols = np.ascontiguousarray(b.T)  # cols[n] is column n of B
    diag = np.real(np.diag(b)).tolist()
    objectives = [qf(x)]
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        g = b @ x + qf.w2
        xs = x.tolist()
        for i in range(n):
            old = xs[i]
            arg = complex(g[i]) - diag[i] * old
            if arg == 0:
                continue
            new = arg / abs(arg)
            if __debug__:
                gain = 2.0 * ((new.conjugate() * arg).real - (old.conjugate() * arg).real)
                assert gain >= -1e-12 * abs(arg), "coordinate update decreased the objective"
            delta = new - old
            if delta != 0:
                _axpy(cols[i], g, a=delta)
                xs[i] = new
        x = np.array(xs, dtype=complex)
        sweeps += 1
        objectives.append(qf(x))
        if objectives[-1] - objectives[-2] < epsilon:
            converged = True
            break
    return x, AOTrace(np.array(objectives), sweeps, converged, epsilon)


def upper_bound(sep, form=None):
    """Sum-rate upper bound (bits) valid for every feasible phase vector.

    Uses ``x^H B x <= sum |B_nr|`` and ``2 Re{x^H p} <= 2 sum |p_n|`` for
    unit-modulus ``x``.
    """
    qf = form if form is not None and form.b is not None else expand_quadratic(sep)
    bound = qf.const + np.sum(np.abs(qf.b)) + 2.0 * np.sum(np.abs(qf.w2))
    return sep.logdet_q + float(np.log1p(bound) / LN2)


def quantize_phases(x, bits):
    """Round each phase to the nearest of ``2^bits`` uniform levels.

    Distance is circular; an exact tie goes to the smaller level index.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    levels = 2 ** bits
    t = np.mod(np.angle(np.asarray(x, dtype=complex)), 2.0 * np.pi) / (2.0 * np.pi / levels)
    lo = np.floor(t)
    frac = t - lo
    lo = lo.astype(np.int64) % levels
    hi = (lo + 1) % levels
    idx = np.where(frac > 0.5, hi, lo)
    idx = np.where(frac == 0.5, np.minimum(lo, hi), idx)
    return np.exp(1j * 2.0 * np.pi * idx / levels)


def random_phases(rng, n):
    """I.i.d. uniform phases."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n))


# --- numerical baseline -----------------------------------------------------

def _whitened_parts(sep):
    qf = expand_quadratic(sep, form_b=False)
    y1 = sep.factor.whiten(sep.w1)
    return qf.whitened, y1


def rate_and_gradient(sep, phi, parts=None):
    """Separated sum-rate (bits) at ``x = exp(j phi)`` and its gradient in ``phi``.

    With ``z = L^{-1} w`` we have ``f = ||z||^2`` and
    ``df/dphi_n = 2 Im{conj(x_n) (Y^H z)_n}`` where ``Y = L^{-1} Z'^H``.
    """
    y, y1 = parts if parts is not None else _whitened_parts(sep)
    x = np.exp(1j * np.asarray(phi, dtype=float))
    z = y1 + y @ x
    f = float(np.real(np.vdot(z, z)))
    g = y.conj().T @ z
    grad = 2.0 * np.imag(np.conj(x) * g) / ((1.0 + f) * LN2)
    return sep.logdet_q + np.log1p(f) / LN2, grad


def _ascend(sep, parts, phi, steps, grad_tol):
    c = 1e-4
    val, grad = rate_and_gradient(sep, phi, parts)
    step = 1.0 / max(np.linalg.norm(grad), 1e-12)
    for _ in range(steps):
        if np.max(np.abs(grad)) <= grad_tol:
            break
        gg = float(grad @ grad)
        t = step
        while True:
            cand = phi + t * grad
            cval, cgrad = rate_and_gradient(sep, cand, parts)
            if cval >= val + c * t * gg:
                break
            t *= 0.5
            if t < 1e-14:
                return phi, val
        s = cand - phi
        dy = cgrad - grad
        curv = -float(s @ dy)
        # Barzilai-Borwein step for the next iteration, Armijo-safeguarded above
        step = float(s @ s) / curv if curv > 0 else 2.0 * t
        phi, val, grad = cand, cval, cgrad
    return phi, val


def numerical_baseline(sep, restarts=4, steps=300, rng=None, x0=None, grad_tol=1e-9):
    """Best-of-``restarts`` gradient ascent on the exact separated sum-rate.

    The first start is ``x0`` (all-ones by default), the others are uniform
    random phases drawn from ``rng``. Each run is a monotone ascent with
    Barzilai-Borwein trial steps and Armijo backtracking. The result is
    always feasible and never worse than the first start.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = sep.n_ris
    parts = _whitened_parts(sep)
    first = np.ones(n, dtype=complex) if x0 is None else check_unit_modulus(x0, n)
    starts = [np.angle(first)]
    for _ in range(restarts - 1):
        starts.append(rng.uniform(0.0, 2.0 * np.pi, n))
    best_phi, best_val = None, -np.inf
    for phi0 in starts:
        phi, val = _ascend(sep, parts, phi0, steps, grad_tol)
        if val > best_val:
            best_phi, best_val = phi, val
    return np.exp(1j * best_phi)
