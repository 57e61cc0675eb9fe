"""Dense complex linear-algebra kernels.

Everything here works on plain ``numpy`` arrays. Matrices are 2-D complex
arrays, vectors are 1-D complex arrays. The Cholesky-based routines delegate
the factorization itself to LAPACK through ``scipy.linalg``; the dominant
eigenpair and rank-1 SVD are computed with a shifted power iteration so that
their results are deterministic and carry an explicit residual guarantee.
"""

from collections import namedtuple

import numpy as np
import scipy.linalg as la

from .errors import ConvergenceError, DomainError, ValidationError

EIG_TOL = 1e-9
FACTOR_TOL = 1e-10

EigPair = namedtuple("EigPair", ["value", "vector", "iterations"])
Rank1 = namedtuple("Rank1", ["d1", "u1", "v1", "degenerate"])


def as_complex_matrix(a, name="matrix"):
    """Validate and convert ``a`` to a finite 2-D complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def as_complex_vector(v, name="vector"):
    """Validate and convert ``v`` to a finite 1-D complex array."""
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValidationError(f"{name} must be a non-empty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def _check_square(a, name):
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")


def _check_hermitian(a, tol, name):
    _check_square(a, name)
    scale = max(np.linalg.norm(a), 1.0)
    if np.linalg.norm(a - a.conj().T) > tol * scale:
        raise ValidationError(f"{name} is not Hermitian within tol={tol:g}")


def fix_phase(v, thresh=1e-12):
    """Rotate ``v`` so its first non-negligible entry is real and non-negative.

    Returns the rotated vector and the unit-modulus factor that was applied.
    """
    mags = np.abs(v)
    idx = np.flatnonzero(mags > thresh * max(mags.max(), 1e-300))
    if idx.size == 0:
        return v, 1.0 + 0j
    first = v[idx[0]]
    rot = np.conj(first) / abs(first)
    return v * rot, rot


def _psd_shift(a):
    # Zero shift when A is numerically PSD, otherwise shift by a bound on
    # the spectral radius so that A + sI is PSD.
    n = a.shape[0]
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return 0.0
    try:
        np.linalg.cholesky(a + (1e-12 * norm) * np.eye(n))
        return 0.0
    except np.linalg.LinAlgError:
        return float(norm)


def hermitian_max_eigpair(a, tol=EIG_TOL, max_iter=20000, v0=None):
    """Largest (algebraic) eigenvalue and unit eigenvector of a Hermitian matrix.

    Uses power iteration on ``A + sI`` where ``s`` makes the matrix PSD, so the
    iteration converges to the algebraically largest eigenvalue. Iteration
    stops once ``||A v - lam v|| <= tol * ||A||_F``.

    Parameters
    ----------
    a : array_like, (n, n)
        Hermitian matrix.
    tol : float
        Relative residual tolerance; also the Hermitian-ness tolerance.
    max_iter : int
        Iteration cap.
    v0 : array_like, optional
        Start vector. Defaults to the normalized all-ones vector.

    Returns
    -------
    EigPair
        ``(value, vector, iterations)``; ``vector`` has unit norm and its
        first non-negligible entry is real and non-negative.

    Raises
    ------
    ValidationError
        If ``a`` is not square/Hermitian/finite.
    ConvergenceError
        If the residual test is not met within ``max_iter`` iterations.
        ``best`` holds the EigPair with the smallest residual seen.
    """
    a = as_complex_matrix(a, "A")
    _check_hermitian(a, tol, "A")
    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    norm = np.linalg.norm(a)
    if norm == 0.0:
        v = np.zeros(n, dtype=complex)
        v[0] = 1.0
        return EigPair(0.0, v, 0)

    shift = _psd_shift(a)
    b = a + shift * np.eye(n) if shift else a

    v = np.ones(n, dtype=complex) if v0 is None else as_complex_vector(v0, "v0").copy()
    v /= np.linalg.norm(v)
    restarted = False
    best = None
    best_res = np.inf
    thresh = tol * norm
    for it in range(1, max_iter + 1):
        av = a @ v
        lam = float(np.real(np.vdot(v, av)))
        res = np.linalg.norm(av - lam * v)
        if res < best_res:
            best_res = res
            best = (lam, v, it)
        if res <= thresh:
            vec, _ = fix_phase(v)
            return EigPair(lam, vec, it)
        bv = av + shift * v if shift else av
        nb = np.linalg.norm(bv)
        if nb <= 1e-14 * norm:
            if restarted:
                break
            # start vector collapsed into the null space; restart inside range(B)
            restarted = True
            col = np.argmax(np.linalg.norm(b, axis=0))
            v = b[:, col] / np.linalg.norm(b[:, col])
            continue
        v = bv / nb

    lam, vec, it = best
    vec, _ = fix_phase(vec)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(residual {best_res:.3e}, target {thresh:.3e})",
        best=EigPair(lam, vec, it),
    )


def _cholesky(a, name):
    a = as_complex_matrix(a, name)
    _check_hermitian(a, FACTOR_TOL * 1e2, name)
    try:
        return la.cho_factor(a, lower=True, check_finite=False)
    except la.LinAlgError as exc:
        raise DomainError(f"{name} is not positive definite") from exc


def logdet_hpd(a):
    """Base-2 log-determinant of a Hermitian positive definite matrix.

    Computed from the Cholesky diagonal, ``2 * sum(log2(diag(L)))``.
    """
    c, _ = _cholesky(a, "A")
    d = np.real(np.diag(c))
    if np.any(d <= 0):
        raise DomainError("A is not positive definite")
    return float(2.0 * np.sum(np.log2(d)))


def solve_hpd(a, b):
    """Solve ``A y = b`` for Hermitian PD ``A`` without forming an inverse.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    factor = _cholesky(a, "A")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != factor[0].shape[0]:
        raise ValidationError(f"dimension mismatch: A is {factor[0].shape}, b is {b.shape}")
    return la.cho_solve(factor, b, check_finite=False)


class HPDFactor:
    """Reusable Cholesky factor for repeated solves against one matrix."""

    def __init__(self, a):
        self._factor = _cholesky(a, "A")
        self.n = self._factor[0].shape[0]

    def solve(self, b):
        return la.cho_solve(self._factor, np.asarray(b, dtype=complex), check_finite=False)

    def logdet(self):
        return float(2.0 * np.sum(np.log2(np.real(np.diag(self._factor[0])))))

    def whiten(self, b):
        """Return ``L^{-1} b`` where ``A = L L^H``."""
        return la.solve_triangular(self._factor[0], np.asarray(b, dtype=complex),
                                   lower=True, check_finite=False)

    def unwhiten_h(self, y):
        """Return ``L^{-H} y``."""
        return la.solve_triangular(self._factor[0], np.asarray(y, dtype=complex),
                                   lower=True, trans="C", check_finite=False)


def rank1_svd(a, tol=EIG_TOL):
    """Dominant singular triple ``(d1, u1, v1)`` of an arbitrary complex matrix.

    Power iteration runs on the smaller of the two Gram matrices; the other
    singular vector is recovered by one multiplication. ``u1`` follows the
    eigenvector phase convention and ``v1`` is rotated along with it so that
    ``d1 * u1 v1^H`` is unchanged.

    A zero matrix returns ``d1 = 0`` with unit basis vectors and
    ``degenerate=True``.
    """
    a = as_complex_matrix(a, "A")
    m, n = a.shape
    fro = np.linalg.norm(a)
    if fro == 0.0:
        u = np.zeros(m, dtype=complex)
        v = np.zeros(n, dtype=complex)
        u[0] = v[0] = 1.0
        return Rank1(0.0, u, v, True)

    wide = m <= n
    gram = a @ a.conj().T if wide else a.conj().T @ a
    start = gram[:, np.argmax(np.linalg.norm(gram, axis=0))]
    try:
        pair = hermitian_max_eigpair(gram, tol=tol, max_iter=200000, v0=start)
    except ConvergenceError as exc:
        pair = exc.best
    if wide:
        u1 = pair.vector
        v1 = a.conj().T @ u1
        v1 = v1 / np.linalg.norm(v1)
    else:
        v1 = pair.vector
        u1 = a @ v1
        u1 = u1 / np.linalg.norm(u1)
        u1, rot = fix_phase(u1)
        v1 = v1 * rot
    # u1^H A v1 is real and non-negative by construction
    d1 = float(np.real(np.vdot(u1, a @ v1)))
    return Rank1(d1, u1, v1, False)
