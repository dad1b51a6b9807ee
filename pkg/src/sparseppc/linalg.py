"""Dense linear-algebra kernels used throughout the package.

Everything here targets small matrices (state dimension <= 16, horizon
<= 16), so plain dense numpy routines are used without sparsity tricks.
"""

import numpy as np

from .errors import NumericError

# Pade(13) numerator/denominator coefficients for the scaling-and-squaring
# matrix exponential (b[0] multiplies I, b[13] the highest power).
_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
# 1-norm bound under which the Pade(13) approximant is accurate to machine
# precision without further scaling.
_PADE13_THETA = 5.371920351148152


def expm(M: np.ndarray) -> np.ndarray:
    """Matrix exponential via scaling-and-squaring with a Pade(13) core."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expm expects a square matrix")
    n = M.shape[0]
    norm1 = float(np.max(np.sum(np.abs(M), axis=0))) if n else 0.0
    s = 0
    if norm1 > _PADE13_THETA:
        s = int(np.ceil(np.log2(norm1 / _PADE13_THETA)))
    A = M / (2.0**s)
    I = np.eye(n)
    b = _PADE13_B
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I)
    R = np.linalg.solve(V - U, V + U)
    # overflow during squaring surfaces as non-finite entries; callers that
    # care (e.g. discretization) turn that into a NumericError
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            R = R @ R
    return R


def numerical_rank(M: np.ndarray, rel_tol: float = 1e-12) -> int:
    """Rank by singular values: sigma counts iff sigma > dim * sigma_max * rel_tol."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    tol = max(M.shape) * sv[0] * rel_tol
    return int(np.count_nonzero(sv > tol))


def sym_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition (negative dust clipped)."""
    M = np.asarray(M, dtype=float)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


def check_sym_pd(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate symmetry and positive definiteness (via Cholesky); return M."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NumericError(f"{name} must be square, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-10, atol=1e-12):
        raise NumericError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"{name} must be positive definite") from exc
    return M


def is_sym_pd(M: np.ndarray) -> bool:
    try:
        check_sym_pd(M)
    except NumericError:
        return False
    return True


def pencil_eigvals(M: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Eigenvalues of the pencil M v = lam S v for symmetric M and PD S.

    Reduces to an ordinary symmetric problem through the Cholesky factor of
    S: the eigenvalues equal those of L^-1 M L^-T, which are real. This is
    how spectra of nonsymmetric products like M S^-1 are evaluated here.
    """
    M = np.asarray(M, dtype=float)
    S = np.asarray(S, dtype=float)
    L = np.linalg.cholesky(0.5 * (S + S.T))
    Y = np.linalg.solve(L, 0.5 * (M + M.T))
    C = np.linalg.solve(L, Y.T).T
    return np.linalg.eigvalsh(0.5 * (C + C.T))


def power_lmax(M: np.ndarray, iters: int = 500, tol: float = 1e-12) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    # Deterministic start with a ramp so it is not orthogonal to the top
    # eigenvector for structured matrices.
    v = 1.0 + 0.01 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = float(v @ (M @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return lam
