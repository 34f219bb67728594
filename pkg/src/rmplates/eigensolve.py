"""Generalized symmetric eigensolver and subspace-angle utilities.

Smallest eigenvalues of A x = lambda B x are computed by shift-and-invert
Lanczos (ARPACK) with a sparse LU of A - shift*B and a seeded start vector,
falling back to a dense solve when the pencil is too small for Krylov
iteration.  Returned eigenvectors are re-orthonormalized in the B inner
product, so clustered (kernel) eigenvalues come out with full multiplicity.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, SingularSystemError

#: eigenvalues within this relative distance are reported as one cluster
CLUSTER_RTOL = 1e-7


@dataclass
class EigOptions:
    k: int = 6
    shift: float = 0.0
    tol: float = 1e-9
    max_iter: int = 5000
    seed: int = 7

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class EigResult:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, B-orthonormal
    residuals: np.ndarray  # ||A x - lambda B x|| / ||A x||
    info: dict = field(default_factory=dict)

    def clusters(self, rtol: float = CLUSTER_RTOL):
        """Group eigenvalue indices whose relative gaps are below rtol."""
        groups = [[0]]
        lam = self.eigenvalues
        for i in range(1, len(lam)):
            scale = max(abs(lam[i]), abs(lam[groups[-1][0]]), 1e-300)
            if abs(lam[i] - lam[groups[-1][-1]]) <= rtol * scale:
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups


def _as_csr(M):
    return M.full() if hasattr(M, "full") else sp.csr_matrix(M)


def solve_gep_smallest(A, B, opts: EigOptions = None) -> EigResult:
    """k smallest eigenvalues of the symmetric pencil (A, B), B positive definite."""
    opts = opts or EigOptions()
    A = _as_csr(A)
    B = _as_csr(B)
    n = A.shape[0]
    if opts.k > n:
        raise ValueError(f"requested {opts.k} eigenvalues from an n={n} pencil")
    rng = np.random.default_rng(opts.seed)
    v0 = rng.standard_normal(n)

    used_arpack = opts.k <= n - 2  # ARPACK needs k < n - 1
    if not used_arpack:
        lam, vec = scipy.linalg.eigh(A.toarray(), B.toarray(), subset_by_index=(0, opts.k - 1))
    else:
        try:
            lam, vec = spla.eigsh(
                A,
                k=opts.k,
                M=B,
                sigma=opts.shift,
                which="LM",
                v0=v0,
                maxiter=opts.max_iter,
                tol=0,
            )
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(str(exc), partial=(exc.eigenvalues, exc.eigenvectors))
        except RuntimeError as exc:
            raise SingularSystemError(f"shift-invert factorization failed: {exc}")
    order = np.argsort(lam)
    lam, vec = lam[order], vec[:, order]
    if used_arpack and lam[0] < opts.shift:
        # shift-invert returns the eigenvalues nearest the shift; one below
        # the shift means it sits inside the spectrum and smaller eigenvalues
        # may have been skipped
        raise ValueError(
            f"shift {opts.shift} lies inside the spectrum (found {lam[0]} below it); "
            "use a shift below the smallest eigenvalue"
        )
    vec = _b_orthonormalize(vec, B)
    res = _residuals(A, B, lam, vec)
    if np.any(res > opts.tol):
        # pairs far from the shift lose accuracy; polish each cluster with
        # one step of shifted block inverse iteration plus Rayleigh-Ritz
        lam, vec = _refine_clusters(A, B, lam, vec, res, opts.tol)
        res = _residuals(A, B, lam, vec)
    if np.any(res > opts.tol):
        raise ConvergenceError(
            f"residuals {res.max():.2e} above tol {opts.tol:.1e}", partial=(lam, vec)
        )
    return EigResult(lam, vec, res)


def _residuals(A, B, lam, vec):
    Av = A @ vec
    Bv = B @ vec
    return np.linalg.norm(Av - Bv * lam[None, :], axis=0) / np.linalg.norm(Av, axis=0)


def _refine_clusters(A, B, lam, vec, res, tol, rounds: int = 3):
    lam = lam.copy()
    vec = vec.copy()
    result = EigResult(lam, None, None)
    for group in result.clusters():
        idx = np.array(group)
        if np.all(res[idx] <= tol):
            continue
        lam_c = float(np.mean(lam[idx]))
        shift = lam_c + max(abs(lam_c), 1.0) * 1e-5
        lu = spla.splu((A - shift * B).tocsc())
        Y = vec[:, idx]
        for _ in range(rounds):
            Y = lu.solve(B @ Y)
            Y = _b_orthonormalize(Y, B)
            # Rayleigh-Ritz in the refined block
            G = Y.T @ (A @ Y)
            w, Q = np.linalg.eigh(0.5 * (G + G.T))
            Y = Y @ Q
            if np.all(_residuals(A, B, w, Y) <= tol):
                break
        lam[idx] = w
        vec[:, idx] = Y
    order = np.argsort(lam)
    return lam[order], vec[:, order]


def solve_gep_largest(A, B, k: int = 1, seed: int = 7) -> np.ndarray:
    """k largest eigenvalues of (A, B); used for discrete Korn constants."""
    A = _as_csr(A)
    B = _as_csr(B)
    n = A.shape[0]
    if k > n - 2:
        lam = scipy.linalg.eigh(A.toarray(), B.toarray(), eigvals_only=True)
        return lam[-k:]
    rng = np.random.default_rng(seed)
    lam = spla.eigsh(A, k=k, M=B, which="LA", v0=rng.standard_normal(n), tol=0, return_eigenvectors=False)
    return np.sort(lam)


def _b_orthonormalize(V: np.ndarray, B) -> np.ndarray:
    G = V.T @ (B @ V)
    # Cholesky of the Gram matrix; fall back to eigh when nearly defective
    try:
        L = np.linalg.cholesky(G)
        return scipy.linalg.solve_triangular(L, V.T, lower=True).T
    except np.linalg.LinAlgError:
        w, Q = np.linalg.eigh(G)
        if np.min(w) <= 0:
            raise ValueError("eigenvector block is B-rank-deficient")
        return V @ Q / np.sqrt(w)


def principal_angles(U: np.ndarray, V: np.ndarray, B) -> np.ndarray:
    """Principal angles between span(U) and span(V) in the B inner product.

    U and V must have B-orthonormal columns; the angles come out ascending,
    and the projection defect of one span onto the other equals the sine of
    the largest angle.
    """
    B = _as_csr(B)
    for M in (U, V):
        G = M.T @ (B @ M)
        if np.linalg.matrix_rank(G, tol=1e-8) < M.shape[1]:
            raise ValueError("input basis is rank-deficient in the B inner product")
        if not np.allclose(G, np.eye(M.shape[1]), atol=1e-6):
            raise ValueError("input basis is not B-orthonormal")
    s = scipy.linalg.svd(U.T @ (B @ V), compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))
