"""Sparse linear algebra for the saddle-point p-subproblem.

The coefficient matrix of the scaled p-subproblem is

    A = [[M, -alpha K],
         [K,  M      ]]

and it is preconditioned by

    B = [[M, -alpha K],
         [K,  M + 2 sqrt(alpha) K]],

whose inverse costs two solves with Q = M + sqrt(alpha) K.  The eigenvalues
of B^{-1} A lie in [1/2, 1] independently of h and alpha.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

Operator = Callable[[np.ndarray], np.ndarray]


class FactorizationError(ArithmeticError):
    pass


class SpdFactor:
    """Factorization of a sparse symmetric positive definite matrix.

    ``method="direct"`` uses a symmetric-mode SuperLU factorization with
    diagonal pivoting, which for an SPD matrix is an LDL^T factorization in
    disguise; a non-positive pivot flags an indefinite matrix.
    ``method="cg"`` wraps Jacobi-preconditioned conjugate gradients at
    relative tolerance ``tol``.
    """

    def __init__(self, A, method: str = "direct", tol: float = 1e-12, symmetry_tol: float = 1e-12):
        A = sp.csc_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise FactorizationError(f"matrix is not square: {A.shape}")
        scale = abs(A).max() if A.nnz else 0.0
        if scale == 0.0:
            raise FactorizationError("matrix is zero")
        asym = abs(A - A.T).max() if A.nnz else 0.0
        if asym > symmetry_tol * scale:
            raise FactorizationError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")
        diag = A.diagonal()
        if np.any(diag <= 0):
            i = int(np.flatnonzero(diag <= 0)[0])
            raise FactorizationError(f"non-positive diagonal entry A[{i},{i}] = {diag[i]:.3e}")
        self.A = A
        self.method = method
        self.tol = tol
        self.n = A.shape[0]
        if method == "direct":
            try:
                lu = spla.splu(
                    A,
                    permc_spec="MMD_AT_PLUS_A",
                    diag_pivot_thresh=0.0,
                    options={"SymmetricMode": True},
                )
            except RuntimeError as exc:
                raise FactorizationError(f"factorization failed: {exc}") from exc
            pivots = lu.U.diagonal()
            if not np.array_equal(lu.perm_r, lu.perm_c) or np.any(pivots <= 0):
                k = int(np.argmin(pivots))
                raise FactorizationError(
                    f"matrix is not positive definite (pivot {k} = {pivots[k]:.3e})"
                )
            self._lu = lu
        elif method == "cg":
            self._jacobi = spla.LinearOperator(A.shape, matvec=lambda x: x / diag, dtype=float)
        else:
            raise ValueError(f"unknown factorization method {method!r}")

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if self.method == "direct":
            return self._lu.solve(b)
        if b.ndim == 2:
            return np.column_stack([self.solve(b[:, j]) for j in range(b.shape[1])])
        if not np.any(b):
            return np.zeros_like(b)
        x, info = spla.cg(self.A, b, rtol=self.tol, atol=0.0, maxiter=10 * self.n, M=self._jacobi)
        if info < 0:
            raise FactorizationError("conjugate gradient breakdown")
        if info > 0:
            raise FactorizationError(f"conjugate gradient did not reach rtol={self.tol}")
        return x


def spd_factorize(A, method: str = "direct", tol: float = 1e-12) -> SpdFactor:
    return SpdFactor(A, method=method, tol=tol)


@dataclass(frozen=True)
class SaddleOperator:
    """Matrix-free [[M, -alpha K], [K, M]] acting on stacked (p, y)."""

    M: sp.spmatrix
    K: sp.spmatrix
    alpha: float

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def apply(self, p: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.M @ p - self.alpha * (self.K @ y), self.K @ p + self.M @ y

    def __call__(self, x: np.ndarray) -> np.ndarray:
        n = self.n
        r1, r2 = self.apply(x[:n], x[n:])
        return np.concatenate([r1, r2])

    def to_sparse(self) -> sp.csr_matrix:
        return sp.bmat([[self.M, -self.alpha * self.K], [self.K, self.M]], format="csr")


class SaddlePreconditioner:
    """Inverse of B = [[M, -alpha K], [K, M + 2 sqrt(alpha) K]] via two Q-solves."""

    def __init__(self, M, K, alpha: float, method: str = "direct"):
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        self.M = sp.csr_matrix(M)
        self.K = sp.csr_matrix(K)
        self.alpha = float(alpha)
        self.sqrt_alpha = np.sqrt(self.alpha)
        self.factor_Q = SpdFactor(self.M + self.sqrt_alpha * self.K, method=method)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def apply(self, r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.factor_Q.solve(r1 + self.sqrt_alpha * r2)
        h = self.factor_Q.solve(r1 - self.M @ g)
        return g + h, -h / self.sqrt_alpha

    def __call__(self, r: np.ndarray) -> np.ndarray:
        n = self.n
        v1, v2 = self.apply(r[:n], r[n:])
        return np.concatenate([v1, v2])

    def to_sparse(self) -> sp.csr_matrix:
        """The preconditioning matrix B itself (for oracles)."""
        a = self.alpha
        return sp.bmat(
            [[self.M, -a * self.K], [self.K, self.M + 2.0 * self.sqrt_alpha * self.K]], format="csr"
        )


def apply_preconditioner(P: SaddlePreconditioner, r1, r2):
    return P.apply(np.asarray(r1, dtype=float), np.asarray(r2, dtype=float))


@dataclass
class GmresResult:
    x: np.ndarray
    iterations: int
    relres: float
    converged: bool
    breakdown: bool = False


def gmres(
    apply_A: Operator,
    apply_Pinv: Operator | None,
    b: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 500,
    restart: int = 50,
    x0: np.ndarray | None = None,
) -> GmresResult:
    """Right-preconditioned restarted GMRES.

    Solves ``A P^{-1} w = b`` and returns ``x = x0 + P^{-1} (V y)``.  The
    stopping test is on the unpreconditioned residual ``||b - A x|| <=
    tol ||b||``.  Arnoldi uses modified Gram-Schmidt followed by one full
    reorthogonalization pass.  On a lucky breakdown the current iterate is
    returned with ``breakdown=True``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    n = b.size
    Pinv = apply_Pinv if apply_Pinv is not None else (lambda v: v)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return GmresResult(np.zeros(n), 0, 0.0, True)

    r = b - apply_A(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    if beta <= tol * bnorm:
        return GmresResult(x, 0, beta / bnorm, True)

    total = 0
    m = max(1, min(restart, n))
    while True:
        V = np.zeros((n, m + 1))
        Z = np.zeros((n, m))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[:, 0] = r / beta
        k = 0
        breakdown = False
        for j in range(m):
            Z[:, j] = Pinv(V[:, j])
            w = np.array(apply_A(Z[:, j]), dtype=float)  # operators may return views
            wnorm0 = np.linalg.norm(w)
            for _ in range(2):
                for i in range(j + 1):
                    hij = V[:, i] @ w
                    H[i, j] += hij
                    w -= hij * V[:, i]
            hnext = np.linalg.norm(w)
            H[j + 1, j] = hnext
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                breakdown = True
                break
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            total += 1
            if hnext <= 1e-14 * max(wnorm0, 1.0):
                breakdown = True
                break
            V[:, j + 1] = w / hnext
            if abs(g[j + 1]) <= tol * bnorm or total >= max_iter:
                break
        if k > 0:
            y = _upper_solve(H[:k, :k], g[:k])
            x = x + Z[:, :k] @ y
        r = b - apply_A(x)
        beta = np.linalg.norm(r)
        relres = beta / bnorm
        if relres <= tol or breakdown or total >= max_iter or k == 0:
            return GmresResult(x, total, relres, relres <= tol or breakdown, breakdown)


def _upper_solve(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    k = R.shape[0]
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        y[i] = (g[i] - R[i, i + 1 :] @ y[i + 1 :]) / R[i, i]
    return y


def spectrum_check(
    A_op: Operator, P: SaddlePreconditioner, dim: int, max_dim: int = 600
) -> tuple[float, float, np.ndarray]:
    """Eigenvalues of B^{-1} A by dense column-wise assembly.

    Returns ``(min real part, max real part, eigenvalues)``.
    """
    if dim > max_dim:
        raise ValueError(f"dense spectrum check limited to dim <= {max_dim}, got {dim}")
    cols = np.empty((dim, dim))
    e = np.zeros(dim)
    for i in range(dim):
        e[i] = 1.0
        cols[:, i] = P(A_op(e))
        e[i] = 0.0
    eig = np.linalg.eigvals(cols)
    return float(eig.real.min()), float(eig.real.max()), eig
