"""Sparse linear solves with Dirichlet elimination."""
import warnings
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import LinearOperator, MatrixRankWarning, cg, spsolve

from common import constants as C
from common.errors import SolverError


def _diagnostics(K: csr_matrix) -> str:
    diag = np.abs(K.diagonal())
    return f"n={K.shape[0]}, nnz={K.nnz}, min|diag|={diag.min() if diag.size else 0.0:.3e}"


def solve_linear(K: csr_matrix, rhs: np.ndarray, method: str = C.LINEAR_DIRECT,
                 rtol: float = 1e-12) -> np.ndarray:
    """
    Raises:
        SolverError: singular matrix or iterative solver breakdown
    """
    if K.shape[0] == 0:
        return np.zeros(0)
    if method == C.LINEAR_CG:
        d = K.diagonal()
        if np.any(d <= 0.0):
            raise SolverError(f"cg needs a positive diagonal ({_diagnostics(K)})")
        inv = 1.0 / d
        M = LinearOperator(K.shape, matvec=lambda x: inv * x)
        x, info = cg(K, rhs, rtol=rtol, atol=0.0, maxiter=20 * K.shape[0], M=M)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info}; {_diagnostics(K)})")
        return x
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            x = spsolve(K.tocsc(), rhs)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise SolverError(f"singular matrix ({exc}; {_diagnostics(K)})")
    x = np.atleast_1d(x)
    if not np.all(np.isfinite(x)):
        raise SolverError(f"singular matrix, non-finite solution ({_diagnostics(K)})")
    return x


def solve_constrained(K: csr_matrix, R: np.ndarray, fixed: np.ndarray, delta_fixed: np.ndarray,
                      method: str = C.LINEAR_DIRECT) -> np.ndarray:
    """
    Correction delta solving K delta = -R with delta[fixed] = delta_fixed.
    """
    n = K.shape[0]
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    delta = np.zeros(n)
    delta[fixed] = delta_fixed
    K_free = K[free]
    rhs = -R[free] - K_free[:, fixed] @ delta_fixed
    delta[free] = solve_linear(K_free[:, free].tocsr(), rhs, method)
    return delta
