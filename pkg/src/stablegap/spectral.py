"""Eigenpairs of the discrete killed generator and the kernels built from them.

The eigenproblem is K phi = lambda m phi with K the stiffness matrix and
m = h^2, so eigenvectors are orthonormal for <f, g>_mass = m sum f_i g_i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from .errors import ParameterError, PositivityError, SolverError, TruncationError

DENSE_EIGEN_LIMIT = 3000
RESIDUAL_TOL = 1e-10
CLUSTER_TOL = 1e-10


@dataclass(eq=False)
class Spectrum:
    values: np.ndarray  # (k,) ascending
    vectors: np.ndarray  # (n, k), mass-orthonormal
    form: object
    residuals: np.ndarray = None

    @property
    def grid(self):
        return self.form.grid

    @property
    def k(self):
        return len(self.values)

    @property
    def mass(self):
        return self.form.mass

    @property
    def gap(self):
        return float(self.values[1] - self.values[0])

    @property
    def phi1(self):
        return self.vectors[:, 0]

    @property
    def phi2(self):
        return self.vectors[:, 1]

    @property
    def complete(self):
        return self.k == self.form.n


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _dense_eigs(form, k):
    S = form.stiffness() / form.mass
    if k >= form.n:
        vals, vecs = linalg.eigh(S)
    else:
        vals, vecs = linalg.eigh(S, subset_by_index=[0, k - 1])
    return vals, vecs


def block_pcg(apply, rhs, diag, tol=1e-13, maxiter=2000):
    """Jacobi-preconditioned CG on every column of ``rhs`` at once."""
    B = np.atleast_2d(rhs.T).T
    X = np.zeros_like(B)
    R = B.copy()
    Z = R / diag[:, None]
    P = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    bnorm = np.linalg.norm(B, axis=0)
    bnorm[bnorm == 0] = 1.0
    for it in range(maxiter):
        AP = apply(P)
        alpha = rz / np.einsum("ij,ij->j", P, AP)
        X += P * alpha
        R -= AP * alpha
        res = np.linalg.norm(R, axis=0) / bnorm
        if np.all(res < tol):
            return X if rhs.ndim == 2 else X[:, 0]
        Z = R / diag[:, None]
        rz_new = np.einsum("ij,ij->j", R, Z)
        P = Z + P * (rz_new / rz)
        rz = rz_new
    raise SolverError("block CG did not converge", residuals=res)


def _inverse_operator(form):
    """x -> K^{-1} x, by Cholesky when K is stored densely, else matrix-free CG."""
    if form.is_dense:
        factor = linalg.cho_factor(form.stiffness(), lower=True)
        return lambda x: linalg.cho_solve(factor, x)
    diag = form.diagonal()
    return lambda x: block_pcg(form.apply_stiffness, x, diag)


def _lanczos_eigs(form, k, seed=0, max_refine=20):
    """Shift-invert Lanczos (ARPACK on K^-1) for the k smallest eigenpairs, polished by subspace iteration."""
    n = form.n
    inv = _inverse_operator(form)
    op = sparse_linalg.LinearOperator((n, n), matvec=inv, matmat=inv, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    _, V = sparse_linalg.eigsh(op, k=min(k + 2, n - 1), which="LA", tol=1e-12, v0=v0)
    for _ in range(max_refine):
        V, _ = np.linalg.qr(V)
        KV = form.apply_stiffness(V)
        vals, Z = linalg.eigh(V.T @ KV)
        V = V @ Z
        KV = KV @ Z
        res = np.linalg.norm(KV - V * vals, axis=0) / form.mass
        if np.all(res[:k] < 0.1 * RESIDUAL_TOL):
            break
        V = inv(V)
    return vals / form.mass, V


def _cluster_slices(values):
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > CLUSTER_TOL * max(1.0, abs(values[i])):
            yield slice(start, i)
            start = i


def _symmetry_adapt(vecs, values, grid):
    """Make every eigenvector even/odd under both axis reflections.

    Simple eigenvectors are projected onto their parity class (removing
    round-off); degenerate clusters are rotated to the joint eigenbasis of the
    two reflections, odd-in-x1 vectors first.
    """
    try:
        P1, P2 = grid.reflection(0), grid.reflection(1)
    except ParameterError:
        return vecs
    out = vecs.copy()
    for sl in _cluster_slices(values):
        V = out[:, sl]
        M = V.T @ (V[P1] + 0.3141592653589793 * V[P2])
        M = 0.5 * (M + M.T)
        _, Z = linalg.eigh(M)  # eigenvalue -1.31 first: odd in x1 and x2 ...
        W = V @ Z
        par1 = np.sign(np.einsum("ij,ij->j", W, W[P1]))
        par2 = np.sign(np.einsum("ij,ij->j", W, W[P2]))
        W = 0.5 * (W + par1 * W[P1])
        W = 0.5 * (W + par2 * W[P2])
        # odd-in-x1 first, then odd-in-x2
        key = np.lexsort((par2, par1))
        out[:, sl] = W[:, key]
    return out


def _normalise_signs(vecs, grid):
    mass = grid.mass
    vecs = vecs / np.sqrt(mass * np.sum(vecs**2, axis=0))
    v1 = vecs[:, 0]
    if v1[np.argmax(np.abs(v1))] < 0:
        vecs[:, 0] = -v1
    if vecs.shape[1] > 1:
        dom = grid.domain
        probe = grid.nearest((dom.a / 2, 0.0))
        v2 = vecs[:, 1]
        ref = v2[probe] if abs(v2[probe]) > 1e-8 * np.abs(v2).max() else v2[np.argmax(np.abs(v2))]
        if ref < 0:
            vecs[:, 1] = -v2
    for j in range(2, vecs.shape[1]):
        v = vecs[:, j]
        if v[np.argmax(np.abs(v))] < 0:
            vecs[:, j] = -v
    return vecs


def eigenpairs(form, k=4, method="auto", check=True):
    """The k smallest eigenpairs of -L on the grid (k=None: full spectrum)."""
    n = form.n
    full = k is None or k >= n
    k = n if full else int(k)
    if k < 2:
        raise ParameterError("need k >= 2 eigenpairs")
    want = n if full else min(n, k + 2)
    if method == "auto":
        method = "dense" if (n <= DENSE_EIGEN_LIMIT or full) else "lanczos"
    if method == "dense":
        vals, vecs = _dense_eigs(form, want)
    elif method == "lanczos":
        vals, vecs = _lanczos_eigs(form, want)
    else:
        raise ParameterError(f"unknown eigen method {method!r}")
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    vecs = _symmetry_adapt(vecs, vals, form.grid)
    vecs = _normalise_signs(vecs, form.grid)
    vals, vecs = vals[:k], vecs[:, :k]
    spec = Spectrum(vals, vecs, form)
    if check:
        spec.residuals = residuals(spec)
        if np.any(spec.residuals > RESIDUAL_TOL):
            raise SolverError("eigen residuals above tolerance", residuals=spec.residuals)
        if not np.all(spec.phi1 > 0):
            raise PositivityError("ground state is not strictly positive")
        if not vals[1] - vals[0] > 0:
            raise SolverError("first eigenvalue is not simple", residuals=spec.residuals)
    return spec


def residuals(spec):
    """Mass-norm residuals ||-L phi - lambda phi|| for every stored pair."""
    form = spec.form
    R = form.apply_stiffness(spec.vectors) / form.mass - spec.vectors * spec.values
    return np.sqrt(form.mass * np.sum(R**2, axis=0))


# ---------------------------------------------------------------------------
# derived kernels
# ---------------------------------------------------------------------------

def _check_truncation(spec, t, tol=1e-12):
    if spec.complete:
        return
    if np.exp(-(spec.values[-1] - spec.values[0]) * t) >= tol:
        raise TruncationError(
            f"k = {spec.k} eigenpairs too few for t = {t}: "
            f"exp(-(lambda_k - lambda_1) t) = {np.exp(-(spec.values[-1] - spec.values[0]) * t):.3g}"
        )


def heat_kernel(spec, t):
    """Killed transition density p_D(t, c_i, c_j) from the spectral expansion."""
    if not t > 0:
        raise ParameterError("t must be positive")
    _check_truncation(spec, t)
    V = spec.vectors
    return (V * np.exp(-spec.values * t)) @ V.T


def iu_ratio(spec, t):
    """sup_{i,j} |e^{lambda_1 t} p_D(t, i, j) / (phi_1(i) phi_1(j)) - 1|."""
    if t < 1:
        raise ParameterError("the ratio is considered for t >= 1 only")
    _check_truncation(spec, t)
    V = spec.vectors
    phi1 = V[:, 0]
    # subtracting the n = 1 term analytically avoids cancellation
    W = V[:, 1:] / phi1[:, None]
    ratio = (W * np.exp(-(spec.values[1:] - spec.values[0]) * t)) @ W.T
    return float(np.abs(ratio).max())


def green_matrix(form, columns=None):
    """G = K^{-1}, the discrete Green density (solves -L G = I / m).

    ``columns`` restricts the solve to selected cells (returns (n, len(columns))).
    """
    n = form.n
    if columns is None:
        rhs = np.eye(n)
    else:
        columns = np.asarray(columns)
        rhs = np.zeros((n, len(columns)))
        rhs[columns, np.arange(len(columns))] = 1.0
    if form.is_dense:
        return linalg.cho_solve(linalg.cho_factor(form.stiffness(), lower=True), rhs)
    return block_pcg(form.apply_stiffness, rhs, form.diagonal())
