"""Matrix-free interior eigensolver shared by the Dirac and Yamabe solves.

Finds the eigenpairs of a Hermitian operator A nearest a target (zero for
the Dirac operator) through its square: a block iteration drives a
subspace onto the lowest eigenspace of B = (A - shift)^2, then a
Rayleigh-Ritz step with A itself recovers the signed eigenvalues.  The
folded operator never needs a factorization, only applications of A.

The block update is Davidson-type: each Ritz residual is preconditioned
by the inverse of a caller-supplied diagonal model of B (for our
operators, the flat Fourier symbol), shifted by the pair's own Ritz value
and clamped away from resonance, followed by a few damped inner
corrections.  The damping is sized from the caller's bound on how far B
deviates from its diagonal model (for a conformal factor h the pointwise
modulation lies in [e^(2 min h), e^(2 max h)]), which keeps every inner
step contractive.

Starting vectors are the lowest modes of the diagonal model plus a tiny
seeded random admixture, so runs are deterministic for a fixed seed.

Every returned pair is verified: extraction fails (and iteration
continues, or SolverDidNotConverge is raised) unless k candidates pass an
explicit residual gate.  Degenerate clusters are handled by enriching the
converged subspace with its A-image before the sign-recovery step, which
completes any +/- pair the folded iteration delivered only half of.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SolverDidNotConverge


@dataclass
class EigenResult:
    """Signed eigenvalues nearest the target, vectors as rows, residuals
    ||A v - lambda v||, and iteration statistics."""

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    applications: int


def _orth_rows(rows: np.ndarray):
    q, r = np.linalg.qr(rows.T, mode="reduced")
    return q.T, np.abs(np.diag(r))


def lowest_abs_eigenpairs(
    apply_block: Callable[[np.ndarray], np.ndarray],
    diag_model: np.ndarray,
    shape: tuple,
    k: int,
    *,
    modulation_bounds: tuple = (1.0, 1.0),
    pad: int = 14,
    tol: float = 1e-11,
    pair_rtol: float = 1e-8,
    maxiter: int = 400,
    inner: int = 3,
    seed: int = 1234,
    shift: float = 0.0,
) -> EigenResult:
    """Eigenpairs of Hermitian A nearest ``shift`` via the folded operator.

    ``apply_block`` maps arrays of shape (m,) + shape (a block of vectors)
    through A.  ``diag_model`` is a real array of shape ``shape[1:]`` (one
    entry per Fourier mode, broadcast over the leading component axis)
    whose entries approximate the spectrum of (A - shift)^2 mode by mode.
    ``modulation_bounds`` = (lo, hi) bound the pointwise ratio between the
    true folded operator and the model.
    """
    import scipy.fft as sfft

    dim = int(np.prod(shape))
    ncomp = shape[0]
    m = k + pad
    if m > dim:
        raise ValueError(f"requested block {m} exceeds operator dimension {dim}")
    axes = tuple(range(-(len(shape) - 1), 0))

    def B(rows: np.ndarray) -> np.ndarray:
        u = rows.reshape((-1,) + shape)
        au = apply_block(u)
        if shift != 0.0:
            au = au - shift * u
        aau = apply_block(au)
        if shift != 0.0:
            aau = aau - shift * au
        return aau.reshape(-1, dim)

    def A_rows(rows: np.ndarray) -> np.ndarray:
        return apply_block(rows.reshape((-1,) + shape)).reshape(-1, dim)

    lo, hi = modulation_bounds
    omega = 2.0 / (lo + hi)

    def precond(rows: np.ndarray, theta: np.ndarray, scale: float) -> np.ndarray:
        floor = 0.05 * max(scale, 1.0)
        tshape = (len(theta),) + (1,) * len(shape)
        denom = diag_model[None, None] - theta.reshape(tshape)
        denom = np.where(np.abs(denom) < floor, np.where(denom >= 0, floor, -floor), denom)
        u = rows.reshape((-1,) + shape)
        z = sfft.ifftn(sfft.fftn(u, axes=axes, workers=-1) / denom, axes=axes, workers=-1)
        return z.reshape(-1, dim)

    # warm start: lowest modes of the diagonal model, one vector per
    # component, plus a tiny random admixture for determinism-safe mixing
    rng = np.random.default_rng(seed)
    order = np.argsort(diag_model.ravel(), kind="stable")
    cols = []
    for idx in order:
        for comp in range(ncomp):
            e = np.zeros((ncomp,) + diag_model.shape, dtype=complex)
            spec = np.zeros(diag_model.size, dtype=complex)
            spec[idx] = 1.0
            e[comp] = spec.reshape(diag_model.shape)
            cols.append(sfft.ifftn(e, axes=axes).reshape(dim))
            if len(cols) == m:
                break
        if len(cols) == m:
            break
    X = np.asarray(cols)
    X /= np.linalg.norm(X, axis=1)[:, None]
    noise = rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape)
    X = X + 1e-10 * noise / np.linalg.norm(noise, axis=1)[:, None]
    X, _ = _orth_rows(X)

    BX = B(X)
    napply = 2 * m
    best = np.inf
    history: list = []
    it_done = 0
    for it in range(maxiter):
        it_done = it + 1
        if it > 0 and it % 25 == 0:
            BX = B(X)  # refresh tracked images against rotation roundoff
            napply += 2 * X.shape[0]
        H = X.conj() @ BX.T
        H = 0.5 * (H + H.conj().T)
        theta, Y = np.linalg.eigh(H)
        X = Y.T @ X
        BX = Y.T @ BX
        R = BX - theta[:, None] * X
        rnorm = np.linalg.norm(R, axis=1)
        scale = max(1.0, abs(theta[min(k - 1, len(theta) - 1)]))
        relres = float(np.max(rnorm[:k]) / scale)
        history.append(relres)
        best = min(best, relres)
        stagnated = (
            len(history) > 10 and history[-10] < 1.5 * history[-1] and relres < 1e-8
        )
        if relres < tol or stagnated:
            result = _extract(A_rows, X, BX, theta, rnorm, k, scale, pair_rtol, shift)
            if result is not None:
                values, vectors, residuals = result
                return EigenResult(values, vectors, residuals, it_done, napply)
            if stagnated:
                break
        # Davidson correction with damped inner refinement
        Z = omega * precond(R, theta, scale)
        for _ in range(inner):
            BZ = B(Z)
            napply += 2 * Z.shape[0]
            Z = Z + omega * precond(R - (BZ - theta[:, None] * Z), theta, scale)
        W = Z - (Z @ X.conj().T) @ X
        wn = np.linalg.norm(W, axis=1)
        W = W[wn > 1e-13] / wn[wn > 1e-13, None]
        if W.shape[0]:
            W, rdiag = _orth_rows(W)
            W = W[rdiag > 1e-10]
            W = W - (W @ X.conj().T) @ X
            wn = np.linalg.norm(W, axis=1)
            W = W[wn > 0.5] / wn[wn > 0.5, None]
        if W.shape[0] == 0:
            break
        BW = B(W)
        napply += 2 * W.shape[0]
        S = np.vstack([X, W])
        BS = np.vstack([BX, BW])
        gram = S.conj() @ S.T
        gram = 0.5 * (gram + gram.conj().T)
        ew, U = np.linalg.eigh(gram)
        keep = ew > 1e-8
        C = (U[:, keep] / np.sqrt(ew[keep])).conj().T
        S = C @ S
        BS = C @ BS
        H2 = S.conj() @ BS.T
        H2 = 0.5 * (H2 + H2.conj().T)
        _, Y2 = np.linalg.eigh(H2)
        take = min(m, S.shape[0])
        X = Y2[:, :take].T @ S
        BX = Y2[:, :take].T @ BS
    raise SolverDidNotConverge(
        "folded block iteration did not deliver verified eigenpairs",
        iterations=it_done,
        best_residual=best,
    )


def _extract(A_rows, X, BX, theta, rnorm, k, scale, pair_rtol, shift):
    """Signed-pair recovery: enrich converged folded vectors with their
    A-image, Rayleigh-Ritz with A, keep only residual-verified pairs."""
    dim = X.shape[1]
    conv = rnorm < 3e-10 * scale
    if int(np.sum(conv)) < k:
        return None
    V = X[conv]
    AV = A_rows(V)
    avn = np.linalg.norm(AV, axis=1)
    good = avn > 1e-9
    S = np.vstack([V, AV[good] / avn[good, None]])
    Q, rdiag = _orth_rows(S)
    Q = Q[rdiag > 1e-12]
    AQ = A_rows(Q)
    H = Q.conj() @ AQ.T
    H = 0.5 * (H + H.conj().T)
    lam, Y = np.linalg.eigh(H)
    Vr = Y.T @ Q
    AVr = Y.T @ AQ
    res = np.linalg.norm(AVr - lam[:, None] * Vr, axis=1)
    lam_scale = max(1.0, float(np.max(np.abs(lam[np.argsort(np.abs(lam - shift))[:k]] ))))
    ok = res < pair_rtol * lam_scale
    if int(np.sum(ok)) < k:
        return None
    lam, Vr, res = lam[ok], Vr[ok], res[ok]
    offset = np.abs(lam - shift)
    order = np.lexsort((lam, offset))
    return lam[order][:k], Vr[order][:k], res[order][:k]
