"""Phase-space linear algebra in the (x_0..x_{N-1}, p_0..p_{N-1}) ordering."""

from __future__ import annotations

import numpy as np
from scipy import linalg

SYMPLECTIC_TOL = 1e-9
GENERATOR_TOL = 1e-8


def symplectic_form(n: int) -> np.ndarray:
    """Return Omega = [[0, I], [-I, 0]] for ``n`` modes."""
    if n < 1:
        raise ValueError("need at least one mode")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def interleaved_form(n: int) -> np.ndarray:
    """Symplectic form for the (x_0, p_0, x_1, p_1, ...) ordering."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def xp_to_interleaved(n: int) -> np.ndarray:
    """Permutation matrix P with P @ v_xxpp = v_xpxp."""
    perm = np.empty(2 * n, dtype=int)
    perm[0::2] = np.arange(n)
    perm[1::2] = np.arange(n) + n
    return np.eye(2 * n)[perm]


def symplectic_residual(m) -> float:
    """Max-abs entry of M^T Omega M - Omega."""
    m = np.asarray(m)
    omega = symplectic_form(m.shape[0] // 2)
    return float(np.max(np.abs(m.T @ omega @ m - omega)))


def is_symplectic(m, tol: float = SYMPLECTIC_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        return False
    return symplectic_residual(m) < tol


def relative_symplectic_residual(m) -> float:
    """Symplectic residual divided by max(1, max|M|^2).

    Rounding each entry of M limits the absolute residual to roughly
    eps max|M|^2, so this is the attainable measure for strongly squeezing maps.
    """
    m = np.asarray(m)
    return symplectic_residual(m) / max(1.0, float(np.max(np.abs(m))) ** 2)


def check_symplectic(m, tol: float = SYMPLECTIC_TOL) -> np.ndarray:
    """Return ``m`` unchanged, raising if the relative residual exceeds ``tol``."""
    res = relative_symplectic_residual(m)
    if not res < tol:
        raise ArithmeticError(f"matrix is not symplectic: residual {res:.3e}")
    return m


def generator_residual(g) -> float:
    """Asymmetry of Omega G, relative to its size."""
    g = np.asarray(g)
    og = symplectic_form(g.shape[0] // 2) @ g
    scale = max(1.0, float(np.max(np.abs(og))))
    return float(np.max(np.abs(og - og.T))) / scale


def exp_generator(g, check: bool = True) -> np.ndarray:
    """Matrix exponential of a Hamiltonian generator.

    Args:
        g: Real 2N x 2N matrix with Omega @ g symmetric.
        check: Verify the generator condition and the symplectic result.

    Returns:
        exp(g).
    """
    g = np.asarray(g, dtype=float)
    if check:
        res = generator_residual(g)
        if not res < GENERATOR_TOL:
            raise ValueError(f"not a Hamiltonian generator: residual {res:.3e}")
    m = linalg.expm(g)
    if not np.all(np.isfinite(m)):
        raise ArithmeticError("matrix exponential overflowed")
    if check:
        check_symplectic(m)
    return m


def random_generator(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random Hamiltonian generator Omega^T H with symmetric H of spectral norm ~ scale."""
    h = rng.standard_normal((2 * n, 2 * n))
    h = 0.5 * (h + h.T)
    h *= scale / np.linalg.norm(h, 2)
    return symplectic_form(n).T @ h


def symplectic_eigenvalues(cov, ordering: str = "xxpp") -> np.ndarray:
    """Symplectic spectrum of a covariance matrix, ascending.

    The vacuum convention is cov = I/2, giving eigenvalues 1/2.

    Args:
        cov: Symmetric positive definite 2N x 2N matrix.
        ordering: ``"xxpp"`` or ``"xpxp"``.

    Returns:
        Array of the N symplectic eigenvalues.
    """
    cov = np.asarray(cov, dtype=float)
    cov = 0.5 * (cov + cov.T)
    n = cov.shape[0] // 2
    omega = symplectic_form(n) if ordering == "xxpp" else interleaved_form(n)
    ev = np.abs(np.linalg.eigvals(1j * omega @ cov))
    ev = np.sort(ev)
    # eigenvalues of i Omega cov come in +- pairs
    return 0.5 * (ev[0::2] + ev[1::2])


def is_physical(cov, tol: float = 1e-9, ordering: str = "xxpp") -> bool:
    """Check cov + i Omega / 2 >= 0 and symmetry."""
    cov = np.asarray(cov, dtype=float)
    if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, np.max(np.abs(cov))):
        return False
    n = cov.shape[0] // 2
    omega = symplectic_form(n) if ordering == "xxpp" else interleaved_form(n)
    ev = np.linalg.eigvalsh(cov + 0.5j * omega)
    return bool(ev.min() > -tol * max(1.0, np.abs(ev).max()))


def passive_symplectic(unitary) -> np.ndarray:
    """Orthogonal symplectic matrix of an N x N unitary X + iY."""
    u = np.asarray(unitary)
    x, y = u.real, u.imag
    return np.block([[x, -y], [y, x]])


def _lagrangian_completion(vectors, space, tol=1e-8):
    """Extend orthonormal, mutually Omega-orthogonal ``vectors`` from ``space``.

    Picks vectors e from ``space`` (columns) that are orthogonal to all chosen
    e and Omega^T e, so that [E, Omega^T E] is orthogonal.
    """
    n2 = space.shape[0]
    omega_t = symplectic_form(n2 // 2).T
    chosen = list(vectors.T)
    for v in space.T:
        for e in chosen:
            v = v - (e @ v) * e
            oe = omega_t @ e
            v = v - (oe @ v) * oe
        nv = np.linalg.norm(v)
        if nv > tol:
            v = v / nv
            for e in chosen:
                v = v - (e @ v) * e
                oe = omega_t @ e
                v = v - (oe @ v) * oe
            chosen.append(v / np.linalg.norm(v))
    return np.array(chosen).T


def bloch_messiah(m, tol: float = 1e-8):
    """Bloch-Messiah decomposition M = U @ D @ V.T.

    Args:
        m: Symplectic matrix.
        tol: Relative tolerance for grouping singular values near 1.

    Returns:
        (U, D, V) with U, V orthogonal symplectic and D = diag(d, 1/d),
        ``d`` sorted descending and >= 1. The squeezing parameters are log(d).
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0] // 2
    omega_t = symplectic_form(n).T
    _, s, vt = np.linalg.svd(m)
    big = s > 1.0 + tol
    e = vt[big].T
    if e.shape[1] < n:
        rest = vt[~big & (s > 1.0 - tol)].T
        e = _lagrangian_completion(e, rest, tol)
        if e.shape[1] < n:
            # small singular values: their Omega partners live in the large subspace
            e = _lagrangian_completion(e, vt.T, tol)
    d = np.linalg.norm(m @ e, axis=0)
    order = np.argsort(-d, kind="stable")
    e, d = e[:, order], d[order]
    v = np.hstack([e, omega_t @ e])
    f = (m @ e) / d
    u = np.hstack([f, omega_t @ f])
    dd = np.concatenate([d, 1.0 / d])
    pairing = float(np.max(np.abs(u @ np.diag(dd) @ v.T - m)) / max(1.0, np.max(np.abs(m))))
    if pairing > 1e-6:
        raise ArithmeticError(f"Bloch-Messiah pairing failed: residual {pairing:.3e}")
    return u, np.diag(dd), v


def squeezing_parameters(m) -> np.ndarray:
    """Descending squeezing parameters s_i = log(d_i) of a symplectic matrix."""
    _, d, _ = bloch_messiah(m)
    n = d.shape[0] // 2
    return np.log(np.diag(d)[:n])


def ordered_real_schur(a, n_top: int | None = None):
    """Real Schur form with eigenvalues ordered by descending real part.

    Args:
        a: Real square matrix.
        n_top: Only guarantee ordering of the leading ``n_top`` eigenvalues.

    Returns:
        (T, Z) with a = Z T Z^T, T quasi upper triangular.
    """
    a = np.asarray(a, dtype=float)
    t, z = linalg.schur(a, output="real")
    n = a.shape[0]
    n_top = n if n_top is None else min(n_top, n)
    # repeated selection sorts the leading part, one eigenvalue (or pair) at a time
    pos = 0
    while pos < n_top:
        lam = _diag_eigs(t)
        block = lam[pos:]
        target = np.max(block.real)
        sel = np.zeros(n, dtype=bool)
        sel[:pos] = True
        cand = np.arange(pos, n)[np.abs(block.real - target) <= 1e-12 * max(1.0, abs(target))]
        sel[cand[0]] = True
        # keep complex partners together
        if abs(lam[cand[0]].imag) > 0:
            partner = cand[0] + 1 if cand[0] + 1 < n and t[cand[0] + 1, cand[0]] != 0 else cand[0] - 1
            sel[partner] = True
        t, z = _reorder(t, z, sel)
        pos += 2 if abs(_diag_eigs(t)[pos].imag) > 0 else 1
    return t, z


def _diag_eigs(t):
    n = t.shape[0]
    lam = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            blk = t[i:i + 2, i:i + 2]
            lam[i:i + 2] = np.linalg.eigvals(blk)
            i += 2
        else:
            lam[i] = t[i, i]
            i += 1
    return lam


def _reorder(t, z, select):
    trsen = linalg.get_lapack_funcs("trsen", (t,))
    res = trsen(select.astype(np.int32), t, z, job="N", wantq=1)
    t2, z2, info = res[0], res[1], res[-1]
    if info != 0:
        raise ArithmeticError(f"Schur reordering failed (info={info})")
    return t2, z2


def schur_block(g_nl, block: str = "x", n_keep: int | None = None):
    """Real Schur decomposition of one diagonal block of a block-diagonal generator.

    The x block (upper left) is decomposed as X = O T O^T with eigenvalues
    ordered by descending real part. The same O triangularizes the p block
    when p = -X^T, which holds for real probe amplitudes.

    Args:
        g_nl: 2N x 2N generator.
        block: ``"x"`` or ``"p"``.
        n_keep: Number of leading Schur modes to return.

    Returns:
        (O, T, kept) where ``kept`` holds the first ``n_keep`` columns of O.
    """
    g = np.asarray(g_nl)
    if np.iscomplexobj(g):
        if np.max(np.abs(g.imag)) > 0:
            raise ValueError("complex probe amplitudes are not supported")
        g = g.real
    n = g.shape[0] // 2
    off = max(np.max(np.abs(g[:n, n:])), np.max(np.abs(g[n:, :n])))
    if off > 1e-10 * max(1e-300, np.max(np.abs(g))):
        raise ValueError("generator is not block diagonal; probe amplitude must be real")
    x_block = g[:n, :n]
    t, o = ordered_real_schur(x_block, n_keep)
    if block == "p":
        t = o.T @ g[n:, n:] @ o
    elif block != "x":
        raise ValueError("block must be 'x' or 'p'")
    n_keep = n if n_keep is None else n_keep
    return o, t, o[:, :n_keep]
