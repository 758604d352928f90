"""Dense complex linear algebra used by every numerical check.

Matrices are ``numpy`` arrays of dtype ``complex128``.  The Hermitian
eigensolver is a parallel-ordered cyclic Jacobi method; everything else
(norms, ranks, kernels, Gram factorisations) is expressed through it so the
tolerance bookkeeping lives in one place.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .config import DEFAULT, Tolerances
from .errors import NoConvergence, NotHermitian, NotPSD

ComplexMatrix = np.ndarray


def as_matrix(a) -> ComplexMatrix:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {m.shape}")
    return m


def is_hermitian(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    scale = np.linalg.norm(a)
    return bool(np.linalg.norm(a - a.conj().T) <= tol.hermitian * scale)


def _require_hermitian(a: ComplexMatrix, tol: Tolerances) -> ComplexMatrix:
    a = as_matrix(a)
    if not is_hermitian(a, tol):
        raise NotHermitian(f"matrix of shape {a.shape} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def _round_robin(m: int) -> list[np.ndarray]:
    """Orderings of ``0..m-1`` (``m`` even) placing each step's pairs adjacently.

    Over the ``m - 1`` steps every pair of indices meets exactly once, and the
    pairs within one step are disjoint, so their rotations commute.
    """
    players = list(range(m))
    steps = []
    for _ in range(m - 1):
        order = []
        for k in range(m // 2):
            order += [players[k], players[m - 1 - k]]
        steps.append(np.array(order, dtype=int))
        players = [players[0], players[-1]] + players[1:-1]
    return steps


def _rotations(a: ComplexMatrix):
    """2x2 Jacobi rotations annihilating each adjacent pair's off-diagonal entry."""
    k = a.shape[0] // 2
    idx = np.arange(k)
    app = a[2 * idx, 2 * idx].real
    aqq = a[2 * idx + 1, 2 * idx + 1].real
    apq = a[2 * idx, 2 * idx + 1]
    mag = np.abs(apq)
    live = mag > 1e-300
    safe = np.where(live, mag, 1.0)
    phase = np.where(live, apq / safe, 1.0)
    tau = (aqq - app) / (2.0 * safe)
    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
    t = np.where(live, t, 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    return c.astype(np.complex128), s.astype(np.complex128), -s * phase.conj(), c * phase.conj()


def _rotate_columns(m: ComplexMatrix, g00, g01, g10, g11) -> None:
    """In place ``M <- M G`` for the block-diagonal rotation on adjacent column pairs."""
    x, y = m[:, 0::2].copy(), m[:, 1::2].copy()
    m[:, 0::2] = x * g00 + y * g10
    m[:, 1::2] = x * g01 + y * g11


def hermitian_eig(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, ComplexMatrix]:
    """Eigen-decomposition ``A = U diag(w) U*`` with ``w`` descending.

    Raises:
        NotHermitian: if ``A`` fails the Hermitian test.
        NoConvergence: if the off-diagonal mass does not fall below
            ``tol.eig_offdiag * ||A||_F`` within ``tol.max_sweeps`` sweeps.
    """
    a = _require_hermitian(a, tol)
    n = a.shape[0]
    if n <= 1:
        return a.diagonal().real.copy(), np.eye(n, dtype=np.complex128)
    # an odd size gets a decoupled dummy index that no rotation ever touches
    m = n + (n % 2)
    work = np.zeros((m, m), dtype=np.complex128)
    work[:n, :n] = a
    u = np.eye(m, dtype=np.complex128)
    k = m // 2
    target = tol.eig_offdiag * np.linalg.norm(a)
    steps = _round_robin(m)
    cur = np.arange(m)
    pos = np.empty(m, dtype=int)

    def off(x):
        return np.linalg.norm(x - np.diag(x.diagonal()))

    converged = off(work) <= target
    sweeps = 0
    while not converged and sweeps < tol.max_sweeps:
        for order in steps:
            pos[cur] = np.arange(m)
            idx = pos[order]
            work = work[np.ix_(idx, idx)]
            u = u[:, idx]
            cur = order
            g00, g01, g10, g11 = _rotations(work)
            _rotate_columns(work, g00, g01, g10, g11)
            _rotate_columns(u, g00, g01, g10, g11)
            # rows: work <- G^H work
            x, y = work[0::2, :].copy(), work[1::2, :].copy()
            work[0::2, :] = g00.conj()[:, None] * x + g10.conj()[:, None] * y
            work[1::2, :] = g01.conj()[:, None] * x + g11.conj()[:, None] * y
            pairs = np.arange(k)
            work[2 * pairs, 2 * pairs + 1] = 0.0
            work[2 * pairs + 1, 2 * pairs] = 0.0
        sweeps += 1
        converged = off(work) <= target
    if not converged:
        raise NoConvergence(
            f"Jacobi did not converge in {tol.max_sweeps} sweeps", witness={"off": float(off(work))}
        )
    keep = cur < n
    w = work.diagonal().real[keep]
    vecs = u[:n][:, keep]
    order = np.argsort(-w, kind="stable")
    return w[order].copy(), vecs[:, order]


def operator_norm(a, tol: Tolerances = DEFAULT, seed: int = 0) -> float:
    """Largest singular value, by power iteration on ``A* A``.

    ``a`` may be dense or a ``scipy.sparse`` matrix.  Falls back to the full
    eigen-decomposition of ``A* A`` when the iteration stagnates.
    """
    dense = not sp.issparse(a)
    if dense:
        a = as_matrix(a)
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return 0.0
    if dense and not np.any(a):
        return 0.0
    if not dense and a.count_nonzero() == 0:
        return 0.0
    ah = a.conj().T
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(cols) + 1j * rng.standard_normal(cols)
    x /= np.linalg.norm(x)
    prev = -1.0
    for _ in range(tol.norm_max_iter):
        y = ah @ (a @ x)
        lam = float(np.real(np.vdot(x, y)))
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector in the kernel; the fallback handles it
            break
        resid = np.linalg.norm(y - lam * x)
        if abs(lam - prev) <= tol.norm_rel * max(lam, 1e-300) and resid <= 1e-7 * ny:
            return float(np.sqrt(max(lam, 0.0)))
        prev = lam
        x = y / ny
    gram = ah @ a
    if not dense:
        gram = gram.toarray()
    w, _ = hermitian_eig(gram, tol)
    return float(np.sqrt(max(w[0], 0.0)))


def psd_min_eig(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    a = _require_hermitian(a, tol)
    if a.shape[0] == 0:
        return 0.0
    w, _ = hermitian_eig(a, tol)
    return float(w[-1])


def psd_threshold(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> float:
    """The most negative eigenvalue still accepted as PSD."""
    scale = float(np.max(np.abs(hermitian_eig(a, tol)[0]))) if a.shape[0] else 0.0
    return -tol.psd * max(1.0, scale)


def is_psd(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> tuple[bool, float]:
    """Return ``(passes, min_eig)`` for the PSD test ``min eig >= -psd*max(1, ||A||)``."""
    a = _require_hermitian(a, tol)
    if a.shape[0] == 0:
        return True, 0.0
    w, _ = hermitian_eig(a, tol)
    scale = max(1.0, float(np.max(np.abs(w))))
    return bool(w[-1] >= -tol.psd * scale), float(w[-1])


def _pivoted_cholesky(g: ComplexMatrix, stop: float) -> ComplexMatrix | None:
    """Low-rank factor ``L`` with ``G ~ L L*`` by diagonal pivoting.

    Returns ``None`` when a Schur complement pivot turns clearly negative, so
    the caller can fall back to the full eigen-decomposition.
    """
    n = g.shape[0]
    diag = np.real(np.diag(g)).copy()
    cols: list[np.ndarray] = []
    factor = np.zeros((n, 0), dtype=np.complex128)
    while len(cols) < n:
        k = int(np.argmax(diag))
        if diag[k] <= stop:
            break
        col = g[:, k] - factor @ factor[k].conj()
        col = col / np.sqrt(diag[k])
        cols.append(col)
        factor = np.column_stack(cols)
        diag = diag - np.abs(col) ** 2
    if np.min(diag, initial=0.0) < -stop * 1e3:
        return None
    return factor


def gram_orthonormalize(g: ComplexMatrix, tol: Tolerances = DEFAULT) -> tuple[ComplexMatrix, int]:
    """Factor a PSD Gram matrix as ``G = C* C``.

    Returns ``(C, rank)`` where ``C`` has shape ``rank x n``; column ``i`` of
    ``C`` is an orthonormal-coordinate representative of symbol ``i``.  Large
    Gram matrices of low rank are first compressed by a pivoted Cholesky
    factor; the rank decision is then made on the small factor Gram, whose
    nonzero spectrum agrees with that of ``G``.

    Raises:
        NotPSD: if ``G`` has an eigenvalue below the PSD threshold.
    """
    g = _require_hermitian(g, tol)
    n = g.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128), 0
    if n > 48:
        scale = max(1.0, float(np.max(np.abs(g))))
        low = _pivoted_cholesky(g, 1e-15 * n * scale)
        if low is not None and low.shape[1] < 0.75 * n:
            resid = g - low @ low.conj().T
            if float(np.max(np.abs(resid), initial=0.0)) <= 1e-12 * scale:
                small = low.conj().T @ low
                w, v = hermitian_eig(0.5 * (small + small.conj().T), tol)
                top = float(w[0]) if w.size else 0.0
                keep = w > tol.rank * top if top > 0 else np.zeros(w.size, dtype=bool)
                coords = (v[:, keep].conj().T @ low.conj().T)
                return coords, int(np.count_nonzero(keep))
    w, u = hermitian_eig(g, tol)
    scale = max(1.0, float(np.max(np.abs(w))))
    if w[-1] < -tol.psd * scale:
        raise NotPSD(f"Gram matrix has eigenvalue {w[-1]:.3e}", witness={"min_eig": float(w[-1])})
    top = float(w[0])
    keep = w > tol.rank * top if top > 0 else np.zeros(n, dtype=bool)
    rank = int(np.count_nonzero(keep))
    coords = np.sqrt(w[keep])[:, None] * u[:, keep].conj().T
    return coords, rank


def pinv_wide(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> ComplexMatrix:
    """Moore-Penrose inverse of a matrix with few rows, via ``A A*``."""
    a = as_matrix(a)
    rows, cols = a.shape
    if rows == 0 or cols == 0:
        return np.zeros((cols, rows), dtype=np.complex128)
    gram = a @ a.conj().T
    w, u = hermitian_eig(0.5 * (gram + gram.conj().T), tol)
    top = float(w[0])
    if top <= 0:
        return np.zeros((cols, rows), dtype=np.complex128)
    keep = w > tol.rank * top
    uk = u[:, keep]
    return a.conj().T @ (uk / w[keep]) @ uk.conj().T


def solve_linear_subspace(m: ComplexMatrix, tol: Tolerances = DEFAULT) -> ComplexMatrix:
    """Orthonormal basis (as columns) of ``ker M``."""
    m = as_matrix(m)
    cols = m.shape[1]
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    mm = m.conj().T @ m
    mm = 0.5 * (mm + mm.conj().T)
    w, u = hermitian_eig(mm, tol)
    thresh = tol.kernel * max(1.0, float(np.max(np.abs(w))))
    return u[:, w <= thresh]


def rank(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> int:
    """Numerical rank via the Gram ``A* A`` and the shared rank threshold."""
    a = as_matrix(a)
    if a.size == 0:
        return 0
    gram = a.conj().T @ a if a.shape[1] <= a.shape[0] else a @ a.conj().T
    w, _ = hermitian_eig(0.5 * (gram + gram.conj().T), tol)
    top = float(w[0])
    if top <= 0:
        return 0
    return int(np.count_nonzero(w > tol.rank * top))


def orthonormal_range(a: ComplexMatrix, tol: Tolerances = DEFAULT) -> ComplexMatrix:
    """Orthonormal basis (columns) of the range of ``A``."""
    a = as_matrix(a)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    gram = a @ a.conj().T
    w, u = hermitian_eig(0.5 * (gram + gram.conj().T), tol)
    top = float(w[0])
    if top <= 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    return u[:, w > tol.rank * top]


def vec(x: ComplexMatrix) -> np.ndarray:
    """Column-major vectorisation, so ``vec(A X B) = (B^T kron A) vec(X)``."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> ComplexMatrix:
    return np.asarray(v).reshape((rows, rows if cols is None else cols), order="F")


def matrix_to_dict(a: ComplexMatrix) -> dict:
    a = as_matrix(a)
    flat = a.reshape(-1)
    return {"rows": a.shape[0], "cols": a.shape[1], "re": flat.real.tolist(), "im": flat.imag.tolist()}


def matrix_from_dict(obj: dict) -> ComplexMatrix:
    from .errors import ShapeMismatch

    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", [0.0] * len(obj["re"])), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ShapeMismatch(f"malformed matrix object: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise ShapeMismatch(f"matrix object declares {rows}x{cols} but carries {re.size} entries")
    return (re + 1j * im).reshape(rows, cols)
