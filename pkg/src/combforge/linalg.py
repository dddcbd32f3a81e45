"""Dense complex linear algebra on labeled tensor factors.

Every operator carries a :class:`Layout` for its rows and columns: an ordered
tuple of ``(label, dim)`` pairs. Factor ordering is never implicit; partial
traces, permutations and channel applications all address factors by label.

Conventions (see ``docs/conventions.md``):

* ``vec`` is row-major, ``vec(|a><b|) = |a>|b>``, hence
  ``vec(A @ B @ C) = kron(A, C.T) @ vec(B)``.
* Kronecker products follow the layout order, first factor most significant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PSD_TOL = 1e-9
HERMITICITY_TOL = 1e-12


class LayoutError(ValueError):
    """Raised on label collisions, unknown labels or dimension mismatches."""


class NotPositiveError(ValueError):
    """Raised when an operator has an eigenvalue below the PSD floor."""


@dataclass(frozen=True)
class Layout:
    """Ordered labeled tensor factors.

    ``Layout([("X1", 2), ("Y1", 3)])`` describes ``C^2 (x) C^3``. The empty
    layout is the one-dimensional space.
    """

    factors: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        norm = []
        for item in self.factors:
            label, dim = item
            dim = int(dim)
            if dim < 1:
                raise LayoutError(f"factor {label!r} has non-positive dimension {dim}")
            norm.append((str(label), dim))
        labels = [f[0] for f in norm]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate labels in layout: {labels}")
        object.__setattr__(self, "factors", tuple(norm))

    @classmethod
    def of(cls, labels: Iterable[str], dims: Iterable[int]) -> "Layout":
        labels, dims = list(labels), list(dims)
        if len(labels) != len(dims):
            raise LayoutError("labels and dims differ in length")
        return cls(tuple(zip(labels, dims)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f[0] for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f[1] for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.factors else 1

    def __len__(self) -> int:
        return len(self.factors)

    def __iter__(self):
        return iter(self.factors)

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __add__(self, other: "Layout") -> "Layout":
        return Layout(self.factors + other.factors)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown label {label!r}; layout has {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.factors[self.index(label)][1]

    def select(self, labels: Iterable[str]) -> "Layout":
        """Sub-layout in the order given by ``labels``."""
        return Layout(tuple((lab, self.dim(lab)) for lab in labels))

    def without(self, labels: Iterable[str]) -> "Layout":
        drop = set(labels)
        for lab in drop:
            self.index(lab)
        return Layout(tuple(f for f in self.factors if f[0] not in drop))

    def reversed(self) -> "Layout":
        return Layout(self.factors[::-1])

    def relabel(self, mapping: dict) -> "Layout":
        return Layout(tuple((mapping.get(lab, lab), d) for lab, d in self.factors))

    def to_list(self) -> list:
        return [[lab, d] for lab, d in self.factors]

    @classmethod
    def from_list(cls, items) -> "Layout":
        return cls(tuple((str(lab), int(d)) for lab, d in items))


def _as_layout(layout) -> Layout:
    return layout if isinstance(layout, Layout) else Layout(tuple(layout))


class ComplexMatrix:
    """A dense complex matrix with row and column layouts. Read-only."""

    __slots__ = ("data", "row_layout", "col_layout")

    def __init__(self, data, row_layout, col_layout=None):
        row_layout = _as_layout(row_layout)
        col_layout = row_layout if col_layout is None else _as_layout(col_layout)
        arr = np.array(data, dtype=complex)
        shape = (row_layout.total_dim, col_layout.total_dim)
        if arr.size != shape[0] * shape[1]:
            raise LayoutError(f"entries of size {arr.size} do not fit layouts {shape}")
        arr = arr.reshape(shape)
        arr.flags.writeable = False
        self.data = arr
        self.row_layout = row_layout
        self.col_layout = col_layout

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def adjoint(self) -> "ComplexMatrix":
        return ComplexMatrix(self.data.conj().T, self.col_layout, self.row_layout)

    def __matmul__(self, other: "ComplexMatrix") -> "ComplexMatrix":
        if self.col_layout.dims != other.row_layout.dims:
            raise LayoutError("inner layouts do not match")
        return ComplexMatrix(self.data @ other.data, self.row_layout, other.col_layout)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(rows={self.row_layout.labels}, cols={self.col_layout.labels})"


class HermitianOperator(ComplexMatrix):
    """Square Hermitian matrix on a single layout, stored as ``(M + M^*)/2``."""

    __slots__ = ()

    def __init__(self, data, layout, *, tol: float | None = None):
        layout = _as_layout(layout)
        arr = np.array(data, dtype=complex).reshape(layout.total_dim, layout.total_dim)
        scale = max(np.abs(arr).max(initial=0.0), 1e-300)
        tol = HERMITICITY_TOL * scale if tol is None else tol
        err = np.abs(arr - arr.conj().T).max(initial=0.0)
        if err > tol:
            raise ValueError(f"operator is not Hermitian (deviation {err:.3e} > {tol:.3e})")
        super().__init__((arr + arr.conj().T) / 2, layout, layout)

    @property
    def layout(self) -> Layout:
        return self.row_layout

    def trace(self) -> float:
        return float(np.trace(self.data).real)


def _data(m) -> np.ndarray:
    return m.data if isinstance(m, ComplexMatrix) else np.asarray(m, dtype=complex)


def as_hermitian(m, layout=None) -> HermitianOperator:
    if isinstance(m, HermitianOperator):
        return m
    if isinstance(m, ComplexMatrix):
        return HermitianOperator(m.data, m.row_layout)
    if layout is None:
        raise LayoutError("a layout is required to wrap a plain array")
    return HermitianOperator(m, layout)


def inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr(a^* b)``."""
    return complex(np.vdot(_data(a), _data(b)))


# ---------------------------------------------------------------------------
# factor bookkeeping
# ---------------------------------------------------------------------------


def tensor_product(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product with concatenated layouts."""
    rows = a.row_layout + b.row_layout
    cols = a.col_layout + b.col_layout
    data = np.kron(a.data, b.data)
    if isinstance(a, HermitianOperator) and isinstance(b, HermitianOperator):
        return HermitianOperator(data, rows)
    return ComplexMatrix(data, rows, cols)


def ptrace_array(data: np.ndarray, dims: Sequence[int], traced: Iterable[int]) -> np.ndarray:
    """Partial trace of a square array over the factor positions ``traced``."""
    dims = tuple(dims)
    n = len(dims)
    traced = set(traced)
    t = np.asarray(data).reshape(dims + dims)
    row_ids = list(range(n))
    col_ids = [i if i in traced else n + i for i in range(n)]
    keep = [i for i in range(n) if i not in traced]
    out_ids = keep + [n + i for i in keep]
    kd = int(np.prod([dims[i] for i in keep], dtype=np.int64))
    return np.einsum(t, row_ids + col_ids, out_ids).reshape(kd, kd)


def permute_array(data: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Conjugate a square array by the factor permutation; new factor ``i`` is old ``perm[i]``."""
    dims = tuple(dims)
    n = len(dims)
    t = np.asarray(data).reshape(dims + dims)
    axes = list(perm) + [n + p for p in perm]
    d = int(np.prod(dims, dtype=np.int64)) if dims else 1
    return t.transpose(axes).reshape(d, d)


def permute_vector(vec_: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    dims = tuple(dims)
    return np.asarray(vec_).reshape(dims).transpose(list(perm)).reshape(-1)


def partial_trace(m: HermitianOperator, labels: Iterable[str]) -> HermitianOperator:
    """Trace out the factors named in ``labels``; survivors keep their order."""
    labels = list(labels)
    layout = m.row_layout
    idx = [layout.index(lab) for lab in labels]
    data = ptrace_array(m.data, layout.dims, idx)
    out = layout.without(labels)
    if isinstance(m, HermitianOperator):
        return HermitianOperator(data, out)
    return ComplexMatrix(data, out, out)


def permute_factors(m: ComplexMatrix, target_order: Sequence[str]) -> ComplexMatrix:
    """Reorder the tensor factors of a square operator to ``target_order``."""
    layout = m.row_layout
    target_order = list(target_order)
    if sorted(target_order) != sorted(layout.labels):
        raise LayoutError(f"{target_order} is not a permutation of {list(layout.labels)}")
    perm = [layout.index(lab) for lab in target_order]
    data = permute_array(m.data, layout.dims, perm)
    new = layout.select(target_order)
    if isinstance(m, HermitianOperator):
        return HermitianOperator(data, new)
    return ComplexMatrix(data, new, new)


def permutation_matrix(layout: Layout, target_order: Sequence[str]) -> ComplexMatrix:
    """The unitary mapping ``layout`` basis vectors to ``target_order`` ones."""
    perm = [layout.index(lab) for lab in target_order]
    d = layout.total_dim
    idx = np.arange(d).reshape(layout.dims) if layout.factors else np.arange(1)
    new_idx = idx.transpose(perm).reshape(-1) if layout.factors else idx
    p = np.zeros((d, d))
    p[np.arange(d), new_idx] = 1.0
    return ComplexMatrix(p, layout.select(target_order), layout)


def reversal_isometry(layout: Layout) -> ComplexMatrix:
    """The operator reversing the order of every tensor factor of ``layout``."""
    return permutation_matrix(layout, list(layout.labels)[::-1])


def vec(m) -> np.ndarray:
    """Row-major vectorization: ``vec(|a><b|) = |a>|b>``."""
    return np.asarray(_data(m)).reshape(-1).copy()


def unvec(v: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return np.asarray(v).reshape(shape)


# ---------------------------------------------------------------------------
# spectral functions
# ---------------------------------------------------------------------------


def _phase_fix(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(initial=0.0), 1e-300))
        if nz.size:
            ph = col[nz[0]] / abs(col[nz[0]])
            out[:, j] = col / ph
    return out


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvector columns.

    Each eigenvector is normalized so that its first non-negligible component
    is real and positive, which makes the output reproducible.
    """
    a = _data(m)
    a = (a + a.conj().T) / 2
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    return w[order], _phase_fix(v[:, order])


def _wrap_like(m, data):
    if isinstance(m, HermitianOperator):
        return HermitianOperator(data, m.layout)
    if isinstance(m, ComplexMatrix):
        return ComplexMatrix(data, m.row_layout, m.col_layout)
    return data


def psd_floor(w: np.ndarray, psd_tol: float = PSD_TOL) -> float:
    return -psd_tol * max(np.abs(w).max(initial=0.0), 1.0e-300)


def check_psd(m, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Return eigenvalues, raising :class:`NotPositiveError` below the floor."""
    w = np.linalg.eigvalsh(_data(m))
    floor = psd_floor(w, psd_tol)
    if w.size and w.min() < floor:
        raise NotPositiveError(f"minimum eigenvalue {w.min():.3e} below PSD floor {floor:.3e}")
    return w


def matrix_sqrt_psd(m, psd_tol: float = PSD_TOL):
    """Principal square root of a PSD operator (small negative eigenvalues clipped)."""
    w, v = eig_hermitian(m)
    floor = psd_floor(w, psd_tol)
    if w.size and w.min() < floor:
        raise NotPositiveError(f"minimum eigenvalue {w.min():.3e} below PSD floor {floor:.3e}")
    s = np.sqrt(np.clip(w, 0.0, None))
    return _wrap_like(m, (v * s) @ v.conj().T)


def pseudo_inverse(m, rank_tol: float = 1e-10):
    """Moore-Penrose inverse; singular values below ``rank_tol * s_max`` count as zero."""
    a = _data(m)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    keep = s > rank_tol * (s[0] if s.size else 0.0)
    inv = (vh[keep].conj().T / s[keep]) @ u[:, keep].conj().T
    if isinstance(m, ComplexMatrix):
        return ComplexMatrix(inv, m.col_layout, m.row_layout)
    return inv


def fidelity(p, q, psd_tol: float = PSD_TOL) -> float:
    """Fidelity ``||sqrt(p) sqrt(q)||_1`` (not squared)."""
    pd, qd = _data(p), _data(q)
    if pd.shape != qd.shape:
        raise LayoutError("fidelity arguments act on different spaces")
    if isinstance(p, ComplexMatrix) and isinstance(q, ComplexMatrix):
        if p.row_layout.dims != q.row_layout.dims:
            raise LayoutError("fidelity arguments have different layouts")
    sp = matrix_sqrt_psd(pd, psd_tol)
    sq = matrix_sqrt_psd(qd, psd_tol)
    return float(np.linalg.svd(sp @ sq, compute_uv=False).sum())


def complete_isometry(columns, gram_tol: float = 1e-10):
    """Extend orthonormal columns to a square unitary with those leading columns."""
    a = _data(columns)
    d, k = a.shape
    gram = a.conj().T @ a
    err = np.abs(gram - np.eye(k)).max(initial=0.0)
    if err > gram_tol:
        raise ValueError(f"columns are not orthonormal (Gram residual {err:.3e})")
    if k == d:
        out = a.copy()
    else:
        # complement spans the null space of a^*
        u, _, _ = np.linalg.svd(a, full_matrices=True)
        comp = u[:, k:]
        comp = comp - a @ (a.conj().T @ comp)
        q, _ = np.linalg.qr(comp)
        out = np.concatenate([a, q], axis=1)
    if isinstance(columns, ComplexMatrix):
        return ComplexMatrix(out, columns.row_layout, columns.row_layout)
    return out


# ---------------------------------------------------------------------------
# labeled contractions
# ---------------------------------------------------------------------------


def apply_choi(
    choi: np.ndarray,
    in_layout: Layout,
    out_layout: Layout,
    state: np.ndarray,
    state_layout: Layout,
) -> tuple[np.ndarray, Layout]:
    """Apply the map with Choi matrix ``choi`` (output-then-input) to factors of ``state``.

    The input labels must appear in ``state_layout`` (dim-1 labels may be absent).
    Output factors are appended after the untouched factors. Works for any
    linear map, completely positive or not, and for non-Hermitian ``state``.
    Returns the new data and layout.
    """
    missing = [lab for lab in in_layout.labels if lab not in state_layout]
    for lab in missing:
        if in_layout.dim(lab) != 1:
            raise LayoutError(f"state has no factor {lab!r}")
        state_layout = state_layout + Layout(((lab, 1),))
    for lab in in_layout.labels:
        if state_layout.dim(lab) != in_layout.dim(lab):
            raise LayoutError(f"dimension mismatch on {lab!r}")
    rest = state_layout.without(in_layout.labels)
    clash = set(rest.labels) & set(out_layout.labels)
    if clash:
        raise LayoutError(f"output labels {sorted(clash)} already present in state")

    ns = len(state_layout)
    nin, nout = len(in_layout), len(out_layout)
    sdims = state_layout.dims
    st = np.asarray(state).reshape(sdims + sdims)
    jt = np.asarray(choi).reshape(out_layout.dims + in_layout.dims + out_layout.dims + in_layout.dims)

    # ids: state rows 0..ns-1, state cols ns..2ns-1, output rows/cols after.
    s_row = list(range(ns))
    s_col = list(range(ns, 2 * ns))
    o_row = list(range(2 * ns, 2 * ns + nout))
    o_col = list(range(2 * ns + nout, 2 * ns + 2 * nout))
    in_pos = [state_layout.index(lab) for lab in in_layout.labels]
    j_sub = o_row + [s_row[p] for p in in_pos] + o_col + [s_col[p] for p in in_pos]
    rest_pos = [state_layout.index(lab) for lab in rest.labels]
    out_sub = [s_row[p] for p in rest_pos] + o_row + [s_col[p] for p in rest_pos] + o_col
    res = np.einsum(jt, j_sub, st, s_row + s_col, out_sub, optimize=True)
    new_layout = rest + out_layout
    d = new_layout.total_dim
    return res.reshape(d, d), new_layout


def apply_operator_to_vector(
    op: np.ndarray,
    in_layout: Layout,
    out_layout: Layout,
    psi: np.ndarray,
    psi_layout: Layout,
) -> tuple[np.ndarray, Layout]:
    """Apply a linear operator on some factors of a labeled vector; outputs appended."""
    missing = [lab for lab in in_layout.labels if lab not in psi_layout]
    for lab in missing:
        if in_layout.dim(lab) != 1:
            raise LayoutError(f"vector has no factor {lab!r}")
        psi_layout = psi_layout + Layout(((lab, 1),))
    rest = psi_layout.without(in_layout.labels)
    n = len(psi_layout)
    nout = len(out_layout)
    t = np.asarray(psi).reshape(psi_layout.dims)
    ot = np.asarray(op).reshape(out_layout.dims + in_layout.dims)
    p_ids = list(range(n))
    o_ids = list(range(n, n + nout))
    in_pos = [psi_layout.index(lab) for lab in in_layout.labels]
    rest_pos = [psi_layout.index(lab) for lab in rest.labels]
    res = np.einsum(ot, o_ids + [p_ids[p] for p in in_pos], t, p_ids,
                    [p_ids[p] for p in rest_pos] + o_ids, optimize=True)
    new_layout = rest + out_layout
    return res.reshape(-1), new_layout


def max_entangled_vector(dim: int) -> np.ndarray:
    """``vec(I_dim)``, unnormalized."""
    return np.eye(dim, dtype=complex).reshape(-1)
