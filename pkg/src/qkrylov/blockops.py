"""Block-structured operators and vectors for 2x2 partitioned systems.

A :class:`BlockOperator` holds four block actions ``A11, A12, A21, A22``.
Each block may be a dense array, a scipy sparse matrix, a scipy
``LinearOperator``, a callable acting on column stacks, or ``None`` for a
zero block.  All arithmetic is carried out in complex double precision.
"""
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .errors import BadSplit, DimensionMismatch, NonSquare, ParseError

__all__ = [
    "BlockStructure",
    "BlockVector",
    "BlockOperator",
    "apply",
    "load_block_matrix",
    "split",
    "join",
]


@dataclass(frozen=True)
class BlockStructure:
    n1: int
    n2: int

    def __post_init__(self):
        if int(self.n1) < 1 or int(self.n2) < 1:
            raise BadSplit(f"block sizes must be >= 1, got ({self.n1}, {self.n2})")

    @property
    def n(self):
        return self.n1 + self.n2

    def sizes(self):
        return (self.n1, self.n2)


@dataclass
class BlockVector:
    """A vector of ``C^(n1+n2)`` carried as its two blocks."""

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        self.x1 = np.asarray(self.x1, dtype=complex)
        self.x2 = np.asarray(self.x2, dtype=complex)

    @classmethod
    def from_flat(cls, x, structure):
        x1, x2 = split(x, structure)
        return cls(x1.copy(), x2.copy())

    @property
    def structure(self):
        return BlockStructure(self.x1.shape[0], self.x2.shape[0])

    def flat(self):
        return join(self.x1, self.x2)

    def norm(self):
        return float(np.sqrt(np.vdot(self.x1, self.x1).real + np.vdot(self.x2, self.x2).real))

    def __add__(self, other):
        return BlockVector(self.x1 + other.x1, self.x2 + other.x2)

    def __sub__(self, other):
        return BlockVector(self.x1 - other.x1, self.x2 - other.x2)

    def __mul__(self, alpha):
        return BlockVector(alpha * self.x1, alpha * self.x2)

    __rmul__ = __mul__


def split(x, structure):
    """Views of the two blocks of a flat vector (or column stack)."""
    x = np.asarray(x)
    if x.shape[0] != structure.n:
        raise DimensionMismatch(f"vector length {x.shape[0]} != n = {structure.n}")
    return x[: structure.n1], x[structure.n1:]


def join(x1, x2):
    return np.concatenate([np.asarray(x1, dtype=complex), np.asarray(x2, dtype=complex)])


def _as_adjoint(block, rows, cols):
    """Adjoint action of a dense, sparse or LinearOperator block; ``None`` for callables."""
    if block is None:
        return None
    if isinstance(block, LinearOperator):
        return lambda X: np.asarray(block.rmatmat(X), dtype=complex)
    if callable(block) and not isinstance(block, np.ndarray) and not sp.issparse(block):
        return None
    mat = sp.csr_matrix(block, dtype=complex) if sp.issparse(block) else np.asarray(block, dtype=complex)
    mh = mat.conj().T
    if sp.issparse(mh):
        mh = sp.csr_matrix(mh)
    return lambda X: np.asarray(mh @ X, dtype=complex)


def _as_action(block, rows, cols):
    """Normalise one block to a function mapping (cols, s) arrays to (rows, s)."""
    if block is None:
        return None
    if callable(block) and not isinstance(block, (np.ndarray, LinearOperator)) \
            and not sp.issparse(block):
        return block
    if isinstance(block, LinearOperator):
        if block.shape != (rows, cols):
            raise DimensionMismatch(f"block shape {block.shape} != {(rows, cols)}")
        return lambda X: np.asarray(block.matmat(X), dtype=complex)
    if sp.issparse(block):
        mat = sp.csr_matrix(block, dtype=complex)
    else:
        mat = np.asarray(block, dtype=complex)
    if mat.shape != (rows, cols):
        raise DimensionMismatch(f"block shape {mat.shape} != {(rows, cols)}")
    return lambda X: np.asarray(mat @ X, dtype=complex)


class BlockOperator:
    """Linear operator on ``C^n`` with a fixed 2x2 block partition.

    Parameters
    ----------
    structure : BlockStructure or tuple of int
        The split ``(n1, n2)``.
    a11, a12, a21, a22
        Block actions.  Callables receive a 2-D complex array whose columns
        are vectors of the block's domain and must return the corresponding
        column stack.  ``None`` denotes a zero block.
    name : str, optional
        Label used in reports.
    adjoints : dict, optional
        Callables for ``A_ij^*`` keyed by 0-based ``(i, j)``; only needed for
        callable blocks.  Dense, sparse and ``LinearOperator`` blocks supply
        their own adjoints.
    hermitian : bool
        Declare ``A = A^*``, so that ``A_ij^* = A_ji``.
    """

    def __init__(self, structure, a11, a12, a21, a22, name=None, adjoints=None, hermitian=False):
        if not isinstance(structure, BlockStructure):
            structure = BlockStructure(*structure)
        self.structure = structure
        n1, n2 = structure.sizes()
        self._act = {
            (0, 0): _as_action(a11, n1, n1),
            (0, 1): _as_action(a12, n1, n2),
            (1, 0): _as_action(a21, n2, n1),
            (1, 1): _as_action(a22, n2, n2),
        }
        blocks = {(0, 0): a11, (0, 1): a12, (1, 0): a21, (1, 1): a22}
        sizes = structure.sizes()
        self._adj = {ij: _as_adjoint(blk, sizes[ij[0]], sizes[ij[1]]) for ij, blk in blocks.items()}
        self._zero = {ij: blk is None for ij, blk in blocks.items()}
        self.hermitian = bool(hermitian)
        if hermitian:
            for (i, j) in blocks:
                if self._adj[(i, j)] is None and not self._zero[(i, j)]:
                    self._adj[(i, j)] = self._act[(j, i)]
        for ij, f in (adjoints or {}).items():
            self._adj[tuple(ij)] = f
        self.name = name or "block-operator"

    @property
    def n1(self):
        return self.structure.n1

    @property
    def n2(self):
        return self.structure.n2

    @property
    def n(self):
        return self.structure.n

    @property
    def shape(self):
        return (self.n, self.n)

    dtype = np.dtype(complex)

    def is_zero_block(self, i, j):
        return self._act[(i, j)] is None

    def block_apply(self, i, j, v):
        """Apply block ``A_{i+1, j+1}`` (0-based ``i, j``) to a vector or column stack."""
        v = np.asarray(v, dtype=complex)
        one_d = v.ndim == 1
        X = v[:, None] if one_d else v
        if X.shape[0] != self.structure.sizes()[j]:
            raise DimensionMismatch(
                f"block ({i + 1},{j + 1}) expects {self.structure.sizes()[j]} rows, got {X.shape[0]}")
        act = self._act[(i, j)]
        if act is None:
            Y = np.zeros((self.structure.sizes()[i], X.shape[1]), dtype=complex)
        else:
            Y = act(np.ascontiguousarray(X))
        return Y[:, 0] if one_d else Y

    def has_adjoint(self):
        return all(self._zero[ij] or self._adj[ij] is not None for ij in self._adj)

    def block_apply_adjoint(self, i, j, v):
        """Apply ``(A_{i+1, j+1})^*`` to a vector or column stack of the block's range space.

        Callable blocks without a registered adjoint are materialised densely.
        """
        v = np.asarray(v, dtype=complex)
        one_d = v.ndim == 1
        X = v[:, None] if one_d else v
        if X.shape[0] != self.structure.sizes()[i]:
            raise DimensionMismatch(
                f"adjoint of block ({i + 1},{j + 1}) expects {self.structure.sizes()[i]} rows, "
                f"got {X.shape[0]}")
        if self._zero[(i, j)]:
            Y = np.zeros((self.structure.sizes()[j], X.shape[1]), dtype=complex)
        else:
            adj = self._adj[(i, j)]
            if adj is None:
                mh = self.block_dense(i, j).conj().T
                adj = self._adj[(i, j)] = lambda Z, mh=mh: mh @ Z
            Y = adj(np.ascontiguousarray(X))
        return Y[:, 0] if one_d else Y

    def matvec(self, x):
        """Apply to a flat vector of length ``n`` (or an ``n x s`` column stack)."""
        x = np.asarray(x, dtype=complex)
        x1, x2 = split(x, self.structure)
        y1 = self.block_apply(0, 0, x1) + self.block_apply(0, 1, x2)
        y2 = self.block_apply(1, 0, x1) + self.block_apply(1, 1, x2)
        return np.concatenate([y1, y2], axis=0)

    def apply(self, x):
        """Apply to a :class:`BlockVector` or to a flat array; the result has the input's type."""
        if isinstance(x, BlockVector):
            if x.structure != self.structure:
                raise DimensionMismatch(f"vector split {x.structure} != operator split {self.structure}")
            return BlockVector(
                self.block_apply(0, 0, x.x1) + self.block_apply(0, 1, x.x2),
                self.block_apply(1, 0, x.x1) + self.block_apply(1, 1, x.x2),
            )
        return self.matvec(x)

    __matmul__ = apply

    def block_dense(self, i, j):
        cols = self.structure.sizes()[j]
        return self.block_apply(i, j, np.eye(cols, dtype=complex))

    def to_dense(self):
        return np.block([[self.block_dense(0, 0), self.block_dense(0, 1)],
                         [self.block_dense(1, 0), self.block_dense(1, 1)]])

    def aslinearoperator(self):
        return LinearOperator(self.shape, matvec=self.matvec, matmat=self.matvec, dtype=complex)

    @classmethod
    def from_matrix(cls, mat, n1, name=None):
        """Partition a square dense or sparse matrix contiguously at row/column ``n1``."""
        if sp.issparse(mat):
            mat = sp.csr_matrix(mat, dtype=complex)
        else:
            mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise NonSquare(f"matrix of shape {mat.shape} is not square")
        n = mat.shape[0]
        if not 1 <= n1 < n:
            raise BadSplit(f"split n1={n1} invalid for n={n}")
        return cls((n1, n - n1), mat[:n1, :n1], mat[:n1, n1:], mat[n1:, :n1], mat[n1:, n1:],
                   name=name)

    def __repr__(self):
        return f"BlockOperator({self.name!r}, n1={self.n1}, n2={self.n2})"


def apply(A, x):
    """``y_i = A_i1 x_1 + A_i2 x_2``; see :meth:`BlockOperator.apply`."""
    return A.apply(x)


def load_block_matrix(path, n1):
    """Read a Matrix Market file and partition it at ``n1``.

    Raises
    ------
    ParseError
        The file cannot be parsed as Matrix Market.
    NonSquare
        The matrix is not square.
    BadSplit
        ``n1`` is not in ``[1, n)``.
    """
    try:
        mat = scipy.io.mmread(str(path))
    except Exception as exc:  # scipy raises a zoo of types on bad input
        raise ParseError(f"cannot read Matrix Market file {path}: {exc}") from exc
    if sp.issparse(mat):
        mat = sp.csr_matrix(mat)
    else:
        mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise NonSquare(f"matrix in {path} has shape {mat.shape}")
    return BlockOperator.from_matrix(mat, int(n1), name=str(path))
