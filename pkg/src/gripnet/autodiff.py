"""Dense-matrix reverse-mode differentiation engine.

Values are 2-D float64 numpy arrays. A :class:`Tape` records every primitive
application in order; :meth:`Tape.backward` replays the records in exact
reverse order, accumulating gradients additively into each reachable
:class:`Parameter`. Sparse per-label neighbourhoods are represented by
:class:`LabelAdjacency`, whose mean aggregation is a differentiable primitive
like the dense ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit


class ShapeMismatch(ValueError):
    """Raised when operand shapes are incompatible for a primitive."""


def as_matrix(x) -> np.ndarray:
    """Coerce to a C-contiguous 2-D float64 array (the engine's value type)."""
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got ndim={arr.ndim}")
    return arr


class Parameter:
    """A learnable matrix with a persistent gradient buffer."""

    __slots__ = ("value", "grad", "name")

    def __init__(self, value, name: str):
        self.value = as_matrix(value)
        self.grad = np.zeros_like(self.value)
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Tensor:
    """A node on the tape: a matrix value plus a gradient slot."""

    __slots__ = ("value", "grad", "tape")

    def __init__(self, value: np.ndarray, tape: "Tape"):
        self.value = value
        self.grad = None
        self.tape = tape

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


class Tape:
    """Ordered record of primitive applications for one forward pass."""

    def __init__(self):
        self._records: list[tuple[Tensor, callable]] = []
        self._param_nodes: dict[int, Tensor] = {}

    def parameter(self, p: Parameter) -> Tensor:
        """Leaf tensor for ``p``; gradients accumulate into ``p.grad``."""
        node = self._param_nodes.get(id(p))
        if node is None:
            node = Tensor(p.value, self)
            node.grad = p.grad  # alias: backward writes the persistent buffer
            self._param_nodes[id(p)] = node
        return node

    def constant(self, value) -> Tensor:
        """Leaf tensor that receives gradients but owns no parameter."""
        return Tensor(as_matrix(value), self)

    def _record(self, out: Tensor, backward) -> None:
        self._records.append((out, backward))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(param) into every reachable parameter.

        ``loss`` must be a 1x1 tensor produced on this tape. Parameters not
        reachable from it keep their current (zero) gradient.
        """
        if loss.tape is not self:
            raise ValueError("loss was not produced on this tape")
        if loss.value.shape != (1, 1):
            raise ShapeMismatch(f"loss must be 1x1, got {loss.value.shape}")
        loss._accumulate(np.ones((1, 1)))
        for out, backward_fn in reversed(self._records):
            if out.grad is not None:
                backward_fn(out.grad)


def _joint_tape(*tensors: Tensor) -> Tape:
    tape = tensors[0].tape
    for t in tensors[1:]:
        if t.tape is not tape:
            raise ValueError("operands come from different tapes")
    return tape


def matmul(a: Tensor, b: Tensor) -> Tensor:
    tape = _joint_tape(a, b)
    if a.value.shape[1] != b.value.shape[0]:
        raise ShapeMismatch(f"matmul: {a.value.shape} @ {b.value.shape}")
    out = Tensor(a.value @ b.value, tape)
    av, bv = a.value, b.value

    def backward(g):
        a._accumulate(g @ bv.T)
        b._accumulate(av.T @ g)

    tape._record(out, backward)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    tape = _joint_tape(a, b)
    if a.value.shape != b.value.shape:
        raise ShapeMismatch(f"add: {a.value.shape} vs {b.value.shape}")
    out = Tensor(a.value + b.value, tape)

    def backward(g):
        a._accumulate(g)
        b._accumulate(g)

    tape._record(out, backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; ``b`` may be a single row broadcast over ``a``."""
    tape = _joint_tape(a, b)
    broadcast = b.value.shape == (1, a.value.shape[1]) and a.value.shape[0] != 1
    if not broadcast and a.value.shape != b.value.shape:
        raise ShapeMismatch(f"mul: {a.value.shape} vs {b.value.shape}")
    out = Tensor(a.value * b.value, tape)
    av, bv = a.value, b.value

    def backward(g):
        a._accumulate(g * bv)
        gb = g * av
        b._accumulate(gb.sum(axis=0, keepdims=True) if broadcast else gb)

    tape._record(out, backward)
    return out


def scale(x: Tensor, c: float) -> Tensor:
    out = Tensor(x.value * c, x.tape)
    x.tape._record(out, lambda g: x._accumulate(g * c))
    return out


def add_scalar(x: Tensor, c: float) -> Tensor:
    out = Tensor(x.value + c, x.tape)
    x.tape._record(out, lambda g: x._accumulate(g))
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.value, 0.0), x.tape)
    mask = x.value > 0.0

    def backward(g):
        x._accumulate(g * mask)

    x.tape._record(out, backward)
    return out


def sigmoid(x: Tensor) -> Tensor:
    s = expit(x.value)
    out = Tensor(s, x.tape)

    def backward(g):
        x._accumulate(g * s * (1.0 - s))

    x.tape._record(out, backward)
    return out


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.value), x.tape)
    xv = x.value

    def backward(g):
        x._accumulate(g / xv)

    x.tape._record(out, backward)
    return out


def clip(x: Tensor, lo: float | None, hi: float | None) -> Tensor:
    """Clamp values into [lo, hi] (either bound may be None); gradient is zero
    where the clamp binds."""
    out = Tensor(np.clip(x.value, lo, hi), x.tape)
    mask = np.ones(x.value.shape, dtype=bool)
    if lo is not None:
        mask &= x.value > lo
    if hi is not None:
        mask &= x.value < hi

    def backward(g):
        x._accumulate(g * mask)

    x.tape._record(out, backward)
    return out


def softmax_rows(x: Tensor) -> Tensor:
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    out = Tensor(p, x.tape)

    def backward(g):
        dot = (g * p).sum(axis=1, keepdims=True)
        x._accumulate(p * (g - dot))

    x.tape._record(out, backward)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    tape = _joint_tape(a, b)
    if a.value.shape[0] != b.value.shape[0]:
        raise ShapeMismatch(f"concat_cols: {a.value.shape} vs {b.value.shape}")
    out = Tensor(np.hstack([a.value, b.value]), tape)
    wa = a.value.shape[1]

    def backward(g):
        a._accumulate(g[:, :wa])
        b._accumulate(g[:, wa:])

    tape._record(out, backward)
    return out


def gather_rows(x: Tensor, indices) -> Tensor:
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeMismatch("gather_rows expects a 1-D index array")
    if idx.size and (idx.min() < 0 or idx.max() >= x.value.shape[0]):
        raise IndexError(f"row index out of range for {x.value.shape}")
    out = Tensor(x.value[idx], x.tape)

    def backward(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.value)
        np.add.at(x.grad, idx, g)

    x.tape._record(out, backward)
    return out


def select_entries(x: Tensor, rows, cols) -> Tensor:
    """Column vector of x[rows[k], cols[k]] entries."""
    r = np.asarray(rows, dtype=np.intp)
    c = np.asarray(cols, dtype=np.intp)
    if r.shape != c.shape or r.ndim != 1:
        raise ShapeMismatch("select_entries expects matching 1-D index arrays")
    out = Tensor(x.value[r, c].reshape(-1, 1), x.tape)

    def backward(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.value)
        np.add.at(x.grad, (r, c), g[:, 0])

    x.tape._record(out, backward)
    return out


def row_sums(x: Tensor) -> Tensor:
    out = Tensor(x.value.sum(axis=1, keepdims=True), x.tape)
    cols = x.value.shape[1]

    def backward(g):
        x._accumulate(np.repeat(g, cols, axis=1))

    x.tape._record(out, backward)
    return out


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(np.array([[x.value.sum()]]), x.tape)

    def backward(g):
        x._accumulate(np.full_like(x.value, g[0, 0]))

    x.tape._record(out, backward)
    return out


@dataclass(frozen=True)
class LabelAdjacency:
    """Per-label neighbourhoods of a fixed target node set.

    ``neighbor_lists[i]`` holds the ascending source indices that contribute
    to target node i under this edge label. The row-normalized sparse matrix
    (mean over each neighbourhood, zero row when empty) is prebuilt for the
    aggregation primitive and its transpose backward.
    """

    label: str
    neighbor_lists: list[np.ndarray]
    num_sources: int
    matrix: sp.csr_matrix

    @classmethod
    def from_edges(
        cls, label: str, pairs, num_targets: int, num_sources: int | None = None
    ) -> "LabelAdjacency":
        """Build from (source, target) index pairs."""
        if num_sources is None:
            num_sources = num_targets
        lists: list[list[int]] = [[] for _ in range(num_targets)]
        for s, d in pairs:
            if not (0 <= d < num_targets and 0 <= s < num_sources):
                raise IndexError(f"edge ({s}, {d}) out of range for label {label!r}")
            lists[d].append(s)
        neighbor_lists = [np.array(sorted(set(l)), dtype=np.intp) for l in lists]
        return cls._from_lists(label, neighbor_lists, num_sources)

    @classmethod
    def _from_lists(cls, label, neighbor_lists, num_sources):
        indptr = np.zeros(len(neighbor_lists) + 1, dtype=np.intp)
        for i, nbrs in enumerate(neighbor_lists):
            indptr[i + 1] = indptr[i] + len(nbrs)
        indices = (
            np.concatenate(neighbor_lists)
            if indptr[-1]
            else np.zeros(0, dtype=np.intp)
        )
        data = np.ones(indptr[-1], dtype=np.float64)
        for i, nbrs in enumerate(neighbor_lists):
            if len(nbrs):
                data[indptr[i]:indptr[i + 1]] = 1.0 / len(nbrs)
        matrix = sp.csr_matrix(
            (data, indices, indptr), shape=(len(neighbor_lists), num_sources)
        )
        return cls(
            label=label,
            neighbor_lists=neighbor_lists,
            num_sources=num_sources,
            matrix=matrix,
        )

    @property
    def num_targets(self) -> int:
        return len(self.neighbor_lists)


def spmm_mean(adj: LabelAdjacency, x: Tensor) -> Tensor:
    """Row i of the result is the mean of ``x`` over i's neighbourhood
    (zero vector when the neighbourhood is empty)."""
    if x.value.shape[0] != adj.num_sources:
        raise ShapeMismatch(
            f"spmm_mean: adjacency expects {adj.num_sources} source rows, "
            f"input has {x.value.shape[0]}"
        )
    out = Tensor(np.asarray(adj.matrix @ x.value), x.tape)
    mt = adj.matrix.T.tocsr()

    def backward(g):
        x._accumulate(np.asarray(mt @ g))

    x.tape._record(out, backward)
    return out
