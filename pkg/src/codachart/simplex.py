"""Aitchison geometry on the simplex and log-ratio coordinates.

A p-part composition carries only relative information, so every
transform here is invariant to the closure constant ``kappa``.  The ilr
map uses a contrast matrix whose rows are clr images of an orthonormal
basis; :func:`sbp_basis` builds the standard sequential binary partition
basis whose coordinates are the usual balances.
"""

import numpy as np

from .errors import DomainError

ORTHO_TOL = 1e-10


def _as_parts(raw, name="composition"):
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional", shape=list(arr.shape))
    if arr.size == 0:
        raise DomainError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise DomainError(f"{name} has a non-finite entry at index {bad}", index=bad)
    bad = np.flatnonzero(arr <= 0)
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"{name} entry {i} is {arr[i]!r}; parts must be strictly positive",
            index=i,
            value=float(arr[i]),
        )
    return arr


class Composition:
    """A strictly positive p-part vector closed to sum ``kappa``.

    Construction always applies closure, so proportional inputs produce
    equal compositions.  Instances are immutable.
    """

    __slots__ = ("_parts", "_kappa")

    def __init__(self, parts, kappa=1.0):
        arr = _as_parts(parts)
        if arr.size < 2:
            raise DomainError("a composition needs at least two parts", p=int(arr.size))
        kappa = float(kappa)
        if not (kappa > 0 and np.isfinite(kappa)):
            raise DomainError("closure constant kappa must be positive", kappa=kappa)
        closed = kappa * arr / arr.sum()
        closed.flags.writeable = False
        self._parts = closed
        self._kappa = kappa

    @property
    def parts(self):
        return self._parts

    @property
    def kappa(self):
        return self._kappa

    @property
    def p(self):
        return self._parts.size

    def __len__(self):
        return self._parts.size

    def __array__(self, dtype=None, copy=None):
        return np.array(self._parts, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Composition):
            return NotImplemented
        return self._kappa == other._kappa and np.array_equal(self._parts, other._parts)

    def __hash__(self):
        return hash((self._kappa, self._parts.tobytes()))

    def __repr__(self):
        parts = ", ".join(f"{v:.6g}" for v in self._parts)
        return f"Composition([{parts}], kappa={self._kappa:g})"

    def isclose(self, other, atol=1e-12):
        return self.p == other.p and bool(np.allclose(self.parts, other.parts, rtol=0, atol=atol))


def closure(raw, kappa=1.0):
    """Rescale a positive vector so its parts sum to ``kappa``.

    Examples
    --------
    >>> closure([1, 1, 2]).parts
    array([0.25, 0.25, 0.5 ])
    """
    return Composition(raw, kappa)


def neutral(p, kappa=1.0):
    """The identity element of perturbation, ``(1/p, ..., 1/p)``."""
    return Composition(np.ones(int(p)), kappa)


def _coerce(x):
    return x if isinstance(x, Composition) else Composition(x)


def perturb(x, y):
    """Aitchison addition: closure of the componentwise product."""
    x, y = _coerce(x), _coerce(y)
    if x.p != y.p:
        raise DomainError("perturbation needs compositions of equal length", p_x=x.p, p_y=y.p)
    if x.kappa != y.kappa:
        raise DomainError("perturbation needs a common closure constant",
                          kappa_x=x.kappa, kappa_y=y.kappa)
    # products of small parts underflow long before the ratios matter
    logs = np.log(x.parts) + np.log(y.parts)
    return _from_logs(logs, x.kappa, "perturbation")


def power(alpha, x):
    """Aitchison scalar multiplication ``alpha ⊙ x``."""
    x = _coerce(x)
    return _from_logs(float(alpha) * np.log(x.parts), x.kappa, "powering")


def _from_logs(logs, kappa, op):
    raw = np.exp(logs - logs.max())
    if not np.all(raw > 0):
        raise DomainError(f"{op} result has parts below double-precision range",
                          log_ratio_span=float(logs.max() - logs.min()))
    return Composition(raw, kappa)


def clr(x):
    """Centred log-ratio coordinates.

    Accepts a :class:`Composition`, a 1-D array of parts, or a 2-D array with
    one composition per row.  The result sums to zero along the last axis.
    """
    if isinstance(x, Composition):
        logs = np.log(x.parts)
    else:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 1:
            logs = np.log(_as_parts(arr))
        elif arr.ndim == 2:
            if np.any(~(arr > 0)):
                r, c = np.argwhere(~(arr > 0))[0]
                raise DomainError(f"row {int(r)} part {int(c)} is not strictly positive",
                                  row=int(r), index=int(c))
            logs = np.log(arr)
        else:
            raise DomainError("clr expects one composition or a 2-D array of them")
    return logs - logs.mean(axis=-1, keepdims=True)


def clr_inv(xi, kappa=1.0):
    """Map clr coordinates back to the simplex, ``C(exp(xi))``.

    Inputs that do not sum to zero are implicitly projected onto the
    zero-sum hyperplane.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise DomainError("clr_inv expects a 1-D vector with at least two entries")
    if not np.all(np.isfinite(xi)):
        raise DomainError("clr coordinates must be finite")
    return Composition(np.exp(xi - xi.max()), kappa)


class IlrBasis:
    """Contrast matrix of an orthonormal basis of the simplex.

    ``contrast`` is ``(p-1, p)``; row ``i`` is the clr image of basis
    element ``e_i``.  Custom matrices are checked for orthonormality and
    zero row sums on construction.
    """

    __slots__ = ("_contrast", "name")

    def __init__(self, contrast, name="custom"):
        B = np.array(contrast, dtype=float, copy=True)
        if B.ndim != 2 or B.shape[0] != B.shape[1] - 1 or B.shape[1] < 2:
            raise DomainError("contrast matrix must have shape (p-1, p)", shape=list(B.shape))
        if not np.all(np.isfinite(B)):
            raise DomainError("contrast matrix has non-finite entries")
        row_sums = np.abs(B.sum(axis=1)).max()
        if row_sums > ORTHO_TOL:
            raise DomainError("contrast rows must sum to zero", max_row_sum=float(row_sums))
        gram_err = np.abs(B @ B.T - np.eye(B.shape[0])).max()
        if gram_err > ORTHO_TOL:
            raise DomainError("contrast matrix is not orthonormal", max_error=float(gram_err))
        B.flags.writeable = False
        self._contrast = B
        self.name = name

    @property
    def contrast(self):
        return self._contrast

    @property
    def p(self):
        return self._contrast.shape[1]

    def __eq__(self, other):
        if not isinstance(other, IlrBasis):
            return NotImplemented
        return np.array_equal(self._contrast, other._contrast)

    def __hash__(self):
        return hash(self._contrast.tobytes())

    def __repr__(self):
        return f"IlrBasis(p={self.p}, name={self.name!r})"


def balancing_elements(p):
    """Unclosed balancing elements ``e_{i,j}`` of the SBP basis, shape (p-1, p)."""
    p = int(p)
    if p < 2:
        raise DomainError("an ilr basis needs p >= 2", p=p)
    E = np.ones((p - 1, p))
    for i in range(1, p):
        E[i - 1, :i] = np.exp(np.sqrt(1.0 / (i * (i + 1))))
        E[i - 1, i] = np.exp(-np.sqrt(i / (i + 1.0)))
    return E


def sbp_basis(p):
    """Sequential binary partition basis for p parts.

    Row ``i`` (1-based) of the contrast matrix is
    ``sqrt(1/(i(i+1)))`` on the first ``i`` parts, ``-sqrt(i/(i+1))`` on part
    ``i+1`` and zero elsewhere, i.e. the clr of the balancing element.
    """
    E = balancing_elements(p)
    return IlrBasis(clr(E), name="sbp")


def _check_basis(basis, p):
    if basis is None:
        return sbp_basis(p)
    if basis.p != p:
        raise DomainError("basis and composition disagree on the number of parts",
                          basis_p=basis.p, p=p)
    return basis


def ilr(x, basis=None):
    """Isometric log-ratio coordinates ``clr(x) @ B.T``.

    ``x`` may be a single composition (returns a ``(p-1,)`` array) or a 2-D
    array of compositions by row (returns ``(n, p-1)``).  ``basis`` defaults
    to the SBP basis.
    """
    xi = clr(x)
    return xi @ _check_basis(basis, xi.shape[-1]).contrast.T


def ilr_inv(coords, basis=None, kappa=1.0):
    """Inverse ilr for one coordinate vector of length ``p-1``."""
    v = np.asarray(coords, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DomainError("ilr coordinates must be a non-empty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise DomainError("ilr coordinates must be finite")
    B = _check_basis(basis, v.size + 1).contrast
    return clr_inv(v @ B, kappa)


def ilr_inv_rows(coords, basis=None):
    """Row-wise inverse ilr; returns closed compositions as an ``(n, p)`` array."""
    V = np.atleast_2d(np.asarray(coords, dtype=float))
    if V.size and not np.all(np.isfinite(V)):
        raise DomainError("ilr coordinates must be finite")
    B = _check_basis(basis, V.shape[1] + 1).contrast
    Z = V @ B
    E = np.exp(Z - Z.max(axis=1, keepdims=True))
    return E / E.sum(axis=1, keepdims=True)


def balances(x):
    """SBP balances from the closed-form ratio of geometric means.

    Independent of the contrast-matrix route; used to cross-check it.
    """
    logs = np.log(_coerce(x).parts)
    p = logs.size
    out = np.empty(p - 1)
    for i in range(1, p):
        out[i - 1] = np.sqrt(i / (i + 1.0)) * (logs[:i].mean() - logs[i])
    return out
