"""Truncated multivariate Taylor arithmetic (jets).

A :class:`Jet` stores the Taylor coefficients of a smooth scalar function of
``nvars`` variables, truncated at a fixed total degree ``order`` (1..4).
Arithmetic on jets is exact truncation: for polynomial inputs of total degree
<= order, extracted partials equal the analytic partials to machine precision.
Jets replace symbolic differentiation everywhere in this package: derivatives
in chart coordinates, in fiber coordinates, and in the (b^2, s) arguments of
defining functions are all obtained by seeding the relevant variables and
reading coefficients back off.

Conventions
-----------
* Coefficients are stored densely in graded-lexicographic order (all
  monomials of total degree 0, then 1, ... up to ``order``).  The list of
  monomials of a lower-order ring is a prefix of the higher-order one, which
  makes truncation a cheap slice.
* ``extract`` returns *partial derivatives*, i.e. the stored Taylor
  coefficient multiplied by the multi-factorial of the requested multidegree.
  Every formula this package implements is stated in derivatives, so that is
  the convention exposed everywhere.
* Only smooth operations are provided.  Branch functions (abs, max, ...) are
  deliberately absent; requesting a value outside an operation's smooth
  domain raises :class:`JetDomainError` carrying the offending value.

Jets are immutable values and all operations are pure, so evaluation may be
parallelized across sample points without coordination.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "MAX_ORDER",
    "Jet",
    "JetError",
    "JetDomainError",
    "seed",
    "constant",
    "value",
    "extract",
    "partial",
    "truncate",
    "lift",
    "project",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "atan",
    "atan2",
    "power",
    "solve_linear",
    "inv_matrix",
    "univariate_series",
    "compose_series",
]

MAX_ORDER = 4


class JetError(ValueError):
    """Invalid jet construction or incompatible jet arithmetic."""


class JetDomainError(JetError):
    """A smooth operation was evaluated outside its domain.

    Carries the offending value in ``args[1]`` when available.
    """


# ---------------------------------------------------------------------------
# Rings: cached index structure per (nvars, order)
# ---------------------------------------------------------------------------

def _gen_monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total degree <= order, graded-lex order."""
    monos: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        level: list[tuple[int, ...]] = []

        def rec(prefix, remaining, slots):
            if slots == 1:
                level.append(prefix + (remaining,))
                return
            for e in range(remaining, -1, -1):
                rec(prefix + (e,), remaining - e, slots - 1)

        rec((), deg, nvars)
        monos.extend(level)
    return monos


class _Ring:
    """Index tables for a fixed (nvars, order) jet algebra."""

    __slots__ = (
        "nvars", "order", "monos", "index", "size", "degree",
        "_mul", "_pdiff", "_project", "_lift",
    )

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.monos = _gen_monomials(nvars, order)
        self.size = len(self.monos)
        self.index = {m: i for i, m in enumerate(self.monos)}
        self.degree = np.array([sum(m) for m in self.monos], dtype=np.int64)
        self._mul = None
        self._pdiff: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._project: dict = {}
        self._lift: dict = {}

    # -- multiplication table ------------------------------------------------
    def mul_table(self):
        if self._mul is None:
            I, J, K = [], [], []
            for i, mi in enumerate(self.monos):
                di = sum(mi)
                for j, mj in enumerate(self.monos):
                    if di + sum(mj) > self.order:
                        continue
                    k = self.index[tuple(a + b for a, b in zip(mi, mj))]
                    I.append(i)
                    J.append(j)
                    K.append(k)
            self._mul = (
                np.asarray(I, dtype=np.int64),
                np.asarray(J, dtype=np.int64),
                np.asarray(K, dtype=np.int64),
            )
        return self._mul

    # -- d/dx_var as a map into ring(nvars, order-1) --------------------------
    def pdiff_table(self, var: int):
        tab = self._pdiff.get(var)
        if tab is None:
            lo = ring(self.nvars, self.order - 1)
            src, dst, mult = [], [], []
            for i, m in enumerate(self.monos):
                if m[var] == 0:
                    continue
                d = list(m)
                d[var] -= 1
                src.append(i)
                dst.append(lo.index[tuple(d)])
                mult.append(m[var])
            tab = (
                np.asarray(src, dtype=np.int64),
                np.asarray(dst, dtype=np.int64),
                np.asarray(mult, dtype=np.float64),
            )
            self._pdiff[var] = tab
        return tab

    # -- restriction onto a subset of variables --------------------------------
    def project_table(self, keep: tuple[int, ...]):
        tab = self._project.get(keep)
        if tab is None:
            lo = ring(len(keep), self.order)
            src, dst = [], []
            others = [v for v in range(self.nvars) if v not in keep]
            for i, m in enumerate(self.monos):
                if any(m[v] for v in others):
                    continue
                src.append(i)
                dst.append(lo.index[tuple(m[v] for v in keep)])
            tab = (np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64))
            self._project[keep] = tab
        return tab

    # -- embedding into a larger ring ------------------------------------------
    def lift_table(self, target: "_Ring", var_map: tuple[int, ...]):
        key = (target.nvars, target.order, var_map)
        tab = self._lift.get(key)
        if tab is None:
            dst = np.empty(self.size, dtype=np.int64)
            for i, m in enumerate(self.monos):
                big = [0] * target.nvars
                for v, e in enumerate(m):
                    big[var_map[v]] = e
                dst[i] = target.index[tuple(big)]
            tab = dst
            self._lift[key] = tab
        return tab


_RINGS: dict[tuple[int, int], _Ring] = {}


def ring(nvars: int, order: int) -> _Ring:
    if order < 0 or order > MAX_ORDER:
        raise JetError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
    if nvars < 1:
        raise JetError(f"need at least one variable, got nvars={nvars}")
    key = (nvars, order)
    r = _RINGS.get(key)
    if r is None:
        r = _Ring(nvars, order)
        _RINGS[key] = r
    return r


# ---------------------------------------------------------------------------
# The Jet value type
# ---------------------------------------------------------------------------

_SCALARS = (int, float, np.integer, np.floating)


class Jet:
    """Dense truncated Taylor series of one scalar quantity.

    Never mutated after construction; every operation returns a fresh jet.
    """

    __slots__ = ("ring", "c")

    # keep numpy from elementwise-broadcasting over jets
    __array_ufunc__ = None

    def __init__(self, ring_: _Ring, coeffs: np.ndarray):
        self.ring = ring_
        self.c = coeffs

    # -- basics ---------------------------------------------------------------
    @property
    def nvars(self) -> int:
        return self.ring.nvars

    @property
    def order(self) -> int:
        return self.ring.order

    @property
    def value(self) -> float:
        return float(self.c[0])

    def __repr__(self) -> str:
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value:.6g})"

    def copy_with(self, coeffs: np.ndarray) -> "Jet":
        return Jet(self.ring, coeffs)

    # -- ring alignment ---------------------------------------------------------
    def _aligned(self, other: "Jet") -> tuple["Jet", "Jet"]:
        if self.ring is other.ring:
            return self, other
        if self.nvars != other.nvars:
            raise JetError(
                f"cannot combine jets over {self.nvars} and {other.nvars} variables; "
                "lift explicitly first"
            )
        m = min(self.order, other.order)
        return truncate(self, m), truncate(other, m)

    # -- arithmetic --------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._aligned(other)
            return Jet(a.ring, a.c + b.c)
        if isinstance(other, _SCALARS):
            c = self.c.copy()
            c[0] += float(other)
            return Jet(self.ring, c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.ring, -self.c)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = self._aligned(other)
            return Jet(a.ring, a.c - b.c)
        if isinstance(other, _SCALARS):
            c = self.c.copy()
            c[0] -= float(other)
            return Jet(self.ring, c)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, _SCALARS):
            c = -self.c
            c[0] += float(other)
            return Jet(self.ring, c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._aligned(other)
            I, J, K = a.ring.mul_table()
            prod = np.bincount(K, weights=a.c[I] * b.c[J], minlength=a.ring.size)
            return Jet(a.ring, prod)
        if isinstance(other, _SCALARS):
            return Jet(self.ring, self.c * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            a, b = self._aligned(other)
            return a * _reciprocal(b)
        if isinstance(other, _SCALARS):
            d = float(other)
            if d == 0.0:
                raise JetDomainError("division by zero", 0.0)
            return Jet(self.ring, self.c / d)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _SCALARS):
            return float(other) * _reciprocal(self)
        return NotImplemented

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)):
            return _int_power(self, int(p))
        if isinstance(p, (float, np.floating)):
            return power(self, float(p))
        return NotImplemented


# ---------------------------------------------------------------------------
# Construction, extraction, ring morphisms
# ---------------------------------------------------------------------------

def seed(values: Sequence[float], active: Iterable[int], order: int) -> list[Jet]:
    """Turn plain values into jets, one per entry of ``values``.

    Indices in ``active`` (into ``values``) become the differentiation
    variables, in increasing index order; each carries a unit first-order
    coefficient in its own slot.  The remaining entries become constants in
    the same ring.
    """
    if not (1 <= order <= MAX_ORDER):
        raise JetError(f"seed order must be in 1..{MAX_ORDER}, got {order}")
    act = list(active)
    if len(set(act)) != len(act):
        raise JetError(f"duplicate active index in {act}")
    vals = [float(v) for v in values]
    for a in act:
        if not (0 <= a < len(vals)):
            raise JetError(f"active index {a} out of bounds for {len(vals)} values")
    slots = {idx: k for k, idx in enumerate(sorted(act))}
    r = ring(len(act), order)
    out = []
    for i, v in enumerate(vals):
        c = np.zeros(r.size)
        c[0] = v
        if i in slots:
            c[1 + slots[i]] = 1.0
        out.append(Jet(r, c))
    return out


def constant(x: float, like: Jet) -> Jet:
    c = np.zeros(like.ring.size)
    c[0] = float(x)
    return Jet(like.ring, c)


def value(x) -> float:
    """Plain value of a jet or a number."""
    return x.value if isinstance(x, Jet) else float(x)


def extract(j: Jet, multidegree: Sequence[int]) -> float:
    """Partial derivative of the jetted quantity for the given multidegree.

    Returns the *derivative* (coefficient times the multi-factorial), not the
    raw Taylor coefficient.
    """
    md = tuple(int(d) for d in multidegree)
    if len(md) != j.nvars:
        raise JetError(f"multidegree {md} has {len(md)} entries, jet has {j.nvars} variables")
    if any(d < 0 for d in md):
        raise JetError(f"negative entry in multidegree {md}")
    if sum(md) > j.order:
        raise JetError(f"total degree {sum(md)} exceeds jet order {j.order}")
    fact = 1.0
    for d in md:
        fact *= math.factorial(d)
    return float(j.c[j.ring.index[md]]) * fact


def truncate(j: Jet, order: int) -> Jet:
    """Drop coefficients beyond ``order`` (lower-ring monomials are a prefix)."""
    if order == j.order:
        return j
    if order > j.order:
        raise JetError(f"cannot raise order {j.order} -> {order} by truncation")
    r = ring(j.nvars, order)
    return Jet(r, j.c[: r.size].copy())


def partial(j: Jet, var: int) -> Jet:
    """d(jet)/d(variable var), as a jet of order one less."""
    if not (0 <= var < j.nvars):
        raise JetError(f"variable {var} out of range for {j.nvars}-variable jet")
    src, dst, mult = j.ring.pdiff_table(var)
    lo = ring(j.nvars, j.order - 1)
    c = np.zeros(lo.size)
    np.add.at(c, dst, j.c[src] * mult)
    return Jet(lo, c)


def lift(j: Jet, nvars: int, order: int, var_map: Sequence[int]) -> Jet:
    """Embed a jet into a larger ring; var_map[i] is the slot of variable i."""
    target = ring(nvars, order)
    if order < j.order:
        j = truncate(j, order)
    tab = j.ring.lift_table(target, tuple(int(v) for v in var_map))
    c = np.zeros(target.size)
    c[tab] = j.c
    return Jet(target, c)


def project(j: Jet, keep: Sequence[int]) -> Jet:
    """Restrict to the subspace of the kept variables (others set to zero)."""
    kp = tuple(int(v) for v in keep)
    src, dst = j.ring.project_table(kp)
    lo = ring(len(kp), j.order)
    c = np.zeros(lo.size)
    c[dst] = j.c[src]
    return Jet(lo, c)


# ---------------------------------------------------------------------------
# Elementary functions via univariate composition
# ---------------------------------------------------------------------------

def _compose(j: Jet, series: np.ndarray) -> Jet:
    """sum_k series[k] * (j - j.value)^k, truncated in j's ring (Horner)."""
    h = j.copy_with(j.c.copy())
    h.c[0] = 0.0
    out = constant(float(series[-1]), j)
    for k in range(len(series) - 2, -1, -1):
        out = out * h + float(series[k])
    return out


def _reciprocal(j: Jet) -> Jet:
    a = j.value
    if a == 0.0:
        raise JetDomainError("division by zero-valued jet", a)
    coeffs = np.empty(j.order + 1)
    coeffs[0] = 1.0 / a
    for k in range(1, j.order + 1):
        coeffs[k] = -coeffs[k - 1] / a
    return _compose(j, coeffs)


def _int_power(j: Jet, p: int) -> Jet:
    if p < 0:
        return _int_power(_reciprocal(j), -p)
    if p == 0:
        return constant(1.0, j)
    out = j
    for _ in range(p - 1):
        out = out * j
    return out


def sqrt(x):
    if not isinstance(x, Jet):
        v = float(x)
        if v <= 0.0:
            raise JetDomainError("sqrt of non-positive value", v)
        return math.sqrt(v)
    a = x.value
    if a <= 0.0:
        raise JetDomainError("sqrt of non-positive value", a)
    coeffs = np.empty(x.order + 1)
    coeffs[0] = math.sqrt(a)
    for k in range(1, x.order + 1):
        coeffs[k] = coeffs[k - 1] * (0.5 - (k - 1)) / (k * a)
    return _compose(x, coeffs)


def exp(x):
    if not isinstance(x, Jet):
        return math.exp(float(x))
    e = math.exp(x.value)
    coeffs = np.array([e / math.factorial(k) for k in range(x.order + 1)])
    return _compose(x, coeffs)


def log(x):
    if not isinstance(x, Jet):
        v = float(x)
        if v <= 0.0:
            raise JetDomainError("log of non-positive value", v)
        return math.log(v)
    a = x.value
    if a <= 0.0:
        raise JetDomainError("log of non-positive value", a)
    coeffs = np.empty(x.order + 1)
    coeffs[0] = math.log(a)
    for k in range(1, x.order + 1):
        coeffs[k] = ((-1.0) ** (k + 1)) / (k * a ** k)
    return _compose(x, coeffs)


def sin(x):
    if not isinstance(x, Jet):
        return math.sin(float(x))
    a = x.value
    coeffs = np.array(
        [math.sin(a + k * math.pi / 2.0) / math.factorial(k) for k in range(x.order + 1)]
    )
    return _compose(x, coeffs)


def cos(x):
    if not isinstance(x, Jet):
        return math.cos(float(x))
    a = x.value
    coeffs = np.array(
        [math.cos(a + k * math.pi / 2.0) / math.factorial(k) for k in range(x.order + 1)]
    )
    return _compose(x, coeffs)


def atan(x):
    if not isinstance(x, Jet):
        return math.atan(float(x))
    a = x.value
    # series of 1/(1+t^2) at a, then integrate term by term
    q0, q1 = 1.0 + a * a, 2.0 * a
    r = np.zeros(max(x.order, 1))
    r[0] = 1.0 / q0
    for k in range(1, x.order):
        r[k] = -(q1 * r[k - 1] + (r[k - 2] if k >= 2 else 0.0)) / q0
    coeffs = np.empty(x.order + 1)
    coeffs[0] = math.atan(a)
    for k in range(1, x.order + 1):
        coeffs[k] = r[k - 1] / k
    return _compose(x, coeffs)


def atan2(y, x):
    """Angle of (x, y), smooth away from the ray {x <= 0, y = 0}.

    Locally rewritten through atan on whichever half-plane contains the
    evaluation point; the branch cut itself is a domain error.
    """
    yj, xj = isinstance(y, Jet), isinstance(x, Jet)
    if not yj and not xj:
        if float(x) <= 0.0 and float(y) == 0.0:
            raise JetDomainError("atan2 on its branch cut", (float(y), float(x)))
        return math.atan2(float(y), float(x))
    if not yj:
        y = constant(float(y), x)
    if not xj:
        x = constant(float(x), y)
    xv, yv = x.value, y.value
    if xv > 0.0:
        return atan(y / x)
    if yv > 0.0:
        return math.pi / 2.0 - atan(x / y)
    if yv < 0.0:
        return -math.pi / 2.0 - atan(x / y)
    raise JetDomainError("atan2 on its branch cut", (yv, xv))


def power(x, p):
    """x**p for real p (x > 0); integer p falls back to repeated products."""
    if isinstance(p, (int, np.integer)) or (isinstance(p, float) and p.is_integer()):
        pi = int(p)
        if isinstance(x, Jet):
            return _int_power(x, pi)
        return float(x) ** pi
    if not isinstance(x, Jet):
        v = float(x)
        if v <= 0.0:
            raise JetDomainError("real power of non-positive base", v)
        return v ** float(p)
    a = x.value
    if a <= 0.0:
        raise JetDomainError("real power of non-positive base", a)
    coeffs = np.empty(x.order + 1)
    coeffs[0] = a ** float(p)
    for k in range(1, x.order + 1):
        coeffs[k] = coeffs[k - 1] * (float(p) - (k - 1)) / (k * a)
    return _compose(x, coeffs)


# ---------------------------------------------------------------------------
# Linear algebra over the jet ring
# ---------------------------------------------------------------------------

def _common_ring(entries):
    r = None
    for e in entries:
        if isinstance(e, Jet):
            if r is None or e.order < r.order:
                r = e.ring
    return r


def solve_linear(A, B):
    """Solve A @ X = B by Gaussian elimination over the jet ring.

    ``A`` is a square list-of-lists whose entries are floats or jets sharing
    a ring; ``B`` is a list (one rhs vector) or list-of-lists (columns as the
    inner index).  Pivoting is on the plain values.  Returns X with the same
    shape as B.
    """
    n = len(A)
    flatB = [e for row in B for e in (row if isinstance(row, list) else [row])]
    r = _common_ring([e for row in A for e in row] + flatB)
    vector_rhs = not isinstance(B[0], list)

    def conv(e):
        if r is None:
            return float(e.value) if isinstance(e, Jet) else float(e)
        if isinstance(e, Jet):
            return truncate(e, r.order) if e.order > r.order else e
        return Jet(r, _const_coeffs(r, float(e)))

    M = [[conv(A[i][j]) for j in range(n)] for i in range(n)]
    rhs = [[conv(B[i])] if vector_rhs else [conv(e) for e in B[i]] for i in range(n)]
    m = len(rhs[0])

    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(value(M[i][col])))
        if abs(value(M[piv][col])) == 0.0:
            raise JetDomainError("singular matrix in jet linear solve", 0.0)
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv_p = 1.0 / M[col][col]
        for j in range(col, n):
            M[col][j] = M[col][j] * inv_p
        for j in range(m):
            rhs[col][j] = rhs[col][j] * inv_p
        for i in range(n):
            if i == col:
                continue
            f = M[i][col]
            if isinstance(f, Jet):
                if not f.c.any():
                    continue
            elif f == 0.0:
                continue
            for j in range(col, n):
                M[i][j] = M[i][j] - f * M[col][j]
            for j in range(m):
                rhs[i][j] = rhs[i][j] - f * rhs[col][j]

    if vector_rhs:
        return [rhs[i][0] for i in range(n)]
    return rhs


def _const_coeffs(r: _Ring, v: float) -> np.ndarray:
    c = np.zeros(r.size)
    c[0] = v
    return c


def inv_matrix(A):
    """Inverse of a square matrix of jets/floats, as a list-of-lists."""
    n = len(A)
    eye = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    return solve_linear(A, eye)


# ---------------------------------------------------------------------------
# Univariate series helpers (for ODE-defined functions)
# ---------------------------------------------------------------------------

def univariate_series(fn, x0: float, order: int) -> np.ndarray:
    """Taylor coefficients of fn at x0 obtained by evaluating fn on a seed jet."""
    (x,) = seed([x0], {0}, order)
    out = fn(x)
    if not isinstance(out, Jet):
        c = np.zeros(order + 1)
        c[0] = float(out)
        return c
    return out.c.copy()


def compose_series(coeffs: Sequence[float], x, x0: float):
    """Evaluate sum_k coeffs[k] (x - x0)^k for x a float or jet (Horner)."""
    if isinstance(x, Jet):
        h = x - x0
        out = constant(float(coeffs[-1]), x)
        for k in range(len(coeffs) - 2, -1, -1):
            out = out * h + float(coeffs[k])
        return out
    h = float(x) - x0
    out = float(coeffs[-1])
    for k in range(len(coeffs) - 2, -1, -1):
        out = out * h + float(coeffs[k])
    return out
