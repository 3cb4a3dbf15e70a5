"""Exact arithmetic for the coefficient field K = Q(t, parameters).

The field is Q(t) extended by named transcendental parameters and by
square roots declared through relations s^2 = r.  Values are represented
as reduced fractions of sparse multivariate polynomials with Fraction
coefficients.  Canonical form:

* graded-lexicographic monomial order on the table's symbol order,
* every radical symbol appears with exponent <= 1 (squares rewritten
  through their relations),
* the denominator is free of radical symbols (conjugate rationalization),
* gcd(numerator, denominator) = 1 and the denominator's leading
  coefficient is 1.

A small recursive-descent parser and a canonical printer round-trip the
text grammar: rational literals, symbol names, + - * / ^ and parentheses,
with ^ taking nonnegative integer exponents.  Expressions may also use
the reserved phase variables x, y, u1, u2, in which case parsing yields a
PhasePoly (polynomial in the phase variables over K).

All values are immutable; operations are pure functions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Union

from .errors import (
    DegenerateRadicalError,
    DivisionByZeroError,
    NotDivisibleError,
    ParseError,
    RadicalDeclarationError,
    UnknownSymbolError,
)

# Exact rational scalar. Fraction already maintains gcd-reduced form with
# a positive denominator, which is exactly the Rat contract.
Rat = Fraction

PHASE_VARS = ("x", "y", "u1", "u2")

KIND_IVAR = "independent-variable"
KIND_PARAM = "transcendental-parameter"
KIND_RADICAL = "radical"

# ---------------------------------------------------------------------------
# sparse polynomial layer: dict {exponent tuple: Fraction}
#
# Exponent tuples are stored with trailing zeros stripped so that values
# survive later symbol declarations on the same table (append-only).


def _strip(e: tuple) -> tuple:
    k = len(e)
    while k and e[k - 1] == 0:
        k -= 1
    return e[:k]


def _pad(e: tuple, n: int) -> tuple:
    return e + (0,) * (n - len(e))


def _exp_get(e: tuple, i: int) -> int:
    return e[i] if i < len(e) else 0


def _grlex_key(e: tuple, n: int):
    return (sum(e), _pad(e, n))


def _pzero() -> dict:
    return {}


def _pconst(c) -> dict:
    c = Fraction(c)
    return {(): c} if c else {}


def _pvar(i: int) -> dict:
    return {_strip((0,) * i + (1,)): Fraction(1)}


def _padd(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        s = out.get(e, Fraction(0)) + c
        if s:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def _pneg(a: dict) -> dict:
    return {e: -c for e, c in a.items()}


def _psub(a: dict, b: dict) -> dict:
    return _padd(a, _pneg(b))


def _emul(e1: tuple, e2: tuple) -> tuple:
    n = max(len(e1), len(e2))
    return _strip(tuple(_exp_get(e1, i) + _exp_get(e2, i) for i in range(n)))


def _pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for e1, c1 in a.items():
        for e2, c2 in b.items():
            e = _emul(e1, e2)
            s = out.get(e, Fraction(0)) + c1 * c2
            if s:
                out[e] = s
            else:
                out.pop(e, None)
    return out


def _pscale(a: dict, c) -> dict:
    c = Fraction(c)
    if not c:
        return {}
    return {e: cc * c for e, cc in a.items()}


def _ppow(a: dict, k: int) -> dict:
    out = _pconst(1)
    for _ in range(k):
        out = _pmul(out, a)
    return out


def _plead(a: dict, n: int) -> tuple:
    # leading (exponent, coefficient) under grlex
    e = max(a, key=lambda ee: _grlex_key(ee, n))
    return e, a[e]


def _pdiv_exact(a: dict, b: dict, n: int) -> Optional[dict]:
    """Exact division a/b in Q[symbols]; None when not divisible.

    Single-divisor reduction is a complete divisibility test: a is a
    multiple of b iff the remainder vanishes.
    """
    if not b:
        raise DivisionByZeroError("polynomial division by zero")
    q: dict = {}
    r = dict(a)
    eb, cb = _plead(b, n)
    while r:
        er, cr = _plead(r, n)
        diff = tuple(_exp_get(er, i) - _exp_get(eb, i) for i in range(max(len(er), len(eb))))
        if any(d < 0 for d in diff):
            return None
        e = _strip(diff)
        c = cr / cb
        q[e] = q.get(e, Fraction(0)) + c
        r = _psub(r, _pmul({e: c}, b))
    return q


def _pderiv_formal(a: dict, i: int) -> dict:
    # formal d/d(symbol i), no chain rule
    out: dict = {}
    for e, c in a.items():
        k = _exp_get(e, i)
        if k:
            ee = list(_pad(e, i + 1))
            ee[i] = k - 1
            out[_strip(tuple(ee))] = c * k
    return out


def _psubs_one(a: dict, i: int, val: dict) -> dict:
    # substitute polynomial val for symbol i
    out: dict = {}
    for e, c in a.items():
        k = _exp_get(e, i)
        ee = list(_pad(e, max(len(e), i + 1)))
        ee[i] = 0
        term = {_strip(tuple(ee)): c}
        if k:
            term = _pmul(term, _ppow(val, k))
        out = _padd(out, term)
    return out


def _pcontent_rat(a: dict) -> Fraction:
    # positive rational content; 1 for the empty poly
    if not a:
        return Fraction(1)
    from math import gcd, lcm

    num = 0
    den = 1
    for c in a.values():
        num = gcd(num, abs(c.numerator))
        den = lcm(den, c.denominator)
    return Fraction(num, den) if num else Fraction(1)


def _pmonic(a: dict, n: int) -> dict:
    if not a:
        return {}
    _, c = _plead(a, n)
    return _pscale(a, 1 / c)


def _vars_used(a: dict) -> set:
    out = set()
    for e in a:
        for i, k in enumerate(e):
            if k:
                out.add(i)
    return out


def _deg_in(a: dict, v: int) -> int:
    return max((_exp_get(e, v) for e in a), default=0)


def _coeff_in(a: dict, v: int, k: int) -> dict:
    out = {}
    for e, c in a.items():
        if _exp_get(e, v) == k:
            ee = list(_pad(e, max(len(e), v + 1)))
            ee[v] = 0
            out[_strip(tuple(ee))] = c
    return out


class _CancelBudgetExceeded(Exception):
    pass


class _CancelBudget:
    """Work meter for the optional quotient cancellation.

    Only _phase_cancel arms it: cancelling common factors there is a
    cosmetic reduction that exactness never depends on, so past the cap
    the gcd gives up and the quotient is kept as built.  Canonicalization
    gcds (FieldElem) run unmetered and stay exact.
    """

    __slots__ = ("remaining", "active")

    def __init__(self):
        self.remaining = 0
        self.active = False

    def arm(self, units: int):
        self.active = True
        self.remaining = units

    def disarm(self):
        self.active = False

    def spend(self, units: int):
        if self.active:
            self.remaining -= units
            if self.remaining < 0:
                raise _CancelBudgetExceeded()


_cancel_budget = _CancelBudget()
_CANCEL_CAP = 400_000


def _prem(a: dict, b: dict, v: int, n: int) -> dict:
    # pseudo-remainder of a by b in variable v
    db = _deg_in(b, v)
    lb = _coeff_in(b, v, db)
    r = dict(a)
    while r and _deg_in(r, v) >= db:
        dr = _deg_in(r, v)
        lr = _coeff_in(r, v, dr)
        _cancel_budget.spend(len(lb) * len(r) + len(lr) * len(b))
        shift = {_strip((0,) * v + (dr - db,)): Fraction(1)}
        r = _psub(_pmul(lb, r), _pmul(_pmul(lr, shift), b))
    return r


def _content_in(a: dict, v: int, n: int) -> dict:
    g: dict = {}
    for k in range(_deg_in(a, v) + 1):
        c = _coeff_in(a, v, k)
        if c:
            g = _pgcd(g, c, n)
    return g


def _pgcd(a: dict, b: dict, n: int) -> dict:
    """Monic gcd in Q[symbols] via the primitive PRS."""
    if not a:
        return _pmonic(b, n)
    if not b:
        return _pmonic(a, n)
    used = _vars_used(a) | _vars_used(b)
    if not used:
        return _pconst(1)
    _cancel_budget.spend(len(a) + len(b))
    v = max(used)
    ca, cb = _content_in(a, v, n), _content_in(b, v, n)
    pa = _pdiv_exact(a, ca, n)
    pb = _pdiv_exact(b, cb, n)
    cg = _pgcd(ca, cb, n)
    if _deg_in(pa, v) < _deg_in(pb, v):
        pa, pb = pb, pa
    while pb:
        r = _prem(pa, pb, v, n)
        if r:
            r = _pdiv_exact(r, _content_in(r, v, n), n)
        pa, pb = pb, r
    pp = _pdiv_exact(pa, _content_in(pa, v, n), n)
    return _pmonic(_pmul(cg, pp), n)


# ---------------------------------------------------------------------------
# symbol table


def _squarefree_part(q: Fraction) -> int:
    """Signed squarefree part of a rational: q = s * (square), s squarefree int."""
    n = q.numerator * q.denominator  # q and n differ by the square den^2
    sign = -1 if n < 0 else 1
    n = abs(n)
    s = 1
    d = 2
    while d * d <= n:
        while n % (d * d) == 0:
            n //= d * d
        if n % d == 0:
            s *= d
            n //= d
        d += 1
    return sign * s * n


def _factor_exponents_mod2(n: int) -> dict:
    out = {}
    n = abs(n)
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) ^ 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) ^ 1
    return {p: 1 for p, e in out.items() if e}


class SymbolTable:
    """Ordered symbols of the coefficient field.

    The independent variable t is always the first symbol.  Parameters are
    transcendental by convention (no relations); radicals carry a defining
    relation s^2 = r whose right-hand side may only involve earlier
    symbols and must be constant under the derivation.

    The table is append-only; values created before a declaration remain
    valid afterwards.
    """

    def __init__(self):
        self._names: list = ["t"]
        self._kinds: list = [KIND_IVAR]
        self._index = {"t": 0}
        self._relations: dict = {}    # radical index -> FieldElem radicand
        self._derivs: dict = {}       # index -> FieldElem (defaults: t->1, else 0)
        self._rad_f2: dict = {}       # echelon F2 basis {pivot prime: exponent dict}

    # -- declarations ------------------------------------------------------

    def _check_name(self, name: str):
        if not name.isidentifier():
            raise RadicalDeclarationError(f"bad symbol name {name!r}")
        if name in PHASE_VARS:
            raise RadicalDeclarationError(f"{name!r} is a reserved phase variable")
        if name in self._index:
            raise RadicalDeclarationError(f"symbol {name!r} already declared")

    def declare_param(self, name: str, derivative: Optional[str] = None) -> "FieldElem":
        """Declare a transcendental parameter; optionally name its derivative.

        The derivative, when given, must itself be a declared symbol; this
        supports towers like a with da/dt = a' where a' is another
        transcendental.
        """
        self._check_name(name)
        if derivative is not None and derivative not in self._index:
            raise UnknownSymbolError(f"derivative symbol {derivative!r} not declared", 0)
        self._names.append(name)
        self._kinds.append(KIND_PARAM)
        i = len(self._names) - 1
        self._index[name] = i
        if derivative is not None:
            self._derivs[i] = self.sym(derivative)
        return self.sym(name)

    def declare_radical(self, name: str, radicand: Union["FieldElem", str, int, Fraction]) -> "FieldElem":
        """Declare s with s^2 = radicand.

        Rejected when the radicand is zero, depends on t or on any symbol
        with a nonzero derivative (radicals must be differential constants),
        is a perfect square of a rational, or (for rational radicands) is
        multiplicatively dependent mod squares on earlier rational radicands.
        """
        self._check_name(name)
        if isinstance(radicand, str):
            radicand = parse(radicand, self)
            if not isinstance(radicand, FieldElem):
                raise RadicalDeclarationError("radicand must be a coefficient-field element")
        r = as_elem(self, radicand)
        if r.is_zero():
            raise RadicalDeclarationError("zero radicand")
        if not r.d().is_zero():
            raise RadicalDeclarationError(f"radicand of {name!r} is not a differential constant")
        q = r.as_fraction()
        if q is not None:
            # rational radicand: canonical soundness checks
            sf = _squarefree_part(q)
            if sf == 1 and q > 0:
                raise RadicalDeclarationError(
                    f"radicand {q} is a perfect square; declare the rational root instead")
            vec = _factor_exponents_mod2(sf)
            if sf < 0:
                vec[-1] = 1
            red = self._f2_reduce(vec)
            if not red:
                raise RadicalDeclarationError(
                    f"radicand {q} is a square times a product of earlier radicands")
            self._rad_f2[max(red)] = red
        else:
            for j, rj in self._relations.items():
                ratio = r / rj
                if ratio.as_fraction() is not None:
                    fq = ratio.as_fraction()
                    if fq > 0 and _squarefree_part(fq) == 1:
                        raise RadicalDeclarationError(
                            f"radicand duplicates {self._names[j]}^2 up to a square rational")
        self._names.append(name)
        self._kinds.append(KIND_RADICAL)
        i = len(self._names) - 1
        self._index[name] = i
        self._relations[i] = r
        return self.sym(name)

    def _f2_reduce(self, vec: dict) -> dict:
        # reduce against the echelon basis of prime-exponent vectors mod 2;
        # empty result = multiplicatively dependent mod squares
        v = dict(vec)
        while v:
            b = self._rad_f2.get(max(v))
            if b is None:
                return v
            for p in b:
                if p in v:
                    del v[p]
                else:
                    v[p] = 1
        return v

    # -- lookups -----------------------------------------------------------

    @property
    def names(self) -> tuple:
        return tuple(self._names)

    def __len__(self):
        return len(self._names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSymbolError(f"unknown symbol {name!r}", 0) from None

    def kind(self, name: str) -> str:
        return self._kinds[self.index(name)]

    def relation(self, name: str) -> Optional["FieldElem"]:
        return self._relations.get(self.index(name))

    def radical_indices(self) -> list:
        return sorted(self._relations)

    def derivative_of(self, i: int) -> "FieldElem":
        if i == 0:
            return self.one()
        return self._derivs.get(i, self.zero())

    # -- constructors ------------------------------------------------------

    def sym(self, name: str) -> "FieldElem":
        return FieldElem(self, _pvar(self.index(name)), _pconst(1))

    def t(self) -> "FieldElem":
        return self.sym("t")

    def zero(self) -> "FieldElem":
        return FieldElem(self, {}, _pconst(1))

    def one(self) -> "FieldElem":
        return FieldElem(self, _pconst(1), _pconst(1))

    def const(self, c) -> "FieldElem":
        return FieldElem(self, _pconst(c), _pconst(1))


# ---------------------------------------------------------------------------
# field elements


def as_elem(table: SymbolTable, v) -> "FieldElem":
    if isinstance(v, FieldElem):
        if v.table is not table:
            raise ValueError("mixing symbol tables")
        return v
    if isinstance(v, (int, Fraction)):
        return table.const(v)
    raise TypeError(f"cannot coerce {type(v).__name__} to FieldElem")


class FieldElem:
    """Element of K = Q(t, params, radicals), kept in canonical form."""

    __slots__ = ("table", "num", "den", "_hash")

    def __init__(self, table: SymbolTable, num: dict, den: dict, _canonical: bool = False):
        self.table = table
        if _canonical:
            self.num, self.den = num, den
        else:
            self.num, self.den = _canonicalize(table, num, den)
        self._hash = None

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def as_fraction(self) -> Optional[Fraction]:
        """The value as a rational constant, or None if symbols remain."""
        if not self.num:
            return Fraction(0)
        if set(self.num) <= {()} and set(self.den) <= {()}:
            return self.num[()] / self.den[()]
        return None

    def symbols_used(self, transitive: bool = True) -> set:
        """Indices of symbols the value depends on.

        With transitive=True, radical symbols pull in the symbols of their
        radicands, so "depends on a parameter" is visible even through
        square roots.
        """
        out = set()
        for e in list(self.num) + list(self.den):
            for i, k in enumerate(e):
                if k:
                    out.add(i)
        if transitive:
            frontier = [i for i in out if i in self.table._relations]
            seen = set(frontier)
            while frontier:
                i = frontier.pop()
                for j in self.table._relations[i].symbols_used(False):
                    out.add(j)
                    if j in self.table._relations and j not in seen:
                        seen.add(j)
                        frontier.append(j)
        return out

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (PhasePoly, PhaseRational)):
            return NotImplemented
        o = as_elem(self.table, other)
        return FieldElem(self.table,
                         _padd(_pmul(self.num, o.den), _pmul(o.num, self.den)),
                         _pmul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(self.table, _pneg(self.num), self.den, _canonical=True)

    def __sub__(self, other):
        if isinstance(other, (PhasePoly, PhaseRational)):
            return NotImplemented
        return self + (-as_elem(self.table, other))

    def __rsub__(self, other):
        return as_elem(self.table, other) - self

    def __mul__(self, other):
        if isinstance(other, (PhasePoly, PhaseRational)):
            return NotImplemented
        o = as_elem(self.table, other)
        return FieldElem(self.table, _pmul(self.num, o.num), _pmul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (PhasePoly, PhaseRational)):
            return NotImplemented
        o = as_elem(self.table, other)
        if o.is_zero():
            raise DivisionByZeroError("division by zero field element")
        return FieldElem(self.table, _pmul(self.num, o.den), _pmul(self.den, o.num))

    def __rtruediv__(self, other):
        return as_elem(self.table, other) / self

    def __pow__(self, k: int):
        if k < 0:
            return self.table.one() / self ** (-k)
        out = self.table.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.table.const(other)
        if not isinstance(other, FieldElem) or other.table is not self.table:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    # -- calculus ------------------------------------------------------------

    def d(self) -> "FieldElem":
        """Derivation of the field: quotient rule over the symbol derivatives."""
        dn = _poly_d(self.table, self.num)
        dd = _poly_d(self.table, self.den)
        den_elem = FieldElem(self.table, self.den, _pconst(1))
        num_elem = FieldElem(self.table, self.num, _pconst(1))
        return (dn * den_elem - num_elem * dd) / (den_elem * den_elem)

    def subs(self, name: str, value) -> "FieldElem":
        """Exact substitution of a symbol by a field element."""
        i = self.table.index(name)
        v = as_elem(self.table, value)
        num = _elem_subs_poly(self.table, self.num, i, v)
        den = _elem_subs_poly(self.table, self.den, i, v)
        if den.is_zero():
            raise DivisionByZeroError("substitution made the denominator vanish")
        return num / den

    def eval_complex(self, assign: dict) -> complex:
        """Numeric evaluation; assign maps symbol names to complex values."""
        idx = {self.table.index(k): complex(v) for k, v in assign.items()}
        for i in self.symbols_used(False):
            if i not in idx:
                raise ValueError(f"no value for symbol {self.table.names[i]!r}")

        def ev(p: dict) -> complex:
            s = 0j
            for e, c in p.items():
                term = complex(c)
                for i, k in enumerate(e):
                    if k:
                        term *= idx[i] ** k
                s += term
            return s

        dv = ev(self.den)
        if dv == 0:
            raise ZeroDivisionError("denominator vanished at the evaluation point")
        return ev(self.num) / dv

    def __repr__(self):
        return f"FieldElem({self})"

    def __str__(self):
        return _elem_str(self.table, self.num, self.den)


def _poly_d(table: SymbolTable, p: dict) -> FieldElem:
    # derivation applied to a plain polynomial, as a field element
    out = table.zero()
    for i in sorted(_vars_used(p)):
        dsym = table.derivative_of(i)
        if dsym.is_zero():
            continue
        part = FieldElem(table, _pderiv_formal(p, i), _pconst(1))
        out = out + part * dsym
    return out


def _elem_subs_poly(table: SymbolTable, p: dict, i: int, v: FieldElem) -> FieldElem:
    out = table.zero()
    for e, c in p.items():
        k = _exp_get(e, i)
        ee = list(_pad(e, max(len(e), i + 1)))
        ee[i] = 0
        term = FieldElem(table, {_strip(tuple(ee)): c}, _pconst(1))
        out = out + term * v ** k
    return out


# -- canonicalization -------------------------------------------------------


def _radical_pass(table: SymbolTable, p: dict):
    """One pass of s^(2k+e) -> r^k s^e; returns (num_poly, den_poly)."""
    rads = table.radical_indices()
    if not rads or not any(_exp_get(e, i) >= 2 for e in p for i in rads):
        return p, _pconst(1)
    acc_n, acc_d = _pzero(), _pconst(1)
    for e, c in p.items():
        ee = list(_pad(e, len(table)))
        tn, td = {_strip(tuple(0 if i in rads else ee[i] for i in range(len(ee)))): c}, _pconst(1)
        for i in rads:
            k, rem = divmod(_exp_get(e, i), 2)
            if rem:
                tn = _pmul(tn, _pvar(i))
            if k:
                r = table._relations[i]
                for _ in range(k):
                    tn = _pmul(tn, r.num)
                    td = _pmul(td, r.den)
        acc_n = _padd(_pmul(acc_n, td), _pmul(tn, acc_d))
        acc_d = _pmul(acc_d, td)
    return acc_n, acc_d


def _reduce_radicals(table: SymbolTable, p: dict):
    """Iterate passes until all radical exponents are <= 1."""
    num, den = p, _pconst(1)
    rads = table.radical_indices()
    while True:
        if not any(_exp_get(e, i) >= 2 for e in num for i in rads) and \
           not any(_exp_get(e, i) >= 2 for e in den for i in rads):
            return num, den
        n1, d1 = _radical_pass(table, num)
        n2, d2 = _radical_pass(table, den)
        num, den = _pmul(n1, d2), _pmul(d1, n2)


def _canonicalize(table: SymbolTable, num: dict, den: dict):
    if not den:
        raise DivisionByZeroError("zero denominator")
    n = len(table)
    n1, d1 = _reduce_radicals(table, num)
    n2, d2 = _reduce_radicals(table, den)
    num, den = _pmul(n1, d2), _pmul(d1, n2)
    # products can reintroduce squares
    while True:
        na, da = _reduce_radicals(table, num)
        nb, db = _reduce_radicals(table, den)
        if da == _pconst(1) == db and na == num and nb == den:
            break
        num, den = _pmul(na, db), _pmul(da, nb)
    # clear radicals from the denominator by conjugation
    rads = table.radical_indices()
    while True:
        present = [i for i in rads if any(_exp_get(e, i) for e in den)]
        if not present:
            break
        i = max(present)
        a = _coeff_in(den, i, 0)
        b = _coeff_in(den, i, 1)
        conj = _psub(a, _pmul(b, _pvar(i)))
        num = _pmul(num, conj)
        den = _pmul(den, conj)
        nn, dd = _reduce_radicals(table, den)
        num = _pmul(num, dd)
        den = nn
        if not den:
            raise DegenerateRadicalError(
                "conjugate norm vanished; the radicand is a square in the field")
        nn2, dd2 = _reduce_radicals(table, num)
        num = nn2
        den = _pmul(den, dd2)
    if not num:
        return {}, _pconst(1)
    g = _pgcd(num, den, n)
    num = _pdiv_exact(num, g, n)
    den = _pdiv_exact(den, g, n)
    _, lc = _plead(den, n)
    if lc != 1:
        num = _pscale(num, 1 / lc)
        den = _pscale(den, 1 / lc)
    return num, den


# ---------------------------------------------------------------------------
# phase polynomials: Q(t, params)[x, y, u1, u2]


def as_phase(table: SymbolTable, v) -> "PhasePoly":
    if isinstance(v, PhasePoly):
        if v.table is not table:
            raise ValueError("mixing symbol tables")
        return v
    if isinstance(v, (int, Fraction, FieldElem)):
        return PhasePoly.const(table, as_elem(table, v))
    raise TypeError(f"cannot coerce {type(v).__name__} to PhasePoly")


class PhasePoly:
    """Sparse polynomial in x, y, u1, u2 with FieldElem coefficients.

    Keys are 4-tuples of exponents in the order (x, y, u1, u2); no zero
    coefficients are stored.
    """

    __slots__ = ("table", "terms", "_hash")

    def __init__(self, table: SymbolTable, terms: dict, _clean: bool = False):
        self.table = table
        if _clean:
            self.terms = terms
        else:
            self.terms = {e: c for e, c in terms.items() if not c.is_zero()}
        self._hash = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def const(cls, table: SymbolTable, c) -> "PhasePoly":
        c = as_elem(table, c)
        return cls(table, {} if c.is_zero() else {(0, 0, 0, 0): c}, _clean=True)

    @classmethod
    def var(cls, table: SymbolTable, name: str) -> "PhasePoly":
        i = PHASE_VARS.index(name)
        e = tuple(1 if j == i else 0 for j in range(4))
        return cls(table, {e: table.one()}, _clean=True)

    @classmethod
    def zero(cls, table: SymbolTable) -> "PhasePoly":
        return cls(table, {}, _clean=True)

    # -- queries -------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return set(self.terms) <= {(0, 0, 0, 0)}

    def constant_value(self) -> FieldElem:
        return self.terms.get((0, 0, 0, 0), self.table.zero())

    def has_uvars(self) -> bool:
        return any(e[2] or e[3] for e in self.terms)

    def deg_xy(self) -> int:
        return max((e[0] + e[1] for e in self.terms), default=0)

    def deg_t(self) -> int:
        """Largest t-degree across coefficient numerators.

        Meaningful for coefficients polynomial in t; denominators in t
        count as not-polynomial and raise.
        """
        d = 0
        for c in self.terms.values():
            if any(_exp_get(e, 0) for e in c.den):
                raise NotDivisibleError("coefficient has a denominator in t")
            d = max(d, max((_exp_get(e, 0) for e in c.num), default=0))
        return d

    def coefficient(self, e: tuple) -> FieldElem:
        return self.terms.get(tuple(e), self.table.zero())

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, PhaseRational):
            return NotImplemented
        o = as_phase(self.table, other)
        out = dict(self.terms)
        for e, c in o.terms.items():
            s = out.get(e)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(e, None)
            else:
                out[e] = s
        return PhasePoly(self.table, out, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return PhasePoly(self.table, {e: -c for e, c in self.terms.items()}, _clean=True)

    def __sub__(self, other):
        if isinstance(other, PhaseRational):
            return NotImplemented
        return self + (-as_phase(self.table, other))

    def __rsub__(self, other):
        return as_phase(self.table, other) - self

    def __mul__(self, other):
        if isinstance(other, PhaseRational):
            return NotImplemented
        o = as_phase(self.table, other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in o.terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                c = c1 * c2
                s = out.get(e)
                s = c if s is None else s + c
                if s.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = s
        return PhasePoly(self.table, out, _clean=True)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = PhasePoly.const(self.table, 1)
        for _ in range(k):
            out = out * self
        return out

    def __truediv__(self, other):
        # exact division only; scalars always divide
        if isinstance(other, (int, Fraction, FieldElem)):
            c = as_elem(self.table, other)
            if c.is_zero():
                raise DivisionByZeroError("division by zero")
            return self.scale(self.table.one() / c)
        o = as_phase(self.table, other)
        q = exact_divide(self, o)
        if q is None:
            raise NotDivisibleError("inexact phase-polynomial division")
        return q

    def scale(self, c: FieldElem) -> "PhasePoly":
        c = as_elem(self.table, c)
        if c.is_zero():
            return PhasePoly.zero(self.table)
        return PhasePoly(self.table, {e: cc * c for e, cc in self.terms.items()}, _clean=True)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, FieldElem)):
            other = PhasePoly.const(self.table, other)
        if not isinstance(other, PhasePoly) or other.table is not self.table:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- calculus ------------------------------------------------------------

    def partial(self, name: str) -> "PhasePoly":
        i = PHASE_VARS.index(name)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ee = list(e)
                ee[i] -= 1
                out[tuple(ee)] = c * e[i]
        return PhasePoly(self.table, out)

    def coeff_d(self) -> "PhasePoly":
        """P^d: the derivation applied to every coefficient."""
        return PhasePoly(self.table, {e: c.d() for e, c in self.terms.items()})

    def subs_phase(self, assign: dict) -> "PhaseRational":
        """Substitute PhaseRational values for phase variables."""
        out = PhaseRational.const(self.table, 0)
        for e, c in self.terms.items():
            term = PhaseRational(self.table, PhasePoly.const(self.table, c),
                                 PhasePoly.const(self.table, 1))
            for i, name in enumerate(PHASE_VARS):
                if e[i]:
                    v = assign.get(name)
                    if v is None:
                        v = PhaseRational.from_poly(PhasePoly.var(self.table, name))
                    term = term * v ** e[i]
            out = out + term
        return out

    def subs_t(self, value) -> "PhasePoly":
        return PhasePoly(self.table, {e: c.subs("t", value) for e, c in self.terms.items()})

    def eval_complex(self, assign: dict, x: complex, y: complex,
                     u1: complex = 0j, u2: complex = 0j) -> complex:
        s = 0j
        for e, c in self.terms.items():
            s += c.eval_complex(assign) * x ** e[0] * y ** e[1] * u1 ** e[2] * u2 ** e[3]
        return s

    # -- ordering / printing ---------------------------------------------------

    def sorted_terms(self) -> list:
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)

    def leading(self):
        e = max(self.terms, key=lambda ee: (sum(ee), ee))
        return e, self.terms[e]

    def monic(self) -> "PhasePoly":
        if not self.terms:
            return self
        _, c = self.leading()
        return self.scale(self.table.one() / c)

    def sort_key(self):
        parts = []
        for e, c in self.sorted_terms():
            parts.append((e, str(c)))
        return tuple(parts)

    def __repr__(self):
        return f"PhasePoly({self})"

    def __str__(self):
        return _phase_str(self)


def exact_divide(p: PhasePoly, d: PhasePoly) -> Optional[PhasePoly]:
    """Quotient q with p = q*d, or None when the division is not exact.

    Single-divisor reduction under grlex; since coefficients live in a
    field, the remainder vanishes iff d divides p.
    """
    if d.is_zero():
        raise DivisionByZeroError("division by the zero polynomial")
    table = p.table
    q: dict = {}
    r = dict(p.terms)
    ed, cd = d.leading()
    while r:
        er = max(r, key=lambda ee: (sum(ee), ee))
        cr = r[er]
        diff = tuple(er[i] - ed[i] for i in range(4))
        if any(k < 0 for k in diff):
            return None
        c = cr / cd
        q[diff] = q.get(diff, table.zero()) + c
        piece = PhasePoly(table, {diff: c}, _clean=True) * d
        for e, cc in piece.terms.items():
            s = r.get(e)
            s = -cc if s is None else s - cc
            if s.is_zero():
                r.pop(e, None)
            else:
                r[e] = s
    return PhasePoly(table, q)


class PhaseRational:
    """Quotient of two phase polynomials; equality via cross-multiplication.

    Used for rational right-hand sides (families III-VI) and for the
    substitution engine.  Kept lightly reduced: common polynomial factors
    are cancelled when cheap, exactness never depends on it.
    """

    __slots__ = ("table", "num", "den")

    def __init__(self, table: SymbolTable, num: PhasePoly, den: PhasePoly, reduce: bool = True):
        if den.is_zero():
            raise DivisionByZeroError("zero denominator in phase rational")
        self.table = table
        if reduce and not num.is_zero():
            num, den = _phase_cancel(num, den)
        if num.is_zero():
            den = PhasePoly.const(table, 1)
        self.num, self.den = num, den

    @classmethod
    def from_poly(cls, p: PhasePoly) -> "PhaseRational":
        return cls(p.table, p, PhasePoly.const(p.table, 1), reduce=False)

    @classmethod
    def const(cls, table: SymbolTable, c) -> "PhaseRational":
        return cls.from_poly(PhasePoly.const(table, c))

    @classmethod
    def var(cls, table: SymbolTable, name: str) -> "PhaseRational":
        return cls.from_poly(PhasePoly.var(table, name))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def as_poly(self) -> Optional[PhasePoly]:
        if self.den.is_constant():
            return self.num.scale(self.table.one() / self.den.constant_value())
        q = exact_divide(self.num, self.den)
        return q

    def _coerce(self, other) -> "PhaseRational":
        if isinstance(other, PhaseRational):
            if other.table is not self.table:
                raise ValueError("mixing symbol tables")
            return other
        return PhaseRational.from_poly(as_phase(self.table, other))

    def __add__(self, other):
        o = self._coerce(other)
        return PhaseRational(self.table, self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return PhaseRational(self.table, -self.num, self.den, reduce=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return PhaseRational(self.table, self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise DivisionByZeroError("division by zero phase rational")
        return PhaseRational(self.table, self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return PhaseRational.const(self.table, 1) / self ** (-k)
        out = PhaseRational.const(self.table, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        return (self.num * o.den - o.num * self.den).is_zero()

    def partial(self, name: str) -> "PhaseRational":
        return PhaseRational(self.table,
                             self.num.partial(name) * self.den - self.num * self.den.partial(name),
                             self.den * self.den)

    def coeff_d(self) -> "PhaseRational":
        return PhaseRational(self.table,
                             self.num.coeff_d() * self.den - self.num * self.den.coeff_d(),
                             self.den * self.den)

    def subs_phase(self, assign: dict) -> "PhaseRational":
        dv = self.den.subs_phase(assign)
        if dv.is_zero():
            raise DivisionByZeroError("substitution produced a zero denominator")
        return self.num.subs_phase(assign) / dv

    def subs_t(self, value) -> "PhaseRational":
        return PhaseRational(self.table, self.num.subs_t(value), self.den.subs_t(value))

    def eval_complex(self, assign: dict, x: complex, y: complex) -> complex:
        dv = self.den.eval_complex(assign, x, y)
        if dv == 0:
            raise ZeroDivisionError("phase rational denominator vanished")
        return self.num.eval_complex(assign, x, y) / dv

    def __repr__(self):
        return f"PhaseRational({self})"

    def __str__(self):
        if self.den == 1:
            return str(self.num)
        return f"({self.num})/({self.den})"


def _phase_cancel(num: PhasePoly, den: PhasePoly):
    """Cancel common factors of num/den, seen as polynomials over Q.

    Coefficient denominators are cleared first; radicals are treated as
    free variables, which can only miss cancellations, never create wrong
    ones.
    """
    table = num.table
    n = len(table)
    if den.is_constant():
        return num, den

    def flatten(p: PhasePoly):
        # joint dict over (4 phase exps) + symbol exps, Fraction coefficients
        out = {}
        mult = _pconst(1)
        for c in p.terms.values():
            mult = _pmul(mult, c.den)
        for e, c in p.terms.items():
            scaled_num = _pmul(c.num, _pdiv_exact(mult, c.den, n))
            for se, f in scaled_num.items():
                key = _strip(e + _pad(se, n))
                out[key] = out.get(key, Fraction(0)) + f
        return {k: v for k, v in out.items() if v}, mult

    fn, mn = flatten(num)
    fd, md = flatten(den)
    total = n + 4
    _cancel_budget.arm(_CANCEL_CAP)
    try:
        g = _pgcd(fn, fd, total)
    except _CancelBudgetExceeded:
        return num, den
    finally:
        _cancel_budget.disarm()
    if set(g) <= {()}:
        return num, den

    def unflatten(p: dict, scale_den: dict) -> PhasePoly:
        terms: dict = {}
        for key, f in p.items():
            full = _pad(key, n + 4)
            pe = full[:4]
            se = _strip(full[4:])
            c = FieldElem(table, {se: f}, scale_den)
            cur = terms.get(pe)
            terms[pe] = c if cur is None else cur + c
        return PhasePoly(table, terms)

    qn = _pdiv_exact(fn, g, total)
    qd = _pdiv_exact(fd, g, total)
    return unflatten(qn, mn), unflatten(qd, md)


# ---------------------------------------------------------------------------
# membership tests


class Membership:
    IN = "In"
    NOT_IN = "NotIn"
    GENERIC_NOT_IN = "GenericNotIn"


SET_Z = "Z"
SET_2Z = "2Z"
SET_HALF_PLUS_Z = "HalfPlusZ"


def membership_test(v: FieldElem, which: str) -> str:
    """Decide membership of v in Z, 2Z, or 1/2+Z.

    Rational constants are decided arithmetically.  Dependence on t or on
    a transcendental parameter (also through a radicand) yields
    GenericNotIn: for parameters in general position the value misses
    every arithmetic progression.  Dependence on radicals over purely
    rational radicands yields NotIn: declaration-time independence checks
    make such values irrational.
    """
    if which not in (SET_Z, SET_2Z, SET_HALF_PLUS_Z):
        raise ValueError(f"unknown set {which!r}")
    q = v.as_fraction()
    if q is not None:
        if which == SET_Z:
            return Membership.IN if q.denominator == 1 else Membership.NOT_IN
        if which == SET_2Z:
            return Membership.IN if q.denominator == 1 and q.numerator % 2 == 0 \
                else Membership.NOT_IN
        return Membership.IN if (q - Fraction(1, 2)).denominator == 1 else Membership.NOT_IN
    table = v.table
    used = v.symbols_used(transitive=True)
    for i in used:
        if table._kinds[i] in (KIND_IVAR, KIND_PARAM):
            return Membership.GENERIC_NOT_IN
    # only radicals with (transitively) rational radicands remain
    return Membership.NOT_IN


# ---------------------------------------------------------------------------
# printing


def _frac_str(c: Fraction) -> str:
    return str(c)


def _mono_str(e: tuple, names) -> str:
    parts = []
    for i, k in enumerate(e):
        if k == 1:
            parts.append(names[i])
        elif k > 1:
            parts.append(f"{names[i]}^{k}")
    return "*".join(parts)


def _poly_str(table: SymbolTable, p: dict) -> str:
    if not p:
        return "0"
    n = len(table)
    items = sorted(p.items(), key=lambda kv: _grlex_key(kv[0], n), reverse=True)
    out = []
    for idx, (e, c) in enumerate(items):
        mono = _mono_str(_pad(e, n), table.names)
        mag = abs(c)
        if mono and mag == 1:
            body = mono
        elif mono:
            body = f"{_frac_str(mag)}*{mono}"
        else:
            body = _frac_str(mag)
        if idx == 0:
            out.append(body if c > 0 else f"-{body}")
        else:
            out.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(out)


def _elem_str(table: SymbolTable, num: dict, den: dict) -> str:
    ns = _poly_str(table, num)
    if den == _pconst(1):
        return ns
    ds = _poly_str(table, den)
    if len(num) > 1 or (num and next(iter(num.values())) < 0):
        ns = f"({ns})"
    if len(den) > 1:
        ds = f"({ds})"
    return f"{ns}/{ds}"


def _phase_str(p: PhasePoly) -> str:
    if not p.terms:
        return "0"
    out = []
    for idx, (e, c) in enumerate(p.sorted_terms()):
        mono = _mono_str(e, PHASE_VARS)
        q = c.as_fraction()
        if q is not None:
            mag = abs(q)
            neg = q < 0
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{_frac_str(mag)}*{mono}"
            else:
                body = _frac_str(mag)
        else:
            neg = False
            cs = f"({c})"
            body = f"{cs}*{mono}" if mono else cs
        if idx == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# parser


class _Tok:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind, self.text, self.pos = kind, text, pos


def _tokenize(text: str):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("int", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("name", text[i:j], i))
            i = j
            continue
        if ch in "+-*/^()":
            toks.append(_Tok(ch, ch, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    toks.append(_Tok("end", "", n))
    return toks


class _Parser:
    """expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
    factor := '-'* atom ('^' int)? ; atom := int | name | '(' expr ')'"""

    def __init__(self, text: str, table: SymbolTable):
        self.toks = _tokenize(text)
        self.k = 0
        self.table = table

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, kind):
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}", t.pos)
        return self.take()

    def parse(self) -> PhaseRational:
        v = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected {t.text!r}", t.pos)
        return v

    def expr(self):
        v = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take()
            w = self.term()
            v = v + w if op.kind == "+" else v - w
        return v

    def term(self):
        v = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.take()
            w = self.factor()
            if op.kind == "*":
                v = v * w
            else:
                if w.is_zero():
                    raise ParseError("division by zero expression", op.pos)
                v = v / w
        return v

    def factor(self):
        neg = False
        while self.peek().kind == "-":
            self.take()
            neg = not neg
        v = self.atom()
        if self.peek().kind == "^":
            caret = self.take()
            t = self.peek()
            if t.kind != "int":
                raise ParseError("exponent must be a nonnegative integer", caret.pos + 1)
            self.take()
            v = v ** int(t.text)
        return -v if neg else v

    def atom(self):
        t = self.peek()
        if t.kind == "int":
            self.take()
            return PhaseRational.const(self.table, int(t.text))
        if t.kind == "name":
            self.take()
            if t.text in PHASE_VARS:
                return PhaseRational.var(self.table, t.text)
            if t.text not in self.table._index:
                raise UnknownSymbolError(f"unknown symbol {t.text!r}", t.pos)
            return PhaseRational.const(self.table, self.table.sym(t.text))
        if t.kind == "(":
            self.take()
            v = self.expr()
            self.expect(")")
            return v
        raise ParseError(f"expected a value, found {t.text!r}" if t.text else "unexpected end of input",
                         t.pos)


def parse(text: str, table: SymbolTable, allow_rational: bool = False):
    """Parse an expression to FieldElem or PhasePoly in canonical form.

    With allow_rational=True a quotient with phase variables in the
    denominator is returned as PhaseRational instead of raising.
    """
    v = _Parser(text, table).parse()
    if v.den.is_constant():
        den_c = v.den.constant_value()
        if v.num.is_constant():
            return v.num.constant_value() / den_c
        return v.num.scale(table.one() / den_c)
    q = v.as_poly()
    if q is not None:
        if q.is_constant():
            return q.constant_value()
        return q
    if allow_rational:
        return v
    raise NotDivisibleError("expression is not polynomial in the phase variables")


def parse_elem(text: str, table: SymbolTable) -> FieldElem:
    v = parse(text, table)
    if isinstance(v, PhasePoly):
        raise ParseError("expected a coefficient-field expression without phase variables", 0)
    return v


def parse_poly(text: str, table: SymbolTable) -> PhasePoly:
    v = parse(text, table)
    if isinstance(v, FieldElem):
        return PhasePoly.const(table, v)
    return v


def arith(a, op: str, b):
    """Four-function arithmetic dispatch used by the CLI layer."""
    ops = {"add": lambda u, v: u + v, "sub": lambda u, v: u - v,
           "mul": lambda u, v: u * v, "div": lambda u, v: u / v}
    if op not in ops:
        raise ValueError(f"unknown op {op!r}")
    return ops[op](a, b)
