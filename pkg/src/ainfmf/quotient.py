"""Calculus on the quotient algebra R/I tensored with polynomial boson
variables t_1..t_n.

Everything here is driven by a Groebner basis of I = (t_1,...,t_n) with
cofactors, which lets us expand any polynomial r as a finite or truncated
sum  r = sum_{i,delta} r_{(i,delta)} sigma(z_i) t^delta  where the z_i are
the standard monomials of R/I.  On top of that expansion sit the structure
tensor Gamma of the multiplication, the transported multiplication
operator r^#, the connection components d/dt_i, and the rescaled Euler
idempotent.
"""

from fractions import Fraction

from .poly import GroebnerBasis, Polynomial, ORDERS


class InfiniteQuotient(Exception):
    pass


class CapExceeded(Exception):
    pass


def _add_delta(a, b):
    return tuple(x + y for x, y in zip(a, b))


class QuotientBasis:
    """Standard monomial basis of R/I for I generated by a sequence t.

    Monomials are listed ascending in the active order, so index 0 is the
    constant monomial 1.
    """

    def __init__(self, tseq, order="grevlex"):
        if not tseq:
            raise ValueError("empty t-sequence")
        self.nvars = tseq[0].nvars
        self.n = len(tseq)
        self.tseq = list(tseq)
        self.order = order
        self.gb = GroebnerBasis(tseq, order)
        try:
            self.monomials = self.gb.standard_monomials()
        except ValueError as exc:
            raise InfiniteQuotient(str(exc)) from exc
        self.mu = len(self.monomials)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        assert self.monomials[0] == (0,) * self.nvars

    def sigma(self, r):
        """Normal form of r: the canonical representative supported on
        standard monomials."""
        return self.gb.reduce(r)

    def sigma_vector(self, r):
        """Coefficients of sigma(r) in the standard basis."""
        rem = self.gb.reduce(r)
        vec = {}
        for m, c in rem.terms.items():
            vec[self.index[m]] = c
        return vec

    def basis_poly(self, i):
        return Polynomial.monomial(self.nvars, self.monomials[i])


def standard_basis(gb_or_tseq, order="grevlex"):
    if isinstance(gb_or_tseq, QuotientBasis):
        return gb_or_tseq
    return QuotientBasis(gb_or_tseq, order)


def section_sigma(r, qb):
    return qb.sigma(r)


class TAdicExpansion:
    def __init__(self, source, cap, coefficients, exact_beyond_cap):
        self.source = source
        self.cap = cap
        # (basis index i, boson multi-index delta) -> Fraction
        self.coefficients = coefficients
        self.exact_beyond_cap = exact_beyond_cap

    def coefficient(self, i, delta):
        return self.coefficients.get((i, delta), Fraction(0))

    def reconstruct(self, qb):
        """Substitute the polynomials t_j back in.  Equals the source
        exactly when exact_beyond_cap holds."""
        out = Polynomial.zero(qb.nvars)
        for (i, delta), c in self.coefficients.items():
            p = Polynomial.const(qb.nvars, c) * qb.basis_poly(i)
            for j, e in enumerate(delta):
                for _ in range(e):
                    p = p * qb.tseq[j]
            out = out + p
        return out


def t_adic_expand(r, qb, cap):
    """Expand r = sum r_{(i,delta)} sigma(z_i) t^delta by iterated
    division: the remainder gives the coefficients at the current delta,
    and the t_j-cofactor of the quotient is expanded at delta + e_j."""
    coeffs = {}
    exact = True
    zero_delta = (0,) * qb.n
    work = [(zero_delta, r)]
    while work:
        delta, p = work.pop()
        quots, rem = qb.gb.reduce_with_quotients(p)
        for m, c in rem.terms.items():
            key = (qb.index[m], delta)
            coeffs[key] = coeffs.get(key, Fraction(0)) + c
            if not coeffs[key]:
                del coeffs[key]
        for j in range(qb.n):
            aj = Polynomial.zero(qb.nvars)
            for q, cof in zip(quots, qb.gb.cofactors):
                if q:
                    aj = aj + q * cof[j]
            if aj.is_zero():
                continue
            if sum(delta) >= cap:
                exact = False
                continue
            ej = tuple(1 if k == j else 0 for k in range(qb.n))
            work.append((_add_delta(delta, ej), aj))
    return TAdicExpansion(r, cap, coeffs, exact)


class GammaTensor:
    """sigma(z_i) sigma(z_j) = sum_{k,delta} Gamma^{ij}_{k delta}
    sigma(z_k) t^delta, stored for |delta| <= cap."""

    def __init__(self, qb, cap):
        self.qb = qb
        self.cap = cap
        self.entries = {}
        self.exact_beyond_cap = True
        for i in range(qb.mu):
            for j in range(i, qb.mu):
                prod = qb.basis_poly(i) * qb.basis_poly(j)
                exp = t_adic_expand(prod, qb, cap)
                if not exp.exact_beyond_cap:
                    self.exact_beyond_cap = False
                for (k, delta), c in exp.coefficients.items():
                    self.entries[(i, j, k, delta)] = c
                    if i != j:
                        self.entries[(j, i, k, delta)] = c

    def get(self, i, j, k, delta):
        return self.entries.get((i, j, k, delta), Fraction(0))

    def products_of(self, i, j):
        """All (k, delta, coeff) with Gamma^{ij}_{k delta} nonzero."""
        out = []
        for (a, b, k, delta), c in self.entries.items():
            if a == i and b == j:
                out.append((k, delta, c))
        return out


def gamma_tensor(qb, cap):
    return GammaTensor(qb, cap)


class TLinearOp:
    """A Q[t]-linear operator on R/I tensor Q[t]_{<= cap}, stored by its
    action on the basis vectors z_i at t-degree zero."""

    def __init__(self, qb, cap, columns, exact_beyond_cap):
        self.qb = qb
        self.cap = cap
        # columns[i] = {(l, delta): coeff} meaning z_i -> coeff z_l t^delta
        self.columns = columns
        self.exact_beyond_cap = exact_beyond_cap

    def apply(self, state):
        """state: {(i, delta): Fraction} -> same shape.  Output terms with
        |delta| beyond the cap are dropped when the operator is exact up
        to the cap being irrelevant; if the columns themselves were
        truncated we refuse to silently produce wrong answers."""
        out = {}
        for (i, delta), c in state.items():
            col = self.columns.get(i, {})
            for (l, d2), c2 in col.items():
                nd = _add_delta(delta, d2)
                if sum(nd) > self.cap:
                    if self.exact_beyond_cap:
                        raise CapExceeded(
                            "result exceeds t-degree cap %d" % self.cap
                        )
                    raise CapExceeded("operator truncated at the cap")
                key = (l, nd)
                out[key] = out.get(key, Fraction(0)) + c * c2
                if not out[key]:
                    del out[key]
        return out

    def compose(self, other):
        columns = {}
        exact = self.exact_beyond_cap and other.exact_beyond_cap
        for i, col in other.columns.items():
            acc = {}
            for (l, delta), c in col.items():
                mid = self.columns.get(l, {})
                for (m, d2), c2 in mid.items():
                    nd = _add_delta(delta, d2)
                    if sum(nd) > self.cap:
                        exact = False
                        continue
                    key = (m, nd)
                    acc[key] = acc.get(key, Fraction(0)) + c * c2
                    if not acc[key]:
                        del acc[key]
            if acc:
                columns[i] = acc
        return TLinearOp(self.qb, self.cap, columns, exact)


def r_sharp(r, qb, cap, gamma=None):
    """Multiplication by r transported to R/I tensor Q[t]: columns are the
    expansions of r * sigma(z_i).

    When a Gamma tensor is supplied the columns are instead assembled by
    the convolution  sum_{alpha+beta=delta} sum_k r_{(k,alpha)}
    Gamma^{ki}_{l beta};  both routes agree (the tests assert it)."""
    columns = {}
    exact = True
    if gamma is None:
        for i in range(qb.mu):
            exp = t_adic_expand(r * qb.basis_poly(i), qb, cap)
            if not exp.exact_beyond_cap:
                exact = False
            col = {(l, delta): c for (l, delta), c in exp.coefficients.items()}
            if col:
                columns[i] = col
    else:
        rexp = t_adic_expand(r, qb, cap)
        if not rexp.exact_beyond_cap or not gamma.exact_beyond_cap:
            exact = False
        for i in range(qb.mu):
            col = {}
            for (k, alpha), c in rexp.coefficients.items():
                for l, beta, g in gamma.products_of(k, i):
                    delta = _add_delta(alpha, beta)
                    if sum(delta) > cap:
                        exact = False
                        continue
                    key = (l, delta)
                    col[key] = col.get(key, Fraction(0)) + c * g
                    if not col[key]:
                        del col[key]
            if col:
                columns[i] = col
    return TLinearOp(qb, cap, columns, exact)


def dt_operator(i, n):
    """The formal partial derivative in t_i acting on states
    {(h, delta): coeff}: basis-wise delta_i * t^(delta - e_i)."""

    def op(state):
        out = {}
        for (h, delta), c in state.items():
            if delta[i] == 0:
                continue
            nd = tuple(e - 1 if k == i else e for k, e in enumerate(delta))
            key = (h, nd)
            out[key] = out.get(key, Fraction(0)) + c * delta[i]
            if not out[key]:
                del out[key]
        return out

    return op


def dt_of_polynomial(r, qb, i, cap=None):
    """d/dt_i of a polynomial r, computed through its expansion, returned
    as a polynomial (t powers substituted back).  Needs the expansion to
    terminate within the cap."""
    if cap is None:
        cap = r.total_degree() + 1
    exp = t_adic_expand(r, qb, cap)
    if not exp.exact_beyond_cap:
        raise CapExceeded("expansion of r did not terminate within the cap")
    deriv = dt_operator(i, qb.n)(
        {key: c for key, c in exp.coefficients.items()}
    )
    out = Polynomial.zero(qb.nvars)
    for (h, delta), c in deriv.items():
        p = Polynomial.const(qb.nvars, c) * qb.basis_poly(h)
        for j, e in enumerate(delta):
            for _ in range(e):
                p = p * qb.tseq[j]
        out = out + p
    return out


# The Koszul differential of the sequence t_1..t_n and the connection, on
# zero- and one-form states.  A zero-form state is {(h, delta): c}; a
# one-form state is {(h, delta, j): c} for the component along dz_j.


def koszul_d(qb, form_state):
    out = {}
    for key, c in form_state.items():
        h, delta, j = key
        nd = tuple(e + 1 if k == j else e for k, e in enumerate(delta))
        nk = (h, nd)
        out[nk] = out.get(nk, Fraction(0)) + c
        if not out[nk]:
            del out[nk]
    return out


def nabla0(qb, state):
    out = {}
    for (h, delta), c in state.items():
        for j, e in enumerate(delta):
            if e == 0:
                continue
            nd = tuple(x - 1 if k == j else x for k, x in enumerate(delta))
            key = (h, nd, j)
            out[key] = out.get(key, Fraction(0)) + c * e
            if not out[key]:
                del out[key]
    return out


def nabla1(qb, one_form):
    """Extension of the connection to one-forms.  Two-form components are
    keyed (h, delta, k, j) with k < j canonical (dz_k wedge dz_j)."""
    out = {}
    for (h, delta, j), c in one_form.items():
        for k, e in enumerate(delta):
            if e == 0 or k == j:
                continue
            nd = tuple(x - 1 if m == k else x for m, x in enumerate(delta))
            if k < j:
                key, sign = (h, nd, k, j), 1
            else:
                key, sign = (h, nd, j, k), -1
            out[key] = out.get(key, Fraction(0)) + sign * c * e
            if not out[key]:
                del out[key]
    return out


def koszul_d2(qb, two_form):
    """Koszul differential on two-forms: contract dz_k wedge dz_j against
    sum t_i (dz_i)^*."""
    out = {}
    for (h, delta, k, j), c in two_form.items():
        for pos, (idx, other) in enumerate(((k, j), (j, k))):
            sign = 1 if pos == 0 else -1
            nd = tuple(
                x + 1 if m == idx else x for m, x in enumerate(delta)
            )
            key = (h, nd, other)
            out[key] = out.get(key, Fraction(0)) + sign * c
            if not out[key]:
                del out[key]
    return out


def middle_operator(qb, one_form):
    """d_K nabla^1 + nabla^0 d_K on one-forms.  Diagonal: scales the
    component at t-degree |N| by 1 + |N|."""
    a = koszul_d2(qb, nabla1(qb, one_form))
    b = nabla0(qb, koszul_d(qb, one_form))
    out = dict(a)
    for key, c in b.items():
        out[key] = out.get(key, Fraction(0)) + c
        if not out[key]:
            del out[key]
    return out


def euler_idempotent(qb, state):
    """d_K (d_K nabla^1 + nabla^0 d_K)^{-1} nabla^0 applied to a zero-form
    state: the diagonal operator in the middle scales the dz_j component
    at t-degree |N| by 1/(1 + |N|)."""
    one_form = nabla0(qb, state)
    scaled = {}
    for (h, delta, j), c in one_form.items():
        scaled[(h, delta, j)] = c / (1 + sum(delta))
    return koszul_d(qb, scaled)
