"""The operator arena for a pair of matrix factorisations.

For each ordered pair (X, Y) we build the truncated state space
wedge(F_theta (+) fermions of the chosen presentation) tensor R/I tensor
Q[t]_{<= cap} together with the cached operators: the transported
differential d_A, the connection nabla, the propagator zeta, the critical
Atiyah class At = [d_A, nabla], delta and its exponentials, the
inclusion/projection sigma/pi of the theta- and t-degree-zero sector, the
perturbation series sigma_infty and phi_infty, and the homotopy
equivalence Phi, Phi^{-1}, H_hat.  sdr_verify checks the defining
identities exactly on a margin-restricted basis.
"""

from fractions import Fraction

from .mfcat import KoszulFactorisation, default_homotopies
from .quotient import t_adic_expand
from .superspace import (
    LinearOp,
    Space,
    add_into,
    contract_key,
    exp_nilpotent,
    graded_commutator,
    wedge_key,
)


class ZeroVirtualDegree(Exception):
    pass


class IdentityViolation(Exception):
    def __init__(self, name, witness, diff):
        super().__init__("identity %s fails on %r" % (name, witness))
        self.name = name
        self.witness = witness
        self.diff = diff


def full_expansion(r, qb, start_cap=None):
    """t-adic expansion with the cap raised until it is exact."""
    cap = start_cap if start_cap is not None else max(r.total_degree(), 1)
    for _ in range(12):
        exp = t_adic_expand(r, qb, cap)
        if exp.exact_beyond_cap:
            return exp
        cap *= 2
    raise ValueError("t-adic expansion did not terminate; is t quasi-regular?")


class Arena:
    def __init__(self, X, Y, qb, cap, presentation=None, homX=None, homY=None):
        self.X = X
        self.Y = Y
        self.qb = qb
        self.cap = cap
        self.n = qb.n
        if presentation is None:
            presentation = "rho" if X is Y else "nu"
        self.presentation = presentation
        if homY is None:
            homY = default_homotopies(Y)
        if homX is None:
            homX = homY if X is Y else default_homotopies(X)
        self.homX = homX
        self.homY = homY
        mu = qb.mu
        if presentation == "nu":
            fam = [("theta", self.n), ("eta", Y.r), ("xibar", X.r)]
            self.space = Space(fam, mu, self.n, cap)
        elif presentation == "rho":
            if not (X is Y or (isinstance(X, KoszulFactorisation) and X.pairs == Y.pairs)):
                raise ValueError("rho presentation needs X = Y")
            fam = [("theta", self.n), ("xi", X.r), ("xibar", X.r)]
            self.space = Space(fam, mu, self.n, cap)
        elif presentation == "generic":
            fam = [("theta", self.n)]
            sectors = []
            for i in range(Y.dim):
                for j in range(X.dim):
                    sectors.append((Y.parities[i] + X.parities[j]) & 1)
            self.space = Space(fam, mu * len(sectors), self.n, cap, sector_parities=sectors)
        else:
            raise ValueError("unknown presentation %r" % presentation)
        self._rsharp_cache = {}
        self.table_max_tdeg = 0
        self._build_operators()

    # ------------------------------------------------------------------
    # coefficient tables

    def _columns(self, r):
        """r_sharp columns of a polynomial: i -> {(l, delta): coeff}."""
        key = r
        if key not in self._rsharp_cache:
            qb = self.qb
            cols = {}
            for i in range(qb.mu):
                exp = full_expansion(r * qb.basis_poly(i), qb)
                col = dict(exp.coefficients)
                if col:
                    cols[i] = col
                for (_, d) in col:
                    self.table_max_tdeg = max(self.table_max_tdeg, sum(d))
            self._rsharp_cache[key] = cols
        return self._rsharp_cache[key]

    def mult_op(self, r):
        """The even operator r^# (z and t action only)."""
        cols = self._columns(r)
        cap = self.cap
        mu_q = self.space.mu_q

        def rule(key):
            mask, h, delta = key
            sector, hz = divmod(h, mu_q)
            col = cols.get(hz)
            if not col:
                return None
            out = {}
            for (l, d2), c in col.items():
                nd = tuple(a + b for a, b in zip(delta, d2))
                if sum(nd) > cap:
                    continue
                out[(mask, sector * mu_q + l, nd)] = c
            return out

        return LinearOp.from_rule(self.space, 0, rule)

    def dt_mult_op(self, r, k):
        """The even operator z_l d/dt_k(t^delta) z_h* built from the
        expansion of r: the monomial t^delta is differentiated before it
        multiplies."""
        cols = self._columns(r)
        cap = self.cap
        mu_q = self.space.mu_q

        def rule(key):
            mask, h, delta = key
            sector, hz = divmod(h, mu_q)
            col = cols.get(hz)
            if not col:
                return None
            out = {}
            for (l, d2), c in col.items():
                if d2[k] == 0:
                    continue
                shifted = tuple(
                    e - 1 if j == k else e for j, e in enumerate(d2)
                )
                nd = tuple(a + b for a, b in zip(delta, shifted))
                if sum(nd) > cap:
                    continue
                add_into(out, (mask, sector * mu_q + l, nd), c * d2[k])
            return out

        return LinearOp.from_rule(self.space, 0, rule)

    # ------------------------------------------------------------------
    # fermion operators

    def wedge(self, family, i=0):
        pos = self.space.gen_pos(family, i)

        def rule(key):
            hit = wedge_key(self.space, pos, key)
            if hit is None:
                return None
            s, k2 = hit
            return {k2: Fraction(s)}

        return LinearOp.from_rule(self.space, 1, rule)

    def contract(self, family, i=0):
        pos = self.space.gen_pos(family, i)

        def rule(key):
            hit = contract_key(self.space, pos, key)
            if hit is None:
                return None
            s, k2 = hit
            return {k2: Fraction(s)}

        return LinearOp.from_rule(self.space, 1, rule)

    # ------------------------------------------------------------------
    # the main operators

    def _build_operators(self):
        sp = self.space
        n = self.n
        pres = self.presentation
        zero1 = LinearOp.zero(sp, 1)

        if pres == "nu":
            d_A = zero1
            for j, (u, v) in enumerate(self.Y.pairs):
                d_A = d_A + self.mult_op(u).compose(self.contract("eta", j))
                d_A = d_A + self.mult_op(v).compose(self.wedge("eta", j))
            for i, (f, g) in enumerate(self.X.pairs):
                d_A = d_A - self.mult_op(f).compose(self.wedge("xibar", i))
                d_A = d_A + self.mult_op(g).compose(self.contract("xibar", i))
            delta = LinearOp.zero(sp, 0)
            for k in range(n):
                for j in range(self.Y.r):
                    delta = delta + self.mult_op(self.homY.F[k][j]).compose(
                        self.contract("eta", j)
                    ).compose(self.contract("theta", k))
                    delta = delta + self.mult_op(self.homY.G[k][j]).compose(
                        self.wedge("eta", j)
                    ).compose(self.contract("theta", k))
        elif pres == "rho":
            d_A = zero1
            for i, (f, g) in enumerate(self.X.pairs):
                d_A = d_A + self.mult_op(f).compose(self.contract("xi", i))
                d_A = d_A + self.mult_op(g).compose(self.contract("xibar", i))
            delta = LinearOp.zero(sp, 0)
            for k in range(n):
                for i in range(self.X.r):
                    F = self.mult_op(self.homX.F[k][i])
                    G = self.mult_op(self.homX.G[k][i])
                    tk = self.contract("theta", k)
                    delta = delta + F.compose(self.contract("xi", i)).compose(tk)
                    delta = delta + F.compose(self.wedge("xibar", i)).compose(tk)
                    delta = delta + G.compose(self.wedge("xi", i)).compose(tk)
        else:
            d_A = self._generic_d_hom()
            delta = self._generic_delta()

        self.d_A = d_A
        self.delta = delta
        self.nabla = self._build_nabla()
        self.At = graded_commutator(self.d_A, self.nabla)
        self.sigma = self._build_sigma()
        self.pi = self._build_pi()
        self.e_delta = exp_nilpotent(self.delta, max_power=self.n + 1)
        self.e_minus_delta = exp_nilpotent(self.delta.scaled(-1), max_power=self.n + 1)
        self.sigma_infty = self._perturbation_series(self.sigma)
        self.phi_infty = self._perturbation_series(
            self.zeta_after(self.nabla)
        )
        self.Phi = self.pi.compose(self.e_minus_delta)
        self.Phi_inv = self.e_delta.compose(self.sigma_infty)
        self.H_hat = self.e_delta.compose(self.phi_infty).compose(self.e_minus_delta)

    def _generic_d_hom(self):
        sp = self.space
        mu_q = sp.mu_q
        dimX, dimY = self.X.dim, self.Y.dim

        cols = {}
        for key in sp.basis():
            mask, h, delta = key
            sector, hz = divmod(h, mu_q)
            i, j = divmod(sector, dimX)
            theta_sign = -1 if bin(mask).count("1") & 1 else 1
            alpha_sign = -1 if sp.sector_parities[sector] == 0 else 1
            col = {}
            for (i2, ii), p in self.Y.d.items():
                if ii != i:
                    continue
                pc = self._columns(p)
                for (l, d2), c in pc.get(hz, {}).items():
                    nd = tuple(a + b for a, b in zip(delta, d2))
                    if sum(nd) > self.cap:
                        continue
                    add_into(col, (mask, (i2 * dimX + j) * mu_q + l, nd), c * theta_sign)
            for (jj, j2), p in self.X.d.items():
                if jj != j:
                    continue
                pc = self._columns(p)
                for (l, d2), c in pc.get(hz, {}).items():
                    nd = tuple(a + b for a, b in zip(delta, d2))
                    if sum(nd) > self.cap:
                        continue
                    add_into(
                        col,
                        (mask, (i * dimX + j2) * mu_q + l, nd),
                        c * theta_sign * alpha_sign,
                    )
            if col:
                cols[key] = col
        return LinearOp(sp, 1, cols)

    def _generic_delta(self):
        sp = self.space
        mu_q = sp.mu_q
        dimX = self.X.dim
        cols = {}
        for key in sp.basis():
            mask, h, delta = key
            sector, hz = divmod(h, mu_q)
            i, j = divmod(sector, dimX)
            col = {}
            for k in range(self.n):
                hit = contract_key(sp, sp.gen_pos("theta", k), key)
                if hit is None:
                    continue
                s, key2 = hit
                mask2 = key2[0]
                lam_sign = -1 if bin(mask2).count("1") & 1 else 1
                for (i2, ii), p in self.homY.lam[k].items():
                    if ii != i:
                        continue
                    pc = self._columns(p)
                    for (l, d2), c in pc.get(hz, {}).items():
                        nd = tuple(a + b for a, b in zip(delta, d2))
                        if sum(nd) > self.cap:
                            continue
                        add_into(
                            col,
                            (mask2, (i2 * dimX + j) * mu_q + l, nd),
                            c * s * lam_sign,
                        )
            if col:
                cols[key] = col
        return LinearOp(sp, 0, cols)

    def _build_nabla(self):
        sp = self.space

        def rule(key):
            mask, h, delta = key
            out = {}
            for k in range(self.n):
                if delta[k] == 0:
                    continue
                hit = wedge_key(sp, sp.gen_pos("theta", k), key)
                if hit is None:
                    continue
                s, key2 = hit
                nd = tuple(e - 1 if j == k else e for j, e in enumerate(delta))
                add_into(out, (key2[0], h, nd), Fraction(s * delta[k]))
            return out

        return LinearOp.from_rule(sp, 1, rule)

    def is_core_key(self, key):
        """theta-degree 0 and t-degree 0: the subspace B'."""
        mask, h, delta = key
        if sum(delta):
            return False
        for k in range(self.n):
            if mask >> self.space.gen_pos("theta", k) & 1:
                return False
        return True

    def core_basis(self):
        return [k for k in self.space.basis() if self.is_core_key(k)]

    def _build_sigma(self):
        cols = {}
        for key in self.core_basis():
            cols[key] = {key: Fraction(1)}
        return LinearOp(self.space, 0, cols)

    def _build_pi(self):
        return self._build_sigma()

    def zeta_state(self, state):
        out = {}
        for key, c in state.items():
            v = self.space.virtual_degree(key)
            if v == 0:
                raise ZeroVirtualDegree(key)
            out[key] = c * Fraction(1, v)
        return out

    def zeta_after(self, op):
        """zeta composed after an operator whose image avoids virtual
        degree zero."""
        cols = {}
        for key, col in op.cols.items():
            out = {}
            for k2, c in col.items():
                v = self.space.virtual_degree(k2)
                if v == 0:
                    raise ZeroVirtualDegree(k2)
                out[k2] = c * Fraction(1, v)
            cols[key] = out
        return LinearOp(self.space, op.degree, cols)

    def _perturbation_series(self, tail):
        """sum_m (-1)^m (zeta At)^m tail; the series stops at m = n and
        the m = n + 1 term is asserted to vanish."""
        zeta_at = self.zeta_after(self.At)
        total = tail
        term = tail
        sign = 1
        for m in range(1, self.n + 2):
            term = zeta_at.compose(term)
            sign = -sign
            if m <= self.n:
                total = total + term.scaled(sign)
            else:
                if not term.is_zero():
                    raise ValueError("perturbation series failed to truncate")
        return total

    # ------------------------------------------------------------------

    def margin_needed(self):
        return self.table_max_tdeg

    def test_keys(self, margin):
        limit = self.cap - margin
        return [k for k in self.space.basis() if sum(k[2]) <= limit]

    def sdr_verify(self, margin=None, raise_on_failure=True):
        """Check the homotopy-equivalence identities exactly on all basis
        states of t-degree <= cap - margin.  Returns a report dict."""
        if margin is None:
            margin = 2 * self.margin_needed()
        keys = self.test_keys(margin)
        core = [k for k in keys if self.is_core_key(k)]
        report = {"margin": margin, "checked": len(keys), "identities": {}}

        def check(name, fn, domain):
            for key in domain:
                got = fn(key)
                got = {k: v for k, v in got.items() if v}
                if got:
                    report["identities"][name] = {
                        "ok": False,
                        "witness": key,
                        "diff": got,
                    }
                    if raise_on_failure:
                        raise IdentityViolation(name, key, got)
                    return
            report["identities"][name] = {"ok": True}

        Phi, Phi_inv, H = self.Phi, self.Phi_inv, self.H_hat
        d = self.d_A

        check(
            "Phi Phi_inv = 1",
            lambda key: _sub(Phi.apply(Phi_inv.apply_key(key)), {key: Fraction(1)}),
            core,
        )

        def retract_defect(key):
            lhs = Phi_inv.apply(Phi.apply_key(key))
            comm = _add(
                d.apply(H.apply_key(key)), H.apply(d.apply_key(key))
            )
            return _sub(_add(lhs, comm), {key: Fraction(1)})

        check("Phi_inv Phi = 1 - [d, H]", retract_defect, keys)
        check("H H = 0", lambda key: H.apply(H.apply_key(key)), keys)
        check("H Phi_inv = 0", lambda key: H.apply(Phi_inv.apply_key(key)), core)
        check("Phi H = 0", lambda key: Phi.apply(H.apply_key(key)), keys)
        return report


def _add(a, b):
    out = dict(a)
    for k, v in b.items():
        add_into(out, k, v)
    return out


def _sub(a, b):
    out = dict(a)
    for k, v in b.items():
        add_into(out, k, -v)
    return out
