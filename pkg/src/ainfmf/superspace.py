"""Z2-graded exterior algebra states and sparse linear operators.

A state lives in (wedge of a finite set of odd generators) tensor R/I
tensor Q[t] truncated at a t-degree cap.  Basis keys are triples
(mask, h, delta): a bitmask over the ordered generator list, a quotient
basis index h, and a boson multi-index delta.  All signs derive from the
fixed generator order; generators are grouped into named families and the
family order is part of the space descriptor.
"""

from fractions import Fraction
from itertools import product


def _popcount_below(mask, p):
    return bin(mask & ((1 << p) - 1)).count("1")


def _deltas(n, cap):
    if n == 0:
        yield ()
        return
    for d in product(range(cap + 1), repeat=n):
        if sum(d) <= cap:
            yield d


class Space:
    """Descriptor for a truncated state space.

    families: ordered list of (name, count); positions are assigned in
    that order and every sign in the package is derived from them.
    """

    def __init__(self, families, mu, nboson, cap, sector_parities=None):
        self.families = list(families)
        # mu is the total coefficient dimension; when sector_parities is
        # given it must be mu_q * len(sector_parities) with mu_q the
        # quotient dimension, and index h decomposes as sector * mu_q + h_z
        self.mu = mu
        self.sector_parities = sector_parities
        if sector_parities:
            assert mu % len(sector_parities) == 0
            self.mu_q = mu // len(sector_parities)
        else:
            self.mu_q = mu
        self.nboson = nboson
        self.cap = cap
        self.positions = {}
        pos = 0
        for name, count in self.families:
            for i in range(count):
                self.positions[(name, i)] = pos
                pos += 1
        self.ngen = pos
        self.pos_name = {v: k for k, v in self.positions.items()}

    def gen_pos(self, family, i=0):
        return self.positions[(family, i)]

    def family_count(self, family):
        for name, count in self.families:
            if name == family:
                return count
        return 0

    def basis(self):
        for delta in _deltas(self.nboson, self.cap):
            for h in range(self.mu):
                for mask in range(1 << self.ngen):
                    yield (mask, h, delta)

    def parity(self, key):
        p = bin(key[0]).count("1") & 1
        if self.sector_parities:
            p ^= self.sector_parities[key[1] // self.mu_q]
        return p

    def virtual_degree(self, key, theta_family="theta"):
        """Number of theta generators present plus the boson degree."""
        mask = key[0]
        count = 0
        for i in range(self.family_count(theta_family)):
            if mask >> self.gen_pos(theta_family, i) & 1:
                count += 1
        return count + sum(key[2])

    def key_label(self, key):
        mask, h, delta = key
        parts = []
        for p in range(self.ngen):
            if mask >> p & 1:
                name, i = self.pos_name[p]
                parts.append("%s%d" % (name, i + 1))
        parts.append("z%d" % (h + 1))
        for j, e in enumerate(delta):
            if e:
                parts.append("t%d^%d" % (j + 1, e) if e > 1 else "t%d" % (j + 1))
        return "*".join(parts)


def state_parity(state):
    """Parity of a homogeneous state; raises on mixed parity."""
    ps = {bin(k[0]).count("1") & 1 for k in state}
    if len(ps) > 1:
        raise ValueError("state is not parity homogeneous")
    return ps.pop() if ps else 0


def add_into(acc, key, c):
    if not c:
        return
    acc[key] = acc.get(key, Fraction(0)) + c
    if not acc[key]:
        del acc[key]


def state_add(a, b, scale=Fraction(1)):
    out = dict(a)
    for k, c in b.items():
        add_into(out, k, c * scale)
    return out


def state_scale(a, scale):
    scale = Fraction(scale)
    if not scale:
        return {}
    return {k: c * scale for k, c in a.items()}


def format_state(space, state):
    if not state:
        return "0"
    items = sorted(state.items(), key=lambda kv: (kv[0][2], kv[0][1], kv[0][0]))
    parts = []
    for key, c in items:
        label = space.key_label(key)
        if c == 1:
            term = label
        elif c == -1:
            term = "-" + label
        else:
            term = "%s*%s" % (c, label)
        parts.append(term)
    out = parts[0]
    for term in parts[1:]:
        out += " - " + term[1:] if term.startswith("-") else " + " + term
    return out


class LinearOp:
    """Sparse operator stored column-wise: cols[key_in][key_out] = coeff.
    degree is the Z2-degree; composition checks are by bookkeeping only
    (entries are not forced to be homogeneous against the basis, but every
    constructor in this package produces homogeneous operators)."""

    __slots__ = ("space", "degree", "cols")

    def __init__(self, space, degree, cols=None):
        self.space = space
        self.degree = degree & 1
        self.cols = cols if cols is not None else {}

    @classmethod
    def zero(cls, space, degree=0):
        return cls(space, degree)

    @classmethod
    def identity(cls, space):
        op = cls(space, 0)
        op.cols = None  # marker: identity acts lazily
        return op

    def is_identity(self):
        return self.cols is None

    @classmethod
    def from_rule(cls, space, degree, rule, keys=None):
        """rule(key) -> dict key_out -> coeff (or None)."""
        op = cls(space, degree)
        for key in keys if keys is not None else space.basis():
            col = rule(key)
            if col:
                op.cols[key] = dict(col)
        return op

    def apply(self, state):
        if self.is_identity():
            return dict(state)
        out = {}
        for key, c in state.items():
            col = self.cols.get(key)
            if not col:
                continue
            for k2, c2 in col.items():
                add_into(out, k2, c * c2)
        return out

    def apply_key(self, key):
        if self.is_identity():
            return {key: Fraction(1)}
        return dict(self.cols.get(key, {}))

    def __add__(self, other):
        if self.is_identity() or other.is_identity():
            raise ValueError("materialize identity before adding")
        if self.degree != other.degree:
            raise ValueError("adding operators of different Z2-degree")
        cols = {k: dict(v) for k, v in self.cols.items()}
        for k, col in other.cols.items():
            dst = cols.setdefault(k, {})
            for k2, c in col.items():
                add_into(dst, k2, c)
            if not dst:
                del cols[k]
        return LinearOp(self.space, self.degree, cols)

    def __sub__(self, other):
        return self + other.scaled(-1)

    def scaled(self, c):
        c = Fraction(c)
        if self.is_identity():
            op = LinearOp(self.space, 0)
            for key in self.space.basis():
                op.cols[key] = {key: c}
            return op
        return LinearOp(
            self.space,
            self.degree,
            {k: {k2: c2 * c for k2, c2 in col.items()} for k, col in self.cols.items()},
        )

    def compose(self, other):
        """self after other."""
        if other.is_identity():
            return self
        if self.is_identity():
            return other
        cols = {}
        for key, col in other.cols.items():
            acc = {}
            for kmid, c in col.items():
                col2 = self.cols.get(kmid)
                if not col2:
                    continue
                for kout, c2 in col2.items():
                    add_into(acc, kout, c * c2)
            if acc:
                cols[key] = acc
        return LinearOp(self.space, self.degree ^ other.degree, cols)

    def materialized_identity_sub(self):
        """identity minus self, materialized over the space basis."""
        cols = {}
        for key in self.space.basis():
            col = {key: Fraction(1)}
            for k2, c in self.cols.get(key, {}).items():
                add_into(col, k2, -c)
            if col:
                cols[key] = col
        return LinearOp(self.space, 0, cols)

    def is_zero(self):
        if self.is_identity():
            return False
        return all(not col for col in self.cols.values())

    def nonzero_entries(self):
        out = []
        for k, col in self.cols.items():
            for k2, c in col.items():
                if c:
                    out.append((k, k2, c))
        return out

    def equals(self, other):
        return (self - other).is_zero()


def graded_commutator(a, b):
    sign = -1 if (a.degree and b.degree) else 1
    return a.compose(b) - b.compose(a).scaled(sign)


def wedge_op(space, pos):
    def rule(key):
        mask, h, delta = key
        if mask >> pos & 1:
            return None
        sign = -1 if _popcount_below(mask, pos) & 1 else 1
        return {(mask | 1 << pos, h, delta): Fraction(sign)}

    return LinearOp.from_rule(space, 1, rule)


def contract_op(space, pos):
    def rule(key):
        mask, h, delta = key
        if not mask >> pos & 1:
            return None
        sign = -1 if _popcount_below(mask, pos) & 1 else 1
        return {(mask & ~(1 << pos), h, delta): Fraction(sign)}

    return LinearOp.from_rule(space, 1, rule)


def wedge_key(space, pos, key):
    """(sign, new_key) or None for wedging generator pos onto a basis key."""
    mask, h, delta = key
    if mask >> pos & 1:
        return None
    sign = -1 if _popcount_below(mask, pos) & 1 else 1
    return sign, (mask | 1 << pos, h, delta)


def contract_key(space, pos, key):
    mask, h, delta = key
    if not mask >> pos & 1:
        return None
    sign = -1 if _popcount_below(mask, pos) & 1 else 1
    return sign, (mask & ~(1 << pos), h, delta)


def exp_nilpotent(op, max_power=None):
    """Sum of op^m / m! until the power vanishes."""
    if max_power is None:
        max_power = op.space.ngen + op.space.cap + 2
    total = None
    power = LinearOp.identity(op.space)
    fact = 1
    for m in range(max_power + 1):
        if m > 0:
            power = op.compose(power)
            fact *= m
            if power.is_zero():
                break
        term = power.scaled(Fraction(1, fact)) if not power.is_identity() else None
        if term is None:
            # identity term: fold it in at the end via materialization
            total = LinearOp(op.space, 0)
            for key in op.space.basis():
                total.cols[key] = {key: Fraction(1)}
        else:
            total = total + term
    else:
        if not power.is_zero():
            raise ValueError("operator is not nilpotent within the bound")
    return total


def koszul_tensor_apply(ops, tensor_state, grading="plain"):
    """Apply a tuple of homogeneous operators to a tensor-product state.

    tensor_state: dict mapping tuples of basis keys -> coefficient, one
    key per tensor slot.  Sign rule: moving op_i past the first i-1 slots
    costs (-1)^{|op_i| * (sum of slot degrees crossed)} where slot degree
    is the mask parity (plain) or mask parity + 1 (tilde).
    """
    shift = 1 if grading == "tilde" else 0
    out = {}
    for keys, c in tensor_state.items():
        if len(keys) != len(ops):
            raise ValueError("arity mismatch")
        # results per slot
        slot_results = []
        sign = 1
        crossed = 0
        for i, (op, key) in enumerate(zip(ops, keys)):
            if op.degree and crossed & 1:
                sign = -sign
            slot_results.append(op.apply_key(key))
            crossed += (bin(key[0]).count("1") + shift) & 1
        # expand the tensor product of the per-slot results
        partial = [((), Fraction(sign) * c)]
        for res in slot_results:
            nxt = []
            for keys_acc, coeff in partial:
                for k2, c2 in res.items():
                    nxt.append((keys_acc + (k2,), coeff * c2))
            partial = nxt
        for keys_out, coeff in partial:
            add_into(out, keys_out, coeff)
    return out
