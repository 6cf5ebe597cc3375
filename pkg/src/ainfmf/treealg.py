"""Plane binary trees, decorations, Koszul-signed denotation and the
signless mirror evaluation.

A tree with k leaves is a nested tuple over the leaf labels 1..k, e.g.
((1, 2), 3).  Internal vertices are trivalent; the root hangs below the
top vertex.  A decoration assigns operators to leaves, internal edges,
internal vertices (a binary product r2) and the root; its denotation
evaluates the tree on a tuple of inputs with the Koszul sign convention
in the tilde grading.  The mirror evaluation runs the left-right
mirrored decoration on the reversed inputs with no Koszul signs, with
mu2 at the vertices; the two paths differ by a pure sign computed by
mirror_sign.
"""


class DegreeMismatch(Exception):
    pass


def enumerate_binary(k):
    """All plane binary trees with k leaves labelled 1..k, ordered with
    the left subtree size descending; there are Catalan(k-1) of them."""
    if k < 2:
        raise ValueError("need at least two leaves")

    def enum(lo, hi):
        if lo == hi:
            return [lo]
        out = []
        for mid in range(hi - 1, lo - 1, -1):
            for left in enum(lo, mid):
                for right in enum(mid + 1, hi):
                    out.append((left, right))
        return out

    return enum(1, k)


def leaves(tree):
    if isinstance(tree, int):
        return [tree]
    return leaves(tree[0]) + leaves(tree[1])


def leaf_count(tree):
    return len(leaves(tree))


def tree_to_str(tree):
    if isinstance(tree, int):
        return str(tree)
    return "(%s,%s)" % (tree_to_str(tree[0]), tree_to_str(tree[1]))


def parse_tree(text):
    text = text.replace(" ", "")
    pos = 0

    def parse():
        nonlocal pos
        if text[pos] == "(":
            pos += 1
            left = parse()
            assert text[pos] == ","
            pos += 1
            right = parse()
            assert text[pos] == ")"
            pos += 1
            return (left, right)
        start = pos
        while pos < len(text) and text[pos].isdigit():
            pos += 1
        return int(text[start:pos])

    out = parse()
    if pos != len(text):
        raise ValueError("trailing characters in tree string")
    return out


def internal_edges(tree):
    """Edges between two trivalent vertices: one for every internal
    vertex that is a child of another internal vertex."""

    def count(node, has_parent_vertex):
        if isinstance(node, int):
            return 0
        own = 1 if has_parent_vertex else 0
        return own + count(node[0], True) + count(node[1], True)

    return count(tree, False)


def internal_vertices(tree):
    if isinstance(tree, int):
        return 0
    return 1 + internal_vertices(tree[0]) + internal_vertices(tree[1])


def right_branch_counts(tree):
    """P_i: how often the path from leaf i to the root enters a
    trivalent vertex as the right-hand branch.  Returns a dict leaf -> count."""
    out = {}

    def walk(node, count):
        if isinstance(node, int):
            out[node] = count
            return
        walk(node[0], count)
        walk(node[1], count + 1)

    walk(tree, 0)
    return out


def mirror_sign(tree, tilde):
    """The exchange sign between the Koszul-signed denotation
    and the signless mirror evaluation: exponent
    sum_{i<j} tilde_i tilde_j + sum_i tilde_i P_i + (k + 1).

    tilde: dict or list of Z2 tilde-degrees indexed by leaf label."""

    def t(i):
        return tilde[i] & 1

    ls = leaves(tree)
    k = len(ls)
    P = right_branch_counts(tree)
    exp = (k + 1) & 1
    for a in range(len(ls)):
        for b in range(a + 1, len(ls)):
            exp ^= t(ls[a]) & t(ls[b])
    for i in ls:
        exp ^= t(i) & (P[i] & 1)
    return -1 if exp else 1


def denote(tree, dec, inputs):
    """Koszul-signed denotation.  dec must provide:

      leaf(i, state) / leaf_parity(i)
      edge(lo, hi, state) / edge_parity  -- applied on internal edges
      vertex(lo, mid, hi, s1, s2)        -- r2, signs of its own included
      root(state)
      tilde(i)                           -- tilde degree of input i

    inputs: dict leaf label -> state.
    """
    sign = [1]

    def go(node, is_top):
        if isinstance(node, int):
            return dec.leaf(node, inputs[node]), dec.leaf_parity(node) & 1, [node]
        s1, p1, l1 = go(node[0], False)
        s2, p2, l2 = go(node[1], False)
        if p2 & 1:
            crossed = sum(dec.tilde(i) for i in l1) & 1
            if crossed:
                sign[0] = -sign[0]
        lo, mid, hi = l1[0], l1[-1], l2[-1]
        out = dec.vertex(lo, mid, hi, s1, s2)
        parity = (p1 + p2 + 1) & 1
        if not is_top:
            out = dec.edge(lo, hi, out)
            parity = (parity + dec.edge_parity) & 1
        return out, parity, l1 + l2

    state, _, _ = go(tree, True)
    state = dec.root(state)
    if sign[0] == -1:
        return {k: -v for k, v in state.items()}
    return state


def mirror_eval(tree, dec, inputs):
    """Signless evaluation of the mirrored decoration on the reversed
    inputs.  dec must additionally provide mu2(lo, mid, hi, a, b) which
    is the plain composition product (first argument composed after the
    second); no Koszul signs are applied anywhere."""

    def go(node, is_top):
        if isinstance(node, int):
            return dec.leaf(node, inputs[node])
        ls = leaves(node[0])
        lo, mid, hi = ls[0], ls[-1], leaves(node[1])[-1]
        a = go(node[1], False)
        b = go(node[0], False)
        out = dec.mu2(lo, mid, hi, a, b)
        if not is_top:
            out = dec.edge(lo, hi, out)
        return out

    return dec.root(go(tree, True))
