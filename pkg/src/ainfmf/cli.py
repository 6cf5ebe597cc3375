"""Batch front door: JSON problem specs in, JSON reports out.

A problem spec is a JSON object:

    {
      "variables": ["x"],
      "potential": "1/5*x^5",
      "t_sequence": ["x^4"],          # optional, default: partials of W
      "objects": [
        {"label": "X", "pairs": [["x^2", "1/5*x^3"]]},
        {"label": "Y", "pairs": [["x^3", "1/5*x^2"]]}
      ],
      "homotopies": {"X": {"lam": [[[1, 0, "1"]]],
                            "F": [["0"]], "G": [["1"]]}},   # optional
      "cap": 3,
      "order": "grevlex",             # optional
      "commands": ["basis", {"command": "verify-ainf", "level": 2}]
    }

Subcommands: groebner basis gamma expand vertices rho verify-ainf
sdr-verify e1 clifford kstab feynman, plus `run` (execute the spec's own
command list) and `pin` (regression-compare a report against a golden
file).  Exit codes: 0 all verifications pass, 1 verification failure,
2 input error, 3 cap insufficiency.  Every number in a report is an
exact rational rendered "p/q".
"""

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from itertools import product

from .ainfmodel import (
    DecompositionInvalid,
    Model,
    _ModelDecoration,
    cohomology,
    induced_map,
    kstab_minimal,
)
from .linalg import mat_mul
from .mfcat import HomotopySet, koszul_mf
from .normalorder import FeynmanBackend, vertex_catalog
from .normalorder import CapExceeded as TreeCapExceeded
from .poly import parse_poly
from .quotient import CapExceeded, QuotientBasis, gamma_tensor, t_adic_expand
from .sdrcore import IdentityViolation
from .treealg import enumerate_binary, mirror_eval

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2
EXIT_CAP = 3

COMMANDS = [
    "groebner", "basis", "gamma", "expand", "vertices", "rho",
    "verify-ainf", "sdr-verify", "e1", "clifford", "kstab", "feynman",
]


class InputError(Exception):
    pass


def frac(x):
    x = Fraction(x)
    return "%d/%d" % (x.numerator, x.denominator)


class Problem:
    """Validated problem spec plus the model built from it."""

    def __init__(self, raw, cap_override=None, presentation=None):
        if not isinstance(raw, dict):
            raise InputError("spec must be a JSON object")
        try:
            self.varnames = list(raw["variables"])
            self.nvars = len(self.varnames)
            if not self.nvars:
                raise InputError("no variables")
            self.W = self._poly(raw["potential"])
        except KeyError as exc:
            raise InputError("missing field %s" % exc) from exc
        tseq = raw.get("t_sequence")
        if tseq is None:
            self.tseq = [self.W.diff(i) for i in range(self.nvars)]
        else:
            self.tseq = [self._poly(s) for s in tseq]
        self.order = raw.get("order", "grevlex")
        self.cap = cap_override if cap_override is not None else raw.get("cap", 3)
        if not isinstance(self.cap, int) or self.cap < 0:
            raise InputError("cap must be a non-negative integer")
        try:
            self.qb = QuotientBasis(self.tseq, self.order)
        except ValueError as exc:
            raise InputError("bad t-sequence: %s" % exc) from exc
        self.labels = []
        objects = []
        for desc in raw.get("objects", []):
            label = desc.get("label", "M%d" % len(objects))
            if label in self.labels:
                raise InputError("duplicate object label %r" % label)
            pairs = [(self._poly(f), self._poly(g)) for f, g in desc["pairs"]]
            try:
                objects.append(koszul_mf(pairs, self.W, label))
            except Exception as exc:
                raise InputError("object %r: %s" % (label, exc)) from exc
            self.labels.append(label)
        homotopies = {}
        for label, desc in (raw.get("homotopies") or {}).items():
            if label not in self.labels:
                raise InputError("homotopy for unknown object %r" % label)
            lam = [
                {(int(i), int(j)): self._poly(p) for i, j, p in entries}
                for entries in desc["lam"]
            ]
            F = [[self._poly(p) for p in row] for row in desc["F"]]
            G = [[self._poly(p) for p in row] for row in desc["G"]]
            homotopies[self.labels.index(label)] = HomotopySet(lam, F=F, G=G)
        presentations = {}
        if presentation == "nu":
            k = len(objects)
            presentations = {(i, j): "nu" for i in range(k) for j in range(k)}
        self.model = None
        if objects:
            try:
                self.model = Model(objects, self.qb, self.cap,
                                   homotopies=homotopies or None,
                                   presentations=presentations or None)
            except ValueError as exc:
                raise InputError(str(exc)) from exc

    def _poly(self, text):
        try:
            return parse_poly(str(text), self.nvars, self.varnames)
        except ValueError as exc:
            raise InputError("cannot parse %r: %s" % (text, exc)) from exc

    def need_model(self):
        if self.model is None:
            raise InputError("this command needs at least one object")
        return self.model

    def obj_index(self, label):
        if isinstance(label, int):
            if 0 <= label < len(self.labels):
                return label
            raise InputError("object index %r out of range" % label)
        if label not in self.labels:
            raise InputError("unknown object label %r" % label)
        return self.labels.index(label)

    def path_indices(self, path):
        return tuple(self.obj_index(p) for p in path)


# ----------------------------------------------------------------------
# command implementations; each returns (result_dict, ok, cap_ok)


def cmd_groebner(prob, args):
    gb = prob.qb.gb
    check = True
    for g, cof in zip(gb.basis, gb.cofactors):
        acc = None
        for h, t in zip(cof, prob.tseq):
            term = h * t
            acc = term if acc is None else acc + term
        if acc != g:
            check = False
    return {
        "basis": [str(g) for g in gb.basis],
        "cofactors_verified": check,
    }, check, True


def cmd_basis(prob, args):
    qb = prob.qb
    rows = []
    for i, mono in enumerate(qb.monomials):
        rows.append({
            "index": i,
            "label": "z%d" % (i + 1),
            "monomial": str(qb.basis_poly(i)),
        })
    return {"dimension": qb.mu, "monomials": rows}, True, True


def cmd_gamma(prob, args):
    cap = int(args.get("cap", prob.cap))
    g = gamma_tensor(prob.qb, cap)
    entries = sorted(
        ([i, j, k, list(d), frac(c)] for (i, j, k, d), c in g.entries.items() if c),
        key=str,
    )
    return {"cap": cap, "entries": entries}, True, True


def cmd_expand(prob, args):
    if "polynomial" not in args:
        raise InputError("expand needs a \"polynomial\" argument")
    r = prob._poly(args["polynomial"])
    cap = int(args.get("cap", prob.cap))
    exp = t_adic_expand(r, prob.qb, cap)
    coeffs = sorted(
        ([i, list(d), frac(c)] for (i, d), c in exp.coefficients.items() if c),
        key=str,
    )
    return {
        "polynomial": str(r),
        "cap": cap,
        "coefficients": coeffs,
        "exact_beyond_cap": exp.exact_beyond_cap,
    }, True, exp.exact_beyond_cap


def _pair_list(prob, args):
    m = prob.need_model()
    if "source" in args or "target" in args:
        s = prob.obj_index(args.get("source", prob.labels[0]))
        t = prob.obj_index(args.get("target", prob.labels[0]))
        return [(s, t)]
    k = len(m.objects)
    return [(s, t) for s in range(k) for t in range(k)]


def cmd_vertices(prob, args):
    m = prob.need_model()
    out = []
    ok = True
    for s, t in _pair_list(prob, args):
        cat = vertex_catalog(m.pair(s, t).arena)
        rows = []
        for row in cat.rows():
            rows.append({
                "vertex": row["vertex"],
                "kind": row["kind"],
                "k": row["k"],
                "ops": [list(op) for op in row["ops"]],
                "poly": row["poly"],
                "coefficient": frac(row["coefficient"])
                if row["coefficient"] is not None else None,
                "shifts": {str(h): list(v) for h, v in (row["shifts"] or {}).items()},
            })
        if cat.notes:
            ok = False
        out.append({
            "source": prob.labels[s],
            "target": prob.labels[t],
            "presentation": m.pair(s, t).presentation,
            "rows": rows,
            "notes": list(cat.notes),
        })
    return {"pairs": out}, ok, True


def cmd_rho(prob, args):
    m = prob.need_model()
    k = int(args.get("k", 2))
    path = prob.path_indices(args.get("path", prob.labels[:1] * (k + 1)))
    if len(path) != k + 1:
        raise InputError("rho needs a path of k + 1 object labels")
    table = m.rho_table(k, path)
    space = m.pair(path[0], path[-1]).arena.space
    spaces = [m.pair(path[i], path[i + 1]).arena.space for i in range(k)]
    entries = []
    for combo in sorted(table, key=str):
        state = {kk: v for kk, v in table[combo].items() if v}
        if not state:
            continue
        entries.append({
            "inputs": [spaces[i].key_label(combo[i]) for i in range(k)],
            "output": {space.key_label(kk): frac(v)
                       for kk, v in sorted(state.items(), key=str)},
        })
    return {"k": k, "path": [prob.labels[p] for p in path],
            "entries": entries}, True, True


def cmd_verify_ainf(prob, args):
    m = prob.need_model()
    level = int(args.get("level", 2))
    forms = tuple(args.get("forms", ("r", "mu")))
    report = m.verify_ainf(level, forms=forms)
    result = {
        "level": level,
        "forms": list(forms),
        "checked": report["checked"],
        "failures": len(report["failures"]),
    }
    if report["failures"]:
        first = report["failures"][0]
        result["first_failure"] = {
            "form": first["form"], "level": first["level"],
            "path": [prob.labels[p] for p in first["path"]],
        }
    return result, report["ok"], True


def cmd_sdr_verify(prob, args):
    m = prob.need_model()
    margin = args.get("margin")
    out = []
    ok = True
    for s, t in _pair_list(prob, args):
        arena = m.pair(s, t).arena
        try:
            rep = arena.sdr_verify(
                margin=int(margin) if margin is not None else None,
                raise_on_failure=False,
            )
        except ZeroDivisionError as exc:
            raise InputError(str(exc)) from exc
        pair_ok = all(v.get("ok") for v in rep["identities"].values())
        ok = ok and pair_ok
        out.append({
            "source": prob.labels[s],
            "target": prob.labels[t],
            "margin": rep["margin"],
            "checked": rep["checked"],
            "identities": {name: bool(v.get("ok"))
                           for name, v in sorted(rep["identities"].items())},
        })
    return {"pairs": out}, ok, True


def cmd_e1(prob, args):
    m = prob.need_model()
    out = []
    ok = True
    for s, t in _pair_list(prob, args):
        coh = cohomology(m, (s, t))
        cliff = m.e1_and_clifford((s, t))
        e1 = induced_map(coh, cliff["E1"])
        idem = mat_mul(e1, e1) == e1
        rank = sum(
            1 for j in range(coh.dim)
            if any(e1[i][j] for i in range(coh.dim))
        )
        ok = ok and idem
        out.append({
            "source": prob.labels[s],
            "target": prob.labels[t],
            "cohomology_dim": coh.dim,
            "idempotent": idem,
            "nonzero_columns": rank,
        })
    return {"pairs": out}, ok, True


def cmd_clifford(prob, args):
    # the Clifford operators induced on cohomology: gamma_i equals the
    # transported class At_i, and E1 factorises as gamma...gamma^dagger
    m = prob.need_model()
    n = prob.qb.n
    out = []
    ok = True
    for s, t in _pair_list(prob, args):
        coh = cohomology(m, (s, t))
        cliff = m.e1_and_clifford((s, t))
        gammas = [induced_map(coh, g) for g in cliff["gamma"]]
        daggers = [induced_map(coh, g) for g in cliff["dagger"]]
        ats = [induced_map(coh, g) for g in cliff["At"]]
        e1 = induced_map(coh, cliff["E1"])
        gamma_is_at = gammas == ats
        prod = None
        for g in reversed(gammas):
            prod = g if prod is None else mat_mul(prod, g)
        for d in daggers:
            prod = mat_mul(prod, d)
        factorised = prod == e1
        pair_ok = gamma_is_at and factorised
        ok = ok and pair_ok
        out.append({
            "source": prob.labels[s],
            "target": prob.labels[t],
            "gamma_equals_At": gamma_is_at,
            "E1_equals_gamma_product": factorised,
        })
    return {"pairs": out}, ok, True


def cmd_kstab(prob, args):
    m = prob.need_model()
    idx = prob.obj_index(args.get("object", prob.labels[0]))
    decomposition = [prob._poly(p) for p in args.get("decomposition", [])]
    level = int(args.get("level", 3))
    try:
        result = kstab_minimal(m, idx, decomposition, level=level)
    except DecompositionInvalid as exc:
        raise InputError("invalid decomposition: %s" % exc) from exc
    ok = bool(result["rho1_zero"] and result["closed"])
    space = m.pair(idx, idx).arena.space
    kernel = [
        {space.key_label(kk): frac(v) for kk, v in sorted(st.items(), key=str)}
        for st in result["kernel"]
    ]
    return {
        "object": prob.labels[idx],
        "level": level,
        "rho1_zero": bool(result["rho1_zero"]),
        "closed": bool(result["closed"]),
        "kernel": kernel,
    }, ok, True


def cmd_feynman(prob, args, threads=1):
    m = prob.need_model()
    k = int(args.get("k", 2))
    path = prob.path_indices(args.get("path", [prob.labels[0]] * (k + 1)))
    if len(path) != k + 1:
        raise InputError("feynman needs a path of k + 1 object labels")
    if prob.cap < k - 2:
        raise TreeCapExceeded(
            "cap %d cannot host the %d internal edges of a %d-leaf tree"
            % (prob.cap, k - 2, k))
    limit = args.get("limit")
    backend = FeynmanBackend(m)
    cores = [m.pair(path[i], path[i + 1]).core_basis() for i in range(k)]
    combos = list(product(*cores))
    if limit is not None:
        combos = combos[: int(limit)]
    trees = enumerate_binary(k)

    def one_tree(T):
        mismatches = 0
        for combo in combos:
            inputs = [{key: Fraction(1)} for key in combo]
            dec = _ModelDecoration(m, path, inputs)
            want = mirror_eval(T, dec, {i + 1: inputs[i] for i in range(k)})
            got = backend.tree_state(T, path, combo)
            want = {kk: v for kk, v in want.items() if v}
            got = {kk: v for kk, v in got.items() if v}
            if got != want:
                mismatches += 1
        return mismatches

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(one_tree, trees))
    else:
        counts = [one_tree(T) for T in trees]
    bad = sum(counts)
    return {
        "k": k,
        "path": [prob.labels[p] for p in path],
        "trees": len(trees),
        "tuples": len(combos),
        "mismatches": bad,
    }, bad == 0, True


DISPATCH = {
    "groebner": cmd_groebner,
    "basis": cmd_basis,
    "gamma": cmd_gamma,
    "expand": cmd_expand,
    "vertices": cmd_vertices,
    "rho": cmd_rho,
    "verify-ainf": cmd_verify_ainf,
    "sdr-verify": cmd_sdr_verify,
    "e1": cmd_e1,
    "clifford": cmd_clifford,
    "kstab": cmd_kstab,
}


def run(raw_spec, commands=None, cap=None, presentation=None, threads=1):
    """Execute a spec.  Returns (report, exit_code)."""
    report = {"results": [], "ok": True, "cap_ok": True, "timing": {}}
    try:
        prob = Problem(raw_spec, cap_override=cap, presentation=presentation)
    except InputError as exc:
        return {"error": str(exc), "ok": False}, EXIT_INPUT
    if commands is None:
        commands = raw_spec.get("commands", [])
    report["spec"] = {
        "variables": prob.varnames,
        "potential": str(prob.W),
        "t_sequence": [str(t) for t in prob.tseq],
        "objects": prob.labels,
        "cap": prob.cap,
        "order": prob.order,
    }
    code = EXIT_OK
    for entry in commands:
        if isinstance(entry, str):
            name, args = entry, {}
        else:
            args = dict(entry)
            name = args.pop("command")
        t0 = time.time()
        try:
            if name == "feynman":
                result, ok, cap_ok = cmd_feynman(prob, args, threads=threads)
            elif name in DISPATCH:
                result, ok, cap_ok = DISPATCH[name](prob, args)
            else:
                raise InputError("unknown command %r" % name)
        except InputError as exc:
            report["results"].append(
                {"command": name, "error": str(exc), "ok": False})
            report["ok"] = False
            return report, EXIT_INPUT
        except (CapExceeded, TreeCapExceeded) as exc:
            report["results"].append(
                {"command": name, "error": "cap insufficient: %s" % exc,
                 "ok": False})
            report["ok"] = False
            report["cap_ok"] = False
            code = EXIT_CAP
            continue
        except IdentityViolation as exc:
            report["results"].append(
                {"command": name, "error": str(exc), "ok": False})
            report["ok"] = False
            code = code or EXIT_VERIFY
            continue
        # integer milliseconds: reports carry no floats anywhere
        report["timing"][name] = int((time.time() - t0) * 1000)
        report["results"].append(
            {"command": name, "result": result, "ok": ok})
        if not cap_ok:
            report["cap_ok"] = False
            code = EXIT_CAP
        if not ok:
            report["ok"] = False
            if code == EXIT_OK:
                code = EXIT_VERIFY
    return report, code


# ----------------------------------------------------------------------
# regression pinning


def canonical(report):
    """Canonical JSON bytes for pinning; timing is dropped because it is
    the one non-deterministic field."""

    def strip(node):
        if isinstance(node, dict):
            return {k: strip(v) for k, v in sorted(node.items())
                    if k != "timing"}
        if isinstance(node, list):
            return [strip(v) for v in node]
        return node

    return json.dumps(strip(report), sort_keys=True, indent=1).encode()


def diff_reports(a, b, prefix=""):
    out = []
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k == "timing":
                continue
            if k not in a:
                out.append("%s/%s: only in golden" % (prefix, k))
            elif k not in b:
                out.append("%s/%s: only in report" % (prefix, k))
            else:
                out += diff_reports(a[k], b[k], "%s/%s" % (prefix, k))
        return out
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            out.append("%s: length %d != %d" % (prefix, len(a), len(b)))
            return out
        for i, (x, y) in enumerate(zip(a, b)):
            out += diff_reports(x, y, "%s[%d]" % (prefix, i))
        return out
    if a != b:
        out.append("%s: %r != %r" % (prefix, a, b))
    return out


def pin(report, golden_path, create=False):
    """Compare a report against a golden file.  Returns a list of
    difference descriptions (empty means identical)."""
    import os

    data = canonical(report)
    if not os.path.exists(golden_path):
        if create:
            with open(golden_path, "wb") as fh:
                fh.write(data)
            return []
        raise InputError("golden file %s does not exist (use --create)"
                         % golden_path)
    with open(golden_path, "rb") as fh:
        golden_bytes = fh.read()
    if golden_bytes == data:
        return []
    try:
        golden = json.loads(golden_bytes)
    except ValueError:
        return ["golden file is not valid JSON"]
    return diff_reports(json.loads(data.decode()), golden) or \
        ["whitespace-only difference; re-pin with --create"]


# ----------------------------------------------------------------------
# entry point


def _load_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError("cannot read %s: %s" % (path, exc)) from exc


def _emit(report, out):
    text = json.dumps(report, indent=1, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    for res in report.get("results", []):
        line = "%-12s %s" % (res["command"],
                             "ok" if res.get("ok") else "FAIL")
        if "error" in res:
            line += "  (%s)" % res["error"]
        print(line, file=sys.stderr)


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="ainfmf",
        description="exact minimal-model computations for Koszul matrix "
                    "factorisations",
    )
    sub = ap.add_subparsers(dest="mode", required=True)

    def add_common(p):
        p.add_argument("spec", help="problem spec JSON file, or - for stdin")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--cap", type=int, help="override the t-degree cap")
        p.add_argument("--presentation", choices=["nu", "rho", "auto"],
                       default="auto")
        p.add_argument("--threads", type=int, default=1)

    add_common(sub.add_parser("run", help="execute the spec's command list"))
    for name in COMMANDS:
        add_common(sub.add_parser(name, help="run the %s command" % name))

    pp = sub.add_parser("pin", help="regression-compare a report")
    pp.add_argument("report", help="report JSON file, or - for stdin")
    pp.add_argument("golden", help="golden file path")
    pp.add_argument("--create", action="store_true",
                    help="write the golden file if missing")

    ns = ap.parse_args(argv)

    if ns.mode == "pin":
        try:
            report = _load_json(ns.report)
            diffs = pin(report, ns.golden, create=ns.create)
        except InputError as exc:
            print("error: %s" % exc, file=sys.stderr)
            return EXIT_INPUT
        for line in diffs:
            print(line)
        return EXIT_VERIFY if diffs else EXIT_OK

    try:
        raw = _load_json(ns.spec)
    except InputError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    presentation = None if ns.presentation == "auto" else ns.presentation
    commands = None
    if ns.mode != "run":
        commands = [e for e in raw.get("commands", [])
                    if (e if isinstance(e, str) else e.get("command")) == ns.mode]
        if not commands:
            commands = [ns.mode]
    report, code = run(raw, commands=commands, cap=ns.cap,
                       presentation=presentation, threads=ns.threads)
    if "error" in report:
        print("error: %s" % report["error"], file=sys.stderr)
        return code
    _emit(report, ns.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
