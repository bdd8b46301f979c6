"""Independent reference computations used by the tests.

Nothing here goes through the package's algebra code paths: tables are
turned into dense integer arrays and the axioms, signs and ranks are
recomputed from scratch."""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations

import numpy as np


# -- BGA axioms on dense tensors ---------------------------------------------


def dense_tables(names, bidegrees, unit, product, partial, delbar):
    """Integer tensors ``L*M``, ``L*P``, ``L*Q`` (``L`` clears all denominators)."""
    from math import lcm

    n = len(names)
    entries = [Fraction(c) for terms in product.values() for _, c in terms]
    for table in (partial, delbar):
        entries += [Fraction(c) for terms in (table or {}).values() for _, c in terms]
    L = lcm(1, *(e.denominator for e in entries))
    M = np.zeros((n, n, n), dtype=np.int64)
    for (i, j), terms in product.items():
        for k, c in terms:
            M[i, j, k] += int(Fraction(c) * L)
    P = np.zeros((n, n), dtype=np.int64)
    Q = np.zeros((n, n), dtype=np.int64)
    for table, mat in ((partial, P), (delbar, Q)):
        for i, terms in (table or {}).items():
            for k, c in terms:
                mat[k, i] += int(Fraction(c) * L)  # column i = image of b_i
    return M, P, Q, L


def bga_violated(names, bidegrees, unit, product, partial, delbar) -> bool:
    """True iff some BGA axiom fails (dense recomputation)."""
    n = len(names)
    M, P, Q, L = dense_tables(names, bidegrees, unit, product, partial, delbar)
    bd = [tuple(b) for b in bidegrees]
    deg = np.array([p + q for p, q in bd])

    if bd[unit] != (0, 0):
        return True
    for i, j, k in zip(*np.nonzero(M)):
        if bd[k] != (bd[i][0] + bd[j][0], bd[i][1] + bd[j][1]):
            return True
    for mat, (dp, dq) in ((P, (1, 0)), (Q, (0, 1))):
        for k, i in zip(*np.nonzero(mat)):
            if bd[k] != (bd[i][0] + dp, bd[i][1] + dq):
                return True
    eye = L * np.eye(n, dtype=np.int64)
    if (M[unit] != eye).any() or (M[:, unit, :] != eye).any():
        return True
    sgn = (-1) ** np.outer(deg, deg)
    if (M != sgn[:, :, None] * np.transpose(M, (1, 0, 2))).any():
        return True
    # (b_i b_j) b_k = sum_m M[i,j,m] M[m,k,:];  b_i (b_j b_k) = sum_m M[j,k,m] M[i,m,:]
    left = np.einsum("ijm,mkr->ijkr", M, M)
    right = np.einsum("jkm,imr->ijkr", M, M)
    if (left != right).any():
        return True
    if (P @ P).any() or (Q @ Q).any() or (P @ Q + Q @ P).any():
        return True
    par = (-1) ** deg
    for D in (P, Q):
        # D(b_i b_j) = D(b_i) b_j + (-1)^|i| b_i D(b_j)
        lhs = np.einsum("ijm,rm->ijr", M, D)
        t1 = np.einsum("mi,mjr->ijr", D, M)
        t2 = np.einsum("mj,imr->ijr", D, M) * par[:, None, None]
        if (lhs != t1 + t2).any():
            return True
    return False


# -- signs --------------------------------------------------------------------


def koszul_brute(images, degrees) -> int:
    """Sort the word v_sigma(1) ... v_sigma(n) by adjacent swaps; each swap of
    v, w contributes -(-1)^(|v||w|) in the exterior power."""
    word = [(s, degrees[s]) for s in images]
    sign = 1
    changed = True
    while changed:
        changed = False
        for a in range(len(word) - 1):
            if word[a][0] > word[a + 1][0]:
                d1, d2 = word[a][1], word[a + 1][1]
                sign *= -((-1) ** (d1 * d2))
                word[a], word[a + 1] = word[a + 1], word[a]
                changed = True
    return sign


def all_perms(n):
    return [tuple(p) for p in permutations(range(n))]


# -- exact linear algebra -----------------------------------------------------


def fraction_rank(rows) -> int:
    A = [[Fraction(v) for v in r] for r in rows]
    if not A:
        return 0
    m, n = len(A), len(A[0])
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        r += 1
        if r == m:
            break
    return r


def trace_bracket_rank(C) -> int:
    """Rank of (A, B) -> Tr(C [A, B]) on 2x2 matrices, from plain arithmetic."""
    C = np.array(C, dtype=object)
    units = []
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2), dtype=object)
            E[...] = 0
            E[i, j] = 1
            units.append(E)
    rows = [[np.trace(C.dot(A.dot(B) - B.dot(A))) for B in units] for A in units]
    return fraction_rank(rows)


# -- seeded single-entry mutations --------------------------------------------


def mutate(tables: dict, rng) -> tuple[dict, str]:
    """Change one coefficient of one product or differential entry."""
    n = len(tables["names"])
    t = {
        "names": list(tables["names"]),
        "bidegrees": list(tables["bidegrees"]),
        "unit": tables["unit"],
        "product": {k: list(v) for k, v in tables["product"].items()},
        "partial": {k: list(v) for k, v in tables["partial"].items()},
        "delbar": {k: list(v) for k, v in tables["delbar"].items()},
    }
    which = rng.choice(("product", "product", "partial", "delbar"))
    key = (rng.randrange(n), rng.randrange(n)) if which == "product" else rng.randrange(n)
    k = rng.randrange(n)
    terms = dict(t[which].get(key, []))
    old = terms.get(k, 0)
    new = old + rng.choice((-2, -1, 1, 2, Fraction(1, 2)))
    if rng.random() < 0.3 and old:
        new = -old
    terms[k] = new
    t[which][key] = [(kk, c) for kk, c in terms.items() if c]
    return t, f"{which}{key}->{k}: {old} -> {new}"


def violating_mutations(models, count: int, seed: int = 0):
    """``count`` seeded mutations (over the given BGAs) that the dense oracle
    says break an axiom, plus the non-violating ones met on the way."""
    import random

    rng = random.Random(f"mutations|{seed}")
    bad, harmless = [], []
    attempts = 0
    while len(bad) < count:
        attempts += 1
        if attempts > 50 * count:
            raise RuntimeError("could not generate enough violating mutations")
        B = rng.choice(models)
        t, label = mutate(B.tables(), rng)
        args = (t["names"], t["bidegrees"], t["unit"], t["product"], t["partial"], t["delbar"])
        (bad if bga_violated(*args) else harmless).append((B.label, label, t))
    return bad, harmless
