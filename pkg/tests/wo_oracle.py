"""Independent rank oracle for WO_q: builds the complex from scratch with plain tuples."""
import itertools

import sympy as sp


def _c_monomials(q):
    out = []
    for exps in itertools.product(*[range(2 * q // (2 * i) + 1) for i in range(1, q + 1)]):
        deg = sum(2 * i * e for i, e in zip(range(1, q + 1), exps))
        if deg <= 2 * q:
            out.append((exps, deg))
    return out


def basis(q):
    hs = [j for j in range(1, q + 1) if j % 2 == 1]
    out = []
    for r in range(len(hs) + 1):
        for H in itertools.combinations(hs, r):
            for exps, cdeg in _c_monomials(q):
                out.append((H, exps, cdeg + sum(2 * j - 1 for j in H)))
    return out


def d(elem, q):
    H, exps, _ = elem
    out = {}
    for pos, j in enumerate(H):
        new_exps = list(exps)
        new_exps[j - 1] += 1
        if sum(2 * i * e for i, e in zip(range(1, q + 1), new_exps)) > 2 * q:
            continue
        rest = H[:pos] + H[pos + 1:]
        key = (rest, tuple(new_exps))
        out[key] = out.get(key, 0) + (-1) ** pos
    return out


def betti(q):
    B = basis(q)
    by_deg = {}
    for b in B:
        by_deg.setdefault(b[2], []).append(b)
    top = max(by_deg)
    result = []
    for n in range(top + 1):
        here = by_deg.get(n, [])
        above = by_deg.get(n + 1, [])
        below = by_deg.get(n - 1, [])
        idx_above = {(b[0], b[1]): r for r, b in enumerate(above)}
        idx_here = {(b[0], b[1]): r for r, b in enumerate(here)}
        D = sp.zeros(len(above), len(here))
        for c, b in enumerate(here):
            for key, v in d(b, q).items():
                D[idx_above[key], c] += v
        E = sp.zeros(len(here), len(below))
        for c, b in enumerate(below):
            for key, v in d(b, q).items():
                E[idx_here[key], c] += v
        rank_out = D.rank() if above and here else 0
        rank_in = E.rank() if below and here else 0
        result.append(len(here) - rank_out - rank_in)
    return tuple(result)


if __name__ == "__main__":
    for q in (1, 2, 3):
        print(q, betti(q))
