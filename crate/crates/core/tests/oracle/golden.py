"""Oracle curves for the figure sweeps, written to tests/golden/oracle/.

Every rate comes from the entanglement-based construction in oracle.py,
evaluated with mpmath; nothing here calls the Rust code. Maxima over chi_D
use a coarse scan followed by golden-section search, roots use bisection.

Run: python3 crates/core/tests/oracle/golden.py   (takes several minutes)
"""
import os
import sys

import mpmath as mp

sys.path.insert(0, os.path.dirname(__file__))
import oracle as o  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "golden", "oracle")
CHI_D_CAP = mp.mpf(50)


def rate(prep, meas, v, t, chic, chid=0):
    """RR key rate. Squeezed: Alice homodynes A; coherent: Alice heterodynes A."""
    if prep == "squeezed":
        if meas == "heterodyne":
            chid = 1
        return o.k_rate(v, t, chic, chid)
    g = o.gamma_ab(v, t, chic)
    if meas == "homodyne":
        bob_rows = [(2, mp.mpf(1), 0)]
        cond = o.homodyne(g, 1, 0)
    else:
        h = 1 / mp.sqrt(2)
        bob_rows = [(2, h, mp.mpf(1) / 2), (3, h, mp.mpf(1) / 2)]
        cond = o.heterodyne(g, 1)
    h = 1 / mp.sqrt(2)
    rows = [(0, h, mp.mpf(1) / 2), (1, h, mp.mpf(1) / 2)] + bob_rows
    n = len(rows)
    s = mp.zeros(n, n)
    for i, (qi, wi, ni) in enumerate(rows):
        for j, (qj, wj, _) in enumerate(rows):
            s[i, j] = wi * wj * g[qi, qj]
        s[i, i] += ni
    sa = mp.matrix([[s[i, j] for j in range(2)] for i in range(2)])
    sb = mp.matrix([[s[i, j] for j in range(2, n)] for i in range(2, n)])
    i_ab = mp.log(mp.det(sa) * mp.det(sb) / mp.det(s), 2) / 2
    return i_ab - (o.entropy(g) - o.entropy(cond))


def maximize(f, lo, hi, scan=24, tol=mp.mpf("1e-6")):
    """Max of f on [lo, hi]: quadratic-spaced scan, then golden section."""
    grid = [lo + (hi - lo) * (mp.mpf(k) / scan) ** 2 for k in range(scan + 1)]
    vals = [f(x) for x in grid]
    k = max(range(len(grid)), key=lambda i: vals[i])
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, scan)]
    r = (mp.sqrt(5) - 1) / 2
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    if vals[k] > fx:
        return grid[k], vals[k]
    return x, fx


def eps_max(k_of_eps, tol=mp.mpf("1e-8")):
    if k_of_eps(mp.mpf(0)) <= 0:
        return mp.mpf(0)
    hi = mp.mpf("0.5")
    while k_of_eps(hi) > 0:
        hi *= 2
    return o.bisect(k_of_eps, mp.mpf(0), hi, tol)


def large_v(f, rel=mp.mpf("1e-3")):
    v = mp.mpf(100000)
    prev = f(v)
    while True:
        v *= 2
        cur = f(v)
        if abs(cur - prev) <= rel * max(abs(cur), abs(prev)):
            return cur
        prev = cur


def write(name, header, rows):
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, name), "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(mp.nstr(x, 17, strip_zeros=False) if not isinstance(x, str) else x for x in row) + "\n")
    print("wrote", name, flush=True)


def fixed_v_curves():
    mp.mp.dps = 25
    v, eps = 40, mp.mpf("0.5")
    rows = []
    for k in range(51):
        db = mp.mpf(k) / 2
        t = o.t_of(db)
        chic = o.chi_line(t, eps)
        k0 = o.k_rate(v, t, chic, 0)
        k1 = o.k_rate(v, t, chic, 1)
        chid, kopt = maximize(lambda c: o.k_rate(v, t, chic, c), mp.mpf(0), CHI_D_CAP)
        rows.append([db, k0, k1, kopt, chid])
        print(" ", mp.nstr(db, 4), mp.nstr(kopt, 10), mp.nstr(chid, 8), flush=True)
    write("rates_eps0.5_V40.csv", ["loss_db", "K_chiD0", "K_chiD1", "K_opt", "chi_d_opt"], rows)


def tolerance_curves():
    mp.mp.dps = 30
    presets = [
        ("squeezed", "homodyne"),
        ("squeezed", "heterodyne"),
        ("coherent", "homodyne"),
        ("coherent", "heterodyne"),
    ]
    rows = []
    for db in [0, 5, 10, 15, 20]:
        t = o.t_of(db)
        row = [mp.mpf(db)]
        for prep, meas in presets:
            row.append(large_v(lambda v: eps_max(lambda e: rate(prep, meas, v, t, o.chi_line(t, e)))))
        # The optimal scheme keeps a key iff some chi_D does.
        row.append(large_v(lambda v: maximize(
            lambda c: eps_max(lambda e: o.k_rate(v, t, o.chi_line(t, e), c)),
            mp.mpf(0), CHI_D_CAP, scan=12, tol=mp.mpf("1e-4"))[1]))
        rows.append(row)
        print(" ", [mp.nstr(x, 10) for x in row], flush=True)
    write("tolerance_largeV.csv",
          ["loss_db", "eps_sq_hom", "eps_new", "eps_coh_hom", "eps_coh_het", "eps_opt"], rows)


if __name__ == "__main__":
    which = sys.argv[1:] or ["rates", "tolerance"]
    if "rates" in which:
        fixed_v_curves()
    if "tolerance" in which:
        tolerance_curves()
