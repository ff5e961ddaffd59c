"""Independent reference values for the functional and statistics tests.

Evaluates the closed forms at 40-digit precision with mpmath and the Welch
test with scipy. The printed values are frozen into the Rust tests; rerun
this script only to audit them.
"""

import random

import mpmath as mp
import numpy as np
from scipy import stats

mp.mp.dps = 40
pi = mp.pi
third = mp.mpf(1) / 3


def slater(ru, rd):
    cx = mp.mpf(3) / 4 * (3 / pi) ** third
    return -cx * mp.cbrt(2) * (mp.mpf(ru) ** (4 * third) + mp.mpf(rd) ** (4 * third))


VWN5 = {
    "para": (mp.mpf("0.0310907"), mp.mpf("-0.10498"), mp.mpf("3.72744"), mp.mpf("12.9352")),
    "ferro": (mp.mpf("0.01554535"), mp.mpf("-0.32500"), mp.mpf("7.06042"), mp.mpf("18.0578")),
    "alpha": (-1 / (6 * pi**2), mp.mpf("-0.0047584"), mp.mpf("1.13107"), mp.mpf("13.0045")),
}
VWN_RPA = {
    "para": (mp.mpf("0.0310907"), mp.mpf("-0.409286"), mp.mpf("13.0720"), mp.mpf("42.7198")),
    "ferro": (mp.mpf("0.01554535"), mp.mpf("-0.743294"), mp.mpf("20.1231"), mp.mpf("101.578")),
    "alpha": (-1 / (6 * pi**2), mp.mpf("-0.228344"), mp.mpf("1.06835"), mp.mpf("11.4813")),
}


def vwn_eps(params, rs):
    a, x0, b, c = params
    x = mp.sqrt(rs)
    big_x = lambda t: t * t + b * t + c
    q = mp.sqrt(4 * c - b * b)
    at = mp.atan(q / (2 * x + b))
    return a * (
        mp.log(x * x / big_x(x))
        + 2 * b / q * at
        - b * x0 / big_x(x0) * (mp.log((x - x0) ** 2 / big_x(x)) + 2 * (b + 2 * x0) / q * at)
    )


def vwn(ru, rd, params):
    ru, rd = mp.mpf(ru), mp.mpf(rd)
    rho = ru + rd
    rs = (3 / (4 * pi * rho)) ** third
    zeta = (ru - rd) / rho
    f = ((1 + zeta) ** (4 * third) + (1 - zeta) ** (4 * third) - 2) / (2 ** (4 * third) - 2)
    fpp0 = mp.mpf(4) / (9 * (mp.cbrt(2) - 1))
    ep = vwn_eps(params["para"], rs)
    ef = vwn_eps(params["ferro"], rs)
    ac = vwn_eps(params["alpha"], rs)
    eps = ep + ac * f / fpp0 * (1 - zeta**4) + (ef - ep) * f * zeta**4
    return rho * eps


def b88(rs, gs):
    rs, gs = mp.mpf(rs), mp.mpf(gs)
    beta = mp.mpf("0.0042")
    r43 = rs ** (4 * third)
    x = mp.sqrt(gs) / r43
    lda = -mp.mpf(3) / 2 * (3 / (4 * pi)) ** third * r43
    return lda - beta * r43 * x * x / (1 + 6 * beta * x * mp.asinh(x))


def lyp(ra, rb, ga, gb, gt):
    ra, rb, ga, gb, gt = map(mp.mpf, (ra, rb, ga, gb, gt))
    a, b, c, d = mp.mpf("0.04918"), mp.mpf("0.132"), mp.mpf("0.2533"), mp.mpf("0.349")
    rho = ra + rb
    rm = rho ** (-third)
    omega = mp.exp(-c * rm) / (1 + d * rm) * rho ** (-mp.mpf(11) / 3)
    delta = c * rm + d * rm / (1 + d * rm)
    cf = mp.mpf(3) / 10 * (3 * pi**2) ** (2 * third)
    t1 = -a * 4 / (1 + d * rm) * ra * rb / rho
    inner = (
        2 ** (mp.mpf(11) / 3) * cf * (ra ** (mp.mpf(8) / 3) + rb ** (mp.mpf(8) / 3))
        + (mp.mpf(47) / 18 - mp.mpf(7) / 18 * delta) * gt
        - (mp.mpf(5) / 2 - delta / 18) * (ga + gb)
        - (delta - 11) / 9 * (ra / rho * ga + rb / rho * gb)
    )
    t2 = -a * b * omega * (
        ra * rb * inner
        - mp.mpf(2) / 3 * rho**2 * gt
        + (mp.mpf(2) / 3 * rho**2 - ra**2) * gb
        + (mp.mpf(2) / 3 * rho**2 - rb**2) * ga
    )
    return t1 + t2


def show(label, value):
    print(f"{label} = {mp.nstr(value, 20)}")


show("slater(0.5,0.5)", slater(0.5, 0.5))
for ru, rd in [(0.5, 0.5), (0.3, 0.1), (0.7, 0.0), (1e-3, 2e-3), (12.0, 9.0)]:
    show(f"vwn5({ru},{rd})", vwn(ru, rd, VWN5))
    show(f"vwn_rpa({ru},{rd})", vwn(ru, rd, VWN_RPA))
for rs, gs in [(0.3, 0.05), (0.01, 1e-4), (2.0, 3.5)]:
    show(f"b88({rs},{gs})", b88(rs, gs))
for args in [
    (0.5, 0.5, 0.1, 0.1, 0.4),
    (0.3, 0.2, 0.05, 0.02, 0.12),
    (0.02, 0.01, 0.001, 0.0004, 0.0025),
    (1.7, 0.9, 2.0, 0.8, 5.1),
]:
    show(f"lyp{args}", lyp(*args))
show("tanh(1)", mp.tanh(1))
show("log(1e-4)", mp.log(mp.mpf("1e-4")))

print()
res = stats.ttest_ind([1, 2, 3, 4, 5], [2, 3, 4, 5, 6], equal_var=False)
print("welch [1..5] vs [2..6]:", float(res.statistic), float(res.df), float(res.pvalue))

rng = random.Random(20240917)
print("welch pairs (a, b, t, df, p):")
for k in range(20):
    na, nb = rng.randint(2, 12), rng.randint(2, 12)
    ma, mb = rng.uniform(-2, 2), rng.uniform(-2, 2)
    sa, sb = rng.uniform(0.2, 3.0), rng.uniform(0.2, 3.0)
    a = [round(rng.gauss(ma, sa), 6) for _ in range(na)]
    b = [round(rng.gauss(mb, sb), 6) for _ in range(nb)]
    r = stats.ttest_ind(a, b, equal_var=False)
    print(f"    ({a!r}, {b!r}, {float(r.statistic)!r}, {float(r.df)!r}, {float(r.pvalue)!r}),")
