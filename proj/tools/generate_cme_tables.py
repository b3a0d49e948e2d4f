#!/usr/bin/env python3
"""Generate the fixed node/weight tables used by the `cme` inversion method.

The kernel is a concentrated (signed) matrix-exponential approximation of the
Dirac delta at 1.  Its Laplace-domain statement: a rational function

    r(z) = sum_k eta_k / (beta_k - z)   ~   exp(z)   on the left half-plane,

with simple poles beta_k placed on the parabolic contour of Trefethen,
Weideman & Schmelzer (Talbot quadratures and rational approximations, BIT
2006), and residues fitted by regularized least squares in high precision
(mpmath) against exp on the negative axis, two half-plane rays, and a
log-spaced far field out to |z| = 1e9.  The resulting inversion rule

    f(t) ~ (1/t) * sum_k Re[ eta_k * F(beta_k / t) ]

is exact for F whose inverse is a linear combination of exp(beta_k tau / t)
and accurate to the kernel sup error (~1e-8 at order 50) for transforms
analytic off the left half-plane.  The contour scale is capped at 32 so the
weights stay below ~1e5 and double-precision evaluation noise stays ~1e-9.

Output: data/cme_tables.json, one entry per supported order (order = number
of nodes).  Run once; the result is committed.
"""

import json
import mpmath as mp


def build(n, scale, lam="1e-12", dps=None):
    if dps is None:
        dps = max(80, n + 50)
    mp.mp.dps = dps
    S = mp.mpf(scale)
    poles = []
    for k in range(n):
        nu = mp.mpf(2 * k + 1 - n) / n   # in (-1,1): every pole has Re > 0
        p = S * mp.pi * (mp.mpf('0.1309') - mp.mpf('0.1194') * nu ** 2
                         + mp.mpc(0, 1) * mp.mpf('0.2500') * nu)
        poles.append(p)

    pts = []
    L = 6 * max(n, scale)
    for j in range(400):
        pts.append(-mp.mpf(j) * mp.mpf(L) / 400)
    for j in range(1, 160):
        rho = mp.mpf(j) * mp.mpf(L) / 160
        pts.append(rho * mp.expjpi(mp.mpf('0.75')))
        pts.append(rho * mp.expjpi(mp.mpf('-0.75')))
    for j in range(120):
        rho = mp.mpf(L) * mp.mpf(10) ** (mp.mpf(j) / 120 * 9)
        pts.append(-rho)
        pts.append(rho * mp.expjpi(mp.mpf('0.75')))
        pts.append(rho * mp.expjpi(mp.mpf('-0.75')))

    m = len(pts)
    A = mp.matrix(m, n)
    b = mp.matrix(m, 1)
    for i, x in enumerate(pts):
        for k in range(n):
            A[i, k] = 1 / (x - poles[k])
        b[i] = mp.e ** x if mp.re(x) > -mp.mpf(5000) else mp.mpf(0)
    AH = A.H
    M = AH * A
    for k in range(n):
        M[k, k] += mp.mpf(lam) ** 2
    c = mp.lu_solve(M, AH * b)

    err = mp.mpf(0)
    for j in range(600):
        x = -mp.mpf(j) * mp.mpf(L + 2 * n) / 600
        r = sum(c[k] / (x - poles[k]) for k in range(n))
        err = max(err, abs(r - mp.e ** x))
    errfar = mp.mpf(0)
    for j in range(200):
        rho = mp.mpf(L) * mp.mpf(10) ** (mp.mpf(j) / 200 * 10)
        for x in (-rho, rho * mp.expjpi(mp.mpf('0.75')),
                  rho * mp.expjpi(mp.mpf('-0.75'))):
            r = sum(c[k] / (x - poles[k]) for k in range(n))
            ex = mp.e ** x if mp.re(x) > -mp.mpf(5000) else mp.mpf(0)
            errfar = max(errfar, abs(r - ex))
    return poles, c, err, errfar


def main():
    orders = [10, 16, 24, 32, 41, 50, 75, 100]
    tables = {}
    for n in orders:
        scale = min(n, 32)
        poles, c, err, errfar = build(n, scale)
        print(f"order {n}: scale={scale} near_err={mp.nstr(err, 5)} "
              f"far_err={mp.nstr(errfar, 5)} "
              f"max|eta|={mp.nstr(max(abs(x) for x in c), 5)}", flush=True)
        nodes = []
        for p, cc in zip(poles, c):
            # e^{st} ~ (1/t) sum c_k/(s - beta_k/t); closing the Bromwich
            # contour to the right picks up -residues, so eta_k = -c_k in
            # f(t) ~ (1/t) sum Re[eta_k F(beta_k/t)]
            nodes.append({
                "beta_re": float(p.real), "beta_im": float(p.imag),
                "eta_re": float(-cc.real), "eta_im": float(-cc.imag),
            })
        nodes.sort(key=lambda d: (d["beta_im"], d["beta_re"]))
        tables[str(n)] = {
            "nodes": nodes,
            "kernel_sup_error": float(err),
            "kernel_far_error": float(errfar),
        }
    out = {
        "comment": "nodes/weights for the cme inversion method; "
                   "see tools/generate_cme_tables.py",
        "format": "f(t) ~ (1/t) * sum_k Re[eta_k * F(beta_k/t)]",
        "orders": tables,
    }
    with open("data/cme_tables.json", "w") as fh:
        json.dump(out, fh, indent=1)
    print("wrote data/cme_tables.json")


if __name__ == "__main__":
    main()
