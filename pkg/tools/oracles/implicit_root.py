"""Oracle: high-precision roots of the drift-implicit step equation.

For the cubic-drift model the backward step solves z + h z^3 = rhs.  This
script computes the unique real root with mpmath bisection at 50 digits,
independently of the package, so the values can be frozen into tests.

Run:  python3 tools/oracles/implicit_root.py
"""

import mpmath as mp

mp.mp.dps = 50

CASES = [
    # (h, rhs) for z + h z^3 = rhs
    ("0.1", "1"),
    ("0.25", "1.5"),
    ("0.25", "-2"),
    ("0.0009765625", "1.25"),  # h = 2^-10
]


def solve(h: str, rhs: str) -> mp.mpf:
    h_, r_ = mp.mpf(h), mp.mpf(rhs)

    def f(z):
        return z + h_ * z**3 - r_

    lo, hi = -abs(r_) - 1, abs(r_) + 1
    assert f(lo) < 0 < f(hi)
    return mp.findroot(f, (lo, hi), solver="bisect", tol=mp.mpf(10) ** -45)


if __name__ == "__main__":
    for h, rhs in CASES:
        z = solve(h, rhs)
        print(f"h={h} rhs={rhs} -> z = {mp.nstr(z, 30)}")
        # residual check
        print(f"  residual {mp.nstr(z + mp.mpf(h) * z ** 3 - mp.mpf(rhs), 5)}")
