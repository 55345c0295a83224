"""Time-domain values of the rational SME kernel transforms
K1(z) = K1_0 z (z + beta) / p(z) and K0(z) = K0_0 z (z + alpha_s) / p(z),
p(z) = z^3 + mu z^2 + nu z + gamma, by high-precision Talbot inversion.
Writes ../fixtures/laplace_oracle.csv."""

import os

from mpmath import mp, mpf, sqrt, invertlaplace, nstr

mp.dps = 60

BETA, MU, NU, GAMMA, K1_0 = mpf("45.9675"), mpf("46.4375"), mpf("21.6505"), mpf("106.1616"), mpf("1.1665e-3")
LAM = BETA - MU
ALPHA_S = BETA + LAM / 4
K0_0 = sqrt(K1_0)


def p(z):
    return ((z + MU) * z + NU) * z + GAMMA


def k1(z):
    return K1_0 * z * (z + BETA) / p(z)


def k0(z):
    return K0_0 * z * (z + ALPHA_S) / p(z)


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    out = os.path.join(here, "..", "fixtures", "laplace_oracle.csv")
    times = ["0.01", "0.05", "0.1", "0.25", "0.5", "1", "2", "3.5", "5", "7.5", "10", "15", "20", "25", "30"]
    with open(out, "w") as f:
        f.write("t,k0,k1\n")
        for ts in times:
            t = mpf(ts)
            a = invertlaplace(k0, t, method="talbot", degree=120)
            b = invertlaplace(k1, t, method="talbot", degree=120)
            f.write(f"{ts},{nstr(a, 22, min_fixed=0, max_fixed=0)},{nstr(b, 22, min_fixed=0, max_fixed=0)}\n")


if __name__ == "__main__":
    main()
