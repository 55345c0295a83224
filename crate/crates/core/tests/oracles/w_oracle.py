"""Reference values of W(alpha, beta, t) from the defining Bessel series in
high-precision arithmetic. Writes ../fixtures/w_oracle.csv."""

import os

from mpmath import mp, mpf, gamma, factorial, besselj, sqrt, pi, nstr

mp.dps = 80


def w_series(alpha, beta, t):
    alpha, beta, t = mpf(alpha), mpf(beta), mpf(t)
    if t == 0:
        return mpf(1)
    x = beta * t
    total = mpf(0)
    n = 0
    small = 0
    while True:
        nu = mpf(n) / 2 + 1
        term = gamma(mpf(n + 1) / 2) / factorial(n) * (-alpha * t) ** n * (2 / x) ** nu * besselj(nu, x)
        total += term
        if n > alpha * t and abs(term) < mpf(10) ** (-40) * max(abs(total), mpf(10) ** -30):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        n += 1
    return total / sqrt(pi)


def main():
    values = [0.5, 0.875, 1.25, 1.625, 2.0]
    times = [0.0, 0.37, 1.0, 2.5, 5.0, 7.3, 10.0, 13.7, 17.3, 20.0, 25.0, 30.0]
    extra = [(1.4111, 1.4259), (1.3935, 1.3951), (1.1953, 1.7843)]
    here = os.path.dirname(os.path.abspath(__file__))
    out = os.path.join(here, "..", "fixtures", "w_oracle.csv")
    with open(out, "w") as f:
        f.write("alpha,beta,t,w\n")
        pairs = [(a, b) for a in values for b in values] + extra
        for a, b in pairs:
            for t in times:
                f.write(f"{a},{b},{t},{nstr(w_series(a, b, t), 25, min_fixed=0, max_fixed=0)}\n")


if __name__ == "__main__":
    main()
