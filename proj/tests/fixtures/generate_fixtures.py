#!/usr/bin/env python3
"""Regenerates the extended-precision golden values frozen into the C++
tests (solvers_test.cpp, diagnostics_test.cpp, schedules_test.cpp).

Independent transcription of the coefficient formulas and the energy
decomposition, evaluated at 40 decimal digits with mpmath. Run and diff
against the constants in the tests when touching those formulas.
"""

from mpmath import mp, mpf, sqrt, power

mp.dps = 40


def nadtr_coeffs(k, a, c, s, p, q):
    k, a, c, s, p, q = map(mpf, (k, a, c, s, p, q))
    km1 = k - 1
    cs = c * s
    b_num = power(k, p) * (a * power(km1, q) - s) * (
        a * power(power(km1, p) - cs, 2) * power(km1, q) - 2 * s * power(km1, 2 * p))
    b_den = a * a * power(km1, p + q) * power(k, q) * (power(km1, p) - cs) * (power(k, p) - cs)
    c_num = 2 * s * s * power(k, p) * (
        power(km1, p) * power(k, p) - c * power(km1, p)
        - a * c * power(km1, q) * power(k, p) + a * c * power(km1, q + p))
    c_den = a * a * power(km1, q) * power(k, q) * (power(km1, p) - cs) * power(power(k, p) - cs, 2)
    return b_num / b_den, c_num / c_den


def show(name, value, digits=25):
    print(f"{name} = {mp.nstr(value, digits)}")


def two_term_fixtures():
    print("# two-term method coefficients (solvers_test)")
    s, p, q = mpf(1) / 2, mpf("1.95"), mpf("0.99")
    b2, c2 = nadtr_coeffs(2, 1, 1, s, p, q)
    show("B2", b2)
    show("C2", c2)
    y2 = 1 + b2 * 0 - c2 * 1
    show("x3", y2 - s * y2 - (s / power(2, p)) * y2)
    b3, c3 = nadtr_coeffs(3, 1, 1, s, p, q)
    show("B3", b3)
    show("C3", c3)
    y3 = 1 + b3 * mpf("0.2") - c3 * 1
    show("x4", y3 - s * y3 - (s / power(3, p)) * y3)
    b5, c5 = nadtr_coeffs(5, mpf("1.3"), mpf("0.7"), mpf("0.4"), mpf("1.2"), q)
    show("B5", b5)
    show("C5", c5)
    y5 = mpf("-0.3") + b5 * (mpf("-0.3") - mpf("0.5")) - c5 * mpf("-0.3")
    show("x6", y5 - mpf("0.4") * y5 - (mpf("0.7") * mpf("0.4") / power(5, mpf("1.2"))) * y5)


def energy_fixture():
    print("\n# energy decomposition on f(x) = (x-1)^2/2 (diagnostics_test)")
    s, delta, lam, q, a, b = mpf(1) / 4, mpf(2), mpf(1), mpf(1), mpf(1), mpf(2)
    eps = lambda k: mpf(1) / k
    grad = lambda x: x - 1

    x = [mpf("0.3"), mpf("0.3")]
    for k in range(1, 4):
        e = eps(k)
        m = 1 - delta * sqrt(s * e)
        y = x[k] + m * (x[k] - x[k - 1])
        x.append(y - s * (grad(y) + e * y))
    show("x3", x[3], 22)
    show("x4", x[4], 22)

    curve = lambda k: 1 / (1 + eps(k))
    phi = lambda k, v: (v - 1) ** 2 / 2 + eps(k) / 2 * v * v

    def energy(k):
        e = eps(k)
        rk = sqrt(s * e)
        dk = 1 - delta * rk
        tau = lam * rk
        alpha = (1 + q) * s / (dk * (1 - s * e))
        beta = q * dk
        epot = alpha * (phi(k, x[k]) - phi(k, curve(k)))
        mixed = tau * (x[k] - curve(k - 1)) + (x[k] - x[k - 1])
        emix = mixed * mixed / 2
        ekin = beta / 2 * (x[k] - x[k - 1]) ** 2
        mu = sqrt(eps(k) / eps(k + 1)) - 1 + (delta / dk - lam) * rk
        de_km1 = eps(k) - eps(k - 1)
        de_k = eps(k + 1) - eps(k)
        theta = (a + b) * tau * de_km1 ** 2 / eps(k - 1) ** 2 - alpha * (1 + mu) * de_k
        return epot, emix, ekin, mu, theta, alpha, beta

    for k in (2, 3):
        epot, emix, ekin, mu, theta, alpha, beta = energy(k)
        print(f"k={k}:")
        for name, v in [("e_pot", epot), ("e_mix", emix), ("e_kin", ekin),
                        ("mu_next", mu), ("theta", theta), ("alpha", alpha), ("beta", beta)]:
            show(f"  {name}", v, 22)
    e2 = energy(2)
    e3 = energy(3)
    big_e2 = e2[0] + e2[1] + e2[2]
    big_e3 = e3[0] + e3[1] + e3[2]
    show("audit lhs(k=2)", big_e3 - big_e2 + e2[3] * big_e3, 22)
    show("audit rhs(k=2)", e2[4] / 2, 22)


def misc_fixtures():
    print("\n# damping defaults (schedules_test)")
    show("delta(p=1, s=1/4)", power(2, mpf(1) / 2) / sqrt(mpf(1) / 4))
    show("delta(p=1.95, s=1/2.2)", power(2, mpf("1.95") / 2) * sqrt(mpf("2.2")))


if __name__ == "__main__":
    two_term_fixtures()
    energy_fixture()
    misc_fixtures()
