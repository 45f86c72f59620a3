"""Independent high-precision reference values frozen into the C++ tests.

Run with `python3 tests/oracles/oracles.py`; every number printed here is
pasted into tests/reference_values.hpp.
"""

import mpmath as mp

mp.mp.dps = 40


def cir_kappa(a, s):
    return (mp.sqrt(a * a + 2 * s * s) - a) / (s * s)


def cir_bond(theta, a, s, r0, T):
    g = mp.sqrt(a * a + 2 * s * s)
    e = mp.exp(g * T) - 1
    den = (g + a) * e + 2 * g
    B = 2 * e / den
    A = (2 * g * mp.exp((a + g) * T / 2) / den) ** (2 * theta / (s * s))
    return A * mp.exp(-B * r0)


def cir_density(theta, b, s, r0, t, r):
    c = 2 * b / (s * s * (1 - mp.exp(-b * t)))
    q = 2 * theta / (s * s) - 1
    u = c * r0 * mp.exp(-b * t)
    v = c * r
    return c * mp.exp(-u - v) * (v / u) ** (q / 2) * mp.besseli(q, 2 * mp.sqrt(u * v))


def care_newton(a, B, G, iters=80):
    """Kleinman iteration on 2VaV - B^T V - V B - G = 0 from a stabilizing start."""
    d = a.rows
    # Shift so the closed loop of V0 is Hurwitz.
    V = mp.eye(d) * 10
    for _ in range(iters):
        A = B - 2 * a * V  # closed loop
        # Solve A^T X + X A = -(G + 2 V a V) (Lyapunov) by vectorization.
        rhs = -(G + 2 * V * a * V)
        n = d * d
        M = mp.zeros(n, n)
        for i in range(d):
            for j in range(d):
                row = i * d + j
                for k in range(d):
                    M[row, k * d + j] += A[k, i]
                    M[row, i * d + k] += A[k, j]
        vec = mp.matrix([rhs[i, j] for i in range(d) for j in range(d)])
        x = mp.lu_solve(M, vec)
        V = mp.matrix(d, d)
        for i in range(d):
            for j in range(d):
                V[i, j] = x[i * d + j]
    return V


def qtsm_preset():
    b = mp.matrix([0.01, 0.02])
    B = mp.matrix([[-1.0, 0.2], [0.0, -0.5]])
    s = mp.matrix([[0.2, 0.0], [0.05, 0.3]])
    beta = mp.mpf(0.01)
    alpha = mp.matrix([0.1, 0.1])
    G = mp.matrix([[1.0, 0.2], [0.2, 0.5]])
    return b, B, s, beta, alpha, G


def qtsm_pair(b, B, s, beta, alpha, G):
    a = s * s.T
    V = care_newton(a, B, G)
    u = mp.lu_solve(2 * V * a - B.T, 2 * V * b + alpha)
    lam = beta - (u.T * a * u)[0] / 2 + sum((a * V)[i, i] for i in range(a.rows)) + (u.T * b)[0]
    return V, u, lam


def heston_lambda(mu, gamma, beta, delta, rho, alpha):
    theta = alpha * (1 - alpha) * gamma / 2
    a = beta - rho * alpha * delta
    s = delta * mp.sqrt(2 * alpha * (1 - alpha)) / 2
    return -alpha * mu + theta * cir_kappa(a, s)


def three_halves_ell(a, s, alpha, L):
    c = mp.mpf(1) / 2 + a / (s * s)
    return mp.sqrt(c * c + alpha * L * (L - 1)) - c


def main():
    f = lambda x: mp.nstr(x, 17)
    print("gbm_forward", f(100 * mp.exp(mp.mpf("0.03") * 5)))
    k = cir_kappa(mp.mpf("0.5"), mp.mpf("0.2"))
    print("cir_kappa", f(k))
    print("cir_bond_T5", f(cir_bond(mp.mpf("0.1"), mp.mpf("0.5"), mp.mpf("0.2"), mp.mpf("0.04"), 5)))
    print("cir_bond_T1", f(cir_bond(mp.mpf("0.1"), mp.mpf("0.5"), mp.mpf("0.2"), mp.mpf("0.04"), 1)))
    lam = lambda th, a, s: th * cir_kappa(a, s)
    p = [mp.mpf("0.1"), mp.mpf("0.5"), mp.mpf("0.2")]
    print("cir_limit_a", f(-mp.diff(lambda x: lam(p[0], x, p[2]), p[1])))
    print("cir_limit_sigma", f(-mp.diff(lambda x: lam(p[0], p[1], x), p[2])))
    print("cir_density_t1_r0.05", f(cir_density(p[0], p[1], p[2], mp.mpf("0.04"), 1, mp.mpf("0.05"))))
    print("cir_density_P_t1_r0.05",
          f(cir_density(p[0], mp.sqrt(p[1] ** 2 + 2 * p[2] ** 2), p[2], mp.mpf("0.04"), 1, mp.mpf("0.05"))))
    print("bessel_i_2.5_3", f(mp.besseli(mp.mpf("2.5"), 3)))
    print("bessel_i_0.7_40", f(mp.besseli(mp.mpf("0.7"), 40)))
    print("log_bessel_i_4_1000", f(mp.log(mp.besseli(4, 1000))))
    print("log_gamma_0.3", f(mp.loggamma(mp.mpf("0.3"))))
    print("log_gamma_150.5", f(mp.loggamma(mp.mpf("150.5"))))

    ell = three_halves_ell(mp.mpf(1), mp.mpf("0.5"), mp.mpf("0.5"), mp.mpf(2))
    print("ell_32", f(ell))
    print("lambda_32", f(2 * ell))
    for name, idx in (("a", 1), ("sigma", 2)):
        args = [mp.mpf(1), mp.mpf("0.5")]
        def l32(x, idx=idx):
            aa, ss = args
            if idx == 1:
                aa = x
            else:
                ss = x
            return 2 * three_halves_ell(aa, ss, mp.mpf("0.5"), mp.mpf(2))
        print("limit_32_" + name, f(-mp.diff(l32, args[idx - 1])))

    b, B, s, beta, alpha, G = qtsm_preset()
    V, u, lamq = qtsm_pair(b, B, s, beta, alpha, G)
    print("qtsm_V", [f(V[i, j]) for i in range(2) for j in range(2)])
    print("qtsm_u", [f(u[i]) for i in range(2)])
    print("qtsm_lambda", f(lamq))
    xi = mp.matrix([0.1, 0.2])
    dl = -u - 2 * V * xi
    print("qtsm_delta_limit", [f(dl[i]) for i in range(2)])
    def lam_b0(x):
        bb = b.copy()
        bb[0] = x
        return qtsm_pair(bb, B, s, beta, alpha, G)[2]
    print("qtsm_limit_b0", f(-mp.diff(lam_b0, b[0])))

    hp = dict(mu=mp.mpf("0.08"), gamma=mp.mpf("0.09"), beta=mp.mpf(2), delta=mp.mpf("0.3"), rho=mp.mpf("-0.5"))
    al = mp.mpf("0.5")
    for name in ("mu", "gamma", "beta", "delta", "rho"):
        def hl(x, name=name):
            q = dict(hp)
            q[name] = x
            return heston_lambda(q["mu"], q["gamma"], q["beta"], q["delta"], q["rho"], al)
        print("heston_limit_" + name, f(-mp.diff(hl, hp[name])))
    a_red = hp["beta"] - hp["rho"] * al * hp["delta"]
    s_red = hp["delta"] * mp.sqrt(2 * al * (1 - al)) / 2
    print("heston_limit_v0", f(-cir_kappa(a_red, s_red) * al * (1 - al) / 2))
    print("heston_limit_x0", f(al / 1))
    print("scalar_care_V", f(mp.sqrt(mp.mpf(1) / 2)))


if __name__ == "__main__":
    main()
