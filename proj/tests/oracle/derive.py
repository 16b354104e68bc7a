#!/usr/bin/env python3
"""Independent oracle for expected test values.

Values are computed with exact rationals (fractions) or plain float loops written
separately from the C++ code, then emitted as a header the tests include.

    python3 tests/oracle/derive.py > tests/oracle/oracle_values.hpp
    python3 tests/oracle/derive.py --check tests/oracle/oracle_values.hpp
"""
import argparse
import math
import sys
from fractions import Fraction as F


def quadratic_loss(theta, x, mu):
    return F(mu, 4) * sum((F(t) - F(v)) ** 2 for t, v in zip(theta, x))


def quadratic_grad(theta, x, mu):
    return [F(mu, 2) * (F(t) - F(v)) for t, v in zip(theta, x)]


def trimmed_mean(values, trim):
    kept = sorted(values)[trim:len(values) - trim]
    return F(sum(F(v) for v in kept), len(kept))


def lam(n, f):
    return F(6 * f, n - 2 * f) * (1 + F(f, n - 2 * f))


def option2_gamma(t, T, L, mu):
    t0 = -(-T // 2)
    return 1 / (18 * F(L) + max(F(0), F(mu, 6) * (t - t0 + 1)))


def two_phase_gamma(t, a, b, T):
    a, b = F(a), F(b)
    if T <= b / a:
        return 1 / b
    t0 = -(-T // 2)
    return 1 / (b + max(F(0), a / 2 * (t - t0 + 1)))


def two_phase_simulate(a, b, c, d, r0, T):
    """Float recursion r_{t+1} = (1 - a g) r + c g^2 + d g, written independently."""
    t0 = (T + 1) // 2
    r = float(r0)
    for t in range(T):
        if T <= b / a:
            g = 1.0 / b
        else:
            g = 1.0 / (b + max(0.0, 0.5 * a * (t - t0 + 1)))
        r = (1.0 - a * g) * r + c * g * g + d * g
    bound = r0 * math.exp(-a * T / (2.0 * b)) + 18.0 * c / (a * a * T) + 3.0 * d / a
    return r, bound


def derive():
    v = {}
    v["loss_theta2_x0_mu1"] = quadratic_loss([2], [0], 1)
    v["loss_theta11_x00_mu2"] = quadratic_loss([1, 1], [0, 0], 2)
    v["grad_theta2_x0_mu1"] = quadratic_grad([2], [0], 1)[0]
    v["grad_theta0_x4_mu1"] = quadratic_grad([0], [4], 1)[0]
    v["empirical_0_4_loss_at_0"] = (quadratic_loss([0], [0], 1) + quadratic_loss([0], [4], 1)) / 2

    # heterogeneous dirac construction n=5, f=1, zeta=1, mu=1
    n, f, mu = 5, 1, 1
    outlier = 2 * math.sqrt((n - f) / f)
    v["hetero_outlier_point"] = F(outlier)
    means2 = [F(0)] * (n - 2 * f) + [F(outlier)] * f
    theta2 = sum(means2) / len(means2)
    v["hetero_exec2_theta_star"] = theta2
    v["hetero_exec2_q_star"] = sum(quadratic_loss([theta2], [m], mu) for m in means2) / len(means2)
    grads = [quadratic_grad([0], [m], mu)[0] for m in means2]
    gbar = sum(grads) / len(grads)
    v["hetero_exec2_zeta_sq"] = sum((g - gbar) ** 2 for g in grads) / len(grads)
    v["hetero_floor_n5_f1"] = F(f, n - f) * 1 / (4 * F(mu))
    v["four_sources_theta_star"] = F(0 + 0 + 0 + 4, 4)

    v["tm_1_2_3_4_100_trim1"] = trimmed_mean([1, 2, 3, 4, 100], 1)
    v["tm_median_coord0"] = trimmed_mean([0, 5, 9], 1)
    v["tm_median_coord1"] = trimmed_mean([10, 0, 5], 1)
    v["lambda_n5_f1"] = lam(5, 1)
    v["lambda_n10_f2"] = lam(10, 2)
    v["lambda_prime_m10_b2"] = lam(10, 2)
    v["lambda_prime_m100_b10"] = lam(100, 10)

    v["option2_L1_T4_gamma2"] = option2_gamma(2, 4, 1, 1)
    v["option2_L1_T4_gamma3"] = option2_gamma(3, 4, 1, 1)
    v["two_phase_a1_b2_T8_gamma4"] = two_phase_gamma(4, 1, 2, 8)

    v["floor_partial_m10_b2_sigma2"] = F(2 * 2, 4) * F(2, 10 - 2)
    v["pair_spike_n4_f1_T8"] = F(2 * math.sqrt(4 * 8 / 2))
    v["pair_prob_n4_f1_T8"] = F(2 * 1, 4 * 8)
    v["partial_corrupted_m10_b2"] = F(2 * math.sqrt((10 - 2) / 2))
    v["drift_0_2"] = F((1 + 1), 2)

    # D' gradient variance at sigma=mu=1 for n=4, f=1, T=8: (mu^2/4) x^2 p (1-p)
    p = F(1, 16)
    x = F(8)
    v["pair_dprime_sigma_sq"] = F(1, 4) * x * x * p * (1 - p)
    v["pair_dprime_mean"] = x * p

    # Two-phase step-size cells for cross-checking the C++ recursion (float-level agreement).
    cells = [(1.0, 3.0, 1.0, 0.0, 1.0, 100), (0.1, 10.0, 10.0, 1.0, 100.0, 10000),
             (1.0, 2.0, 0.0, 10.0, 0.0, 1000), (0.1, 0.2, 1.0, 1.0, 1.0, 2)]
    return v, [(c, *two_phase_simulate(*c)) for c in cells]


def render():
    values, cells = derive()
    out = ["// Generated by tests/oracle/derive.py; do not edit.", "#pragma once", "",
           "namespace oracle {", ""]
    for name, val in values.items():
        out.append(f"inline constexpr double {name} = {float(val)!r};")
    out += ["", "struct TwoPhaseCell {", "    double a, b, c, d, r0;", "    unsigned T;",
            "    double r_T;", "    double bound;", "};", "",
            "inline constexpr TwoPhaseCell two_phase_cells[] = {"]
    for (a, b, c, d, r0, T), r, bound in cells:
        out.append(f"    {{{a!r}, {b!r}, {c!r}, {d!r}, {r0!r}, {T}, {r!r}, {bound!r}}},")
    out += ["};", "", "}  // namespace oracle", ""]
    return "\n".join(out)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--check", help="compare against an existing header")
    args = parser.parse_args()
    text = render()
    if args.check:
        with open(args.check) as fh:
            if fh.read() != text:
                print(f"{args.check} is stale; regenerate it", file=sys.stderr)
                return 1
        return 0
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
