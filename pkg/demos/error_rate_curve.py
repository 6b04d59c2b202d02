"""Impersonation error rate versus pulse intensity.

Prints the closed-form curve p_error(mu * T) as an ASCII chart and spot
checks a few points with the Monte Carlo estimator. Brighter pulses let
the attacker discriminate the four key states unambiguously more often,
so her induced error rate falls from the pure-guess 0.5 toward zero.
"""

import numpy as np

from sqss import error_curve, monte_carlo_p_error, p_error_closed_form

WIDTH = 56


def main() -> None:
    points = error_curve([round(0.5 * i, 10) for i in range(25)])

    print("closed form: error rate Eve induces when she impersonates Alice")
    print()
    for pt in points:
        bar = "#" * round(pt.p_error / 0.5 * WIDTH)
        print(f"  mu*T = {pt.mu_t:5.1f}  {pt.p_error:.4f}  |{bar}")
    print()

    rng = np.random.default_rng(2)
    print("Monte Carlo spot checks (200k rounds each):")
    for lam in (0.5, 3.0, 6.0, 10.0):
        closed = p_error_closed_form(lam, 1.0)
        est = monte_carlo_p_error(lam, 1.0, 200_000, rng)
        sigmas = est.sigma_distance(closed)
        print(
            f"  mu*T = {lam:5.1f}: closed {closed:.4f},"
            f" simulated {est.mean:.4f} +/- {est.std_error:.4f}"
            f"  ({sigmas:.2f} sigma apart)"
        )


if __name__ == "__main__":
    main()
