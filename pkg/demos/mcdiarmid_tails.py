"""Empirical tails of a uniform sample mean against the sub-gamma bounds.

Run: python3 demos/mcdiarmid_tails.py
The second table plants a rare large jump, which only the extended bound covers.
"""
from ermconc.core import RngSpec
from ermconc.montecarlo import McDiarmidScenario


def main():
    plain = McDiarmidScenario(50).run(10_000, [0.02, 0.05, 0.1, 0.15, 0.2], RngSpec(3))
    ext = McDiarmidScenario(50, jump=10.0, p_bad=0.01).run(10_000, [0.1, 0.2, 0.3, 0.4, 0.5], RngSpec(3))
    for label, tab in (("bounded difference", plain), ("with bad set", ext)):
        print(f"{label}: passed={tab.passed}")
        for t, emp, bound, _ in tab.rows():
            print(f"  t={t:.2f}  P(f - Ef > t)={emp:.4f}  bound={bound:.4f}")


if __name__ == "__main__":
    main()
