"""Run the three fundamental-identity verifiers over the built-in census.

Each structure is checked symbolically (direct residuals), through the
Lie-derivative criterion, and numerically (decomposability plus involutivity).
The three routes share no code, so agreement is a real cross-check.
"""

from nambulab.gallery import census
from nambulab.nambu import fi_battery


def main():
    for item in census():
        reps = fi_battery(item.structure, family="quad")
        verdicts = " ".join(f"{r.check}={r.verdict}" for r in reps)
        print(f"{item.name:24s} expected={item.expected['fi']:4s} {verdicts}")
        for r in reps:
            if r.witnesses:
                print(f"    witness ({r.check}): {r.witnesses[0]}")
                break


if __name__ == "__main__":
    main()
