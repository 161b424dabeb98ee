"""Phase budget for every preset next to the quoted values."""
import math

from freefall.interferometer import QUOTED_VALUES, preset_budget


def main():
    print(f"{'preset':18s} {'theta0/pi':>12s} {'quoted':>8s} {'theta_vx2/pi':>14s} {'quoted':>8s}")
    for name, (q0, q2) in QUOTED_VALUES.items():
        _, b = preset_budget(name)
        print(
            f"{name:18s} {b.theta0 / math.pi:12.4g} {q0 if q0 else '-':>8} "
            f"{b.theta_vx2 / math.pi:14.4g} {q2:>8g}"
        )


if __name__ == "__main__":
    main()
