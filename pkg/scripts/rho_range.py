"""Range of Spearman's rho reachable by diagonal models in each family.

For the Haar family the largest admissible diagonal parameter is 1 and rho
approaches one as the level grows. For the trigonometric family the largest
admissible parameter is located by bisection on the validation verdict.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

from phicopula.basis import make_haar_family, make_trig_family
from phicopula.copula import VALID, diagonal_model, validate
from phicopula.dependence import spearman_rho


@dataclass
class Config:
    max_haar_levels: int = 6
    max_harmonics: int = 4
    bisection_steps: int = 30
    resolution: int = 512


def largest_valid_theta(family, cfg: Config) -> float:
    lo, hi = 0.0, 1.0
    for _ in range(cfg.bisection_steps):
        mid = 0.5 * (lo + hi)
        if validate(diagonal_model(family, mid), cfg.resolution).verdict == VALID:
            lo = mid
        else:
            hi = mid
    return lo


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--max-haar-levels", type=int, default=Config.max_haar_levels)
    parser.add_argument("--max-harmonics", type=int, default=Config.max_harmonics)
    args = parser.parse_args(argv)
    cfg = Config(max_haar_levels=args.max_haar_levels, max_harmonics=args.max_harmonics)

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("family", "size", "theta_max", "rho_max"))
    for levels in range(1, cfg.max_haar_levels + 1):
        fam = make_haar_family(levels)
        writer.writerow((fam.label, fam.size, 1.0, spearman_rho(diagonal_model(fam, 1.0))))
    for harmonics in range(1, cfg.max_harmonics + 1):
        fam = make_trig_family(harmonics)
        theta = largest_valid_theta(fam, cfg)
        writer.writerow((fam.label, fam.size, theta, spearman_rho(diagonal_model(fam, theta))))


if __name__ == "__main__":
    main()
