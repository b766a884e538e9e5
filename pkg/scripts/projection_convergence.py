"""Projection of reference copulas onto Haar families of increasing size.

Square-integrable targets get the full table (L2 error, both rho values and
their gap, and the gap bound). Targets that are not square integrable, such
as Clayton, only get the rho columns, since their L2 error is infinite.
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

from phicopula.copula import new_model
from phicopula.dependence import spearman_rho, spearman_rho_quadrature
from phicopula.descriptors import family_for_size
from phicopula.errors import NotSquareIntegrableError
from phicopula.projection import check_square_integrable, convergence_study, rho_gap_bound, t_phi
from phicopula.reference import parse_reference


@dataclass
class Config:
    targets: list = field(default_factory=lambda: ["frank:3", "fgm:1", "clayton:0.5"])
    sizes: list = field(default_factory=lambda: [2, 4, 8, 16, 32])


def rho_only_rows(target, sizes):
    rho_target = spearman_rho_quadrature(target)
    for p in sizes:
        fam = family_for_size("haar", p)
        rho_model = spearman_rho(new_model(fam, t_phi(target, fam), atol=1e-8))
        yield p, float("inf"), rho_model, rho_target, abs(rho_model - rho_target), rho_gap_bound(fam)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--targets", default=",".join(Config().targets))
    parser.add_argument("--sizes", default=",".join(map(str, Config().sizes)))
    args = parser.parse_args(argv)
    cfg = Config(targets=args.targets.split(","), sizes=[int(s) for s in args.sizes.split(",")])

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(("target", "p", "l2_error", "rho_model", "rho_target", "rho_gap", "gap_bound_factor"))
    for label in cfg.targets:
        target = parse_reference(label)
        try:
            check_square_integrable(target)
        except NotSquareIntegrableError:
            rows = rho_only_rows(target, cfg.sizes)
        else:
            study = convergence_study(target, lambda p: family_for_size("haar", p), cfg.sizes)
            rows = ((r.p, r.l2_error, r.rho_model, r.rho_target, r.rho_gap, rho_gap_bound(family_for_size("haar", r.p)))
                    for r in study)
        for row in rows:
            writer.writerow((label, *row))


if __name__ == "__main__":
    main()
