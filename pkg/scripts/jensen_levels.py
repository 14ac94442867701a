"""E[exp(-coupling L_ren)] for the Gamma mass term at several levels, against its quadrature lower bound."""
import argparse
from dataclasses import dataclass

from levyren.effective import jensen_bounds_check
from levyren.harness import emit_results, parse_range


@dataclass
class JensenConfig:
    levels: str = "0..2"
    alpha: float = 1.0
    coupling: float = 1.0
    samples: int = 10 ** 6
    seed: int = 0
    out: str = "results/scripts"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(JensenConfig()).items():
        p.add_argument("--" + name, type=type(default), default=default)
    cfg = JensenConfig(**vars(p.parse_args()))
    records = []
    for n in parse_range(cfg.levels):
        rep = jensen_bounds_check(n, cfg.alpha, cfg.samples, cfg.seed, coupling=cfg.coupling)
        print(f"n={n} lower {rep.lower:.5f} estimate {rep.estimate:.5f} se {rep.se:.1e} "
              f"gap {rep.gap_in_se:.1f} se inside={rep.inside}")
        records.append({"n": n, "lower": rep.lower, "estimate": rep.estimate, "se": rep.se, "inside": rep.inside})
    emit_results(records, ["n", "lower", "estimate", "se", "inside"], cfg.out, "jensen_levels")


if __name__ == "__main__":
    main()
