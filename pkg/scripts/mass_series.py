"""Mass-perturbation coefficients as the fine level grows: sequences, differences, limits, envelopes."""
import argparse
from dataclasses import dataclass

from levyren.effective import mass_coefficient_limit, partition_numbers
from levyren.harness import emit_results, parse_number


@dataclass
class MassConfig:
    n: int = 0
    alpha: str = "1"
    d: int = 1
    k_max: int = 4
    m_max: int = 6
    out: str = "results/scripts"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(MassConfig()).items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=type(default), default=default)
    cfg = MassConfig(**vars(p.parse_args()))
    records = []
    for k in range(1, cfg.k_max + 1):
        rep = mass_coefficient_limit(cfg.n, k, parse_number(cfg.alpha), cfg.d, cfg.m_max)
        pc = partition_numbers(k)
        print(f"k={k} limit~{rep.limit:.6g} envelope {rep.envelope:.4g} monotone {rep.monotone_decay} "
              f"Bell {pc.stirling_sum} p(k) {pc.integer_partitions}")
        print("   differences", " ".join(f"{x:+.3e}" for x in rep.differences))
        for m, v in enumerate(rep.values, start=1):
            records.append({"k": k, "m": m, "value": v, "limit": rep.limit, "monotone_decay": rep.monotone_decay})
    emit_results(records, ["k", "m", "value", "limit", "monotone_decay"], cfg.out, "mass_series")


if __name__ == "__main__":
    main()
