"""Fitted growth of each diagram class of the renormalized kinetic energy against its power count."""
import argparse
import math
from dataclasses import dataclass

from levyren.effective import divergence_scan
from levyren.harness import emit_results, parse_number, parse_range


@dataclass
class ScanConfig:
    d: int = 2
    n: int = 0
    alpha: str = "1"
    orders: str = "1..2"
    m_range: str = "3..6"
    out: str = "results/scripts"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    for name, default in vars(ScanConfig()).items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=type(default), default=default)
    cfg = ScanConfig(**vars(p.parse_args()))
    records = []
    for k in parse_range(cfg.orders):
        rows = divergence_scan(cfg.n, parse_number(cfg.alpha), cfg.d, k, parse_range(cfg.m_range))
        records += [dict(r.as_record(), k=k) for r in rows]
        seen = set()
        print(f"k={k}")
        for r in rows:
            if (r.cls, r.ell) in seen:
                continue
            seen.add((r.cls, r.ell))
            slope = "-" if r.slope is None else f"{r.slope:8.4f}"
            target = r.predicted * math.log(2)
            print(f"  {r.cls:>8} l={r.ell}  slope {slope}  target {target:8.4f}  {r.verdict}")
    cols = ["k", "class", "ell", "m", "value", "fitted_slope", "predicted_exponent", "verdict"]
    emit_results(records, cols, cfg.out, "divergence_table")


if __name__ == "__main__":
    main()
