"""Uni-directional demo under the three price profiles; prints peak/energy ratios and cost.

    python scripts/run_price_profiles.py [--out price_sweep-out] [--jobs N]
"""

import argparse

from gridsched.cli import data_path
from gridsched.sweep import SweepSpec, read_summary, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="price_sweep-out")
    ap.add_argument("--jobs", type=int, default=None)
    args = ap.parse_args()
    spec = SweepSpec.load(data_path("price_sweep.json"))
    spec.output_dir = args.out
    rows = read_summary(run_sweep(spec, jobs=args.jobs))
    zones = [c[3:] for c in rows[0] if c.startswith("mu_")]
    print(f"{'profile':<8}" + "".join(f"{'mu ' + z:>12}" for z in zones)
          + "".join(f"{'xi ' + z:>12}" for z in zones) + f"{'cost':>10}")
    for r in rows:
        mu = "".join(f"{float(r['mu_' + z]):>12.1f}" for z in zones)
        xi = "".join(f"{float(r['xi_' + z]):>12.1f}" for z in zones)
        print(f"{r['price_profile']:<8}{mu}{xi}{float(r['total_cost']):>10.1f}")


if __name__ == "__main__":
    main()
