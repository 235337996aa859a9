"""V2G demo under zone caps: all zones / CBD only / Suburb only, eta in {none, 0.6, 0.3, 0}.

    python scripts/run_cap_sweep.py [--out demo_sweep-out] [--jobs N] [--mode v2g|uni]
"""

import argparse

from gridsched.cli import data_path
from gridsched.sweep import SweepSpec, read_summary, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_sweep-out")
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--mode", default="v2g", choices=["uni", "v2g"])
    args = ap.parse_args()
    spec = SweepSpec.load(data_path("demo_sweep.json"))
    spec.output_dir = args.out
    spec.overrides["direction_mode"] = args.mode
    rows = read_summary(run_sweep(spec, jobs=args.jobs))
    zones = [c[3:] for c in rows[0] if c.startswith("mu_")]
    print(f"{'constrained':<12}{'eta':>6}" + "".join(f"{'mu ' + z:>12}" for z in zones) + f"{'cost':>10}  status")
    for r in rows:
        eta = r["eta"] or "none"
        if r["status"] != "ok":
            print(f"{r['constrained_zones']:<12}{eta:>6}  {r['status']}: {r['message']}")
            continue
        mu = "".join(f"{float(r['mu_' + z]):>12.1f}" for z in zones)
        print(f"{r['constrained_zones']:<12}{eta:>6}{mu}{float(r['total_cost']):>10.1f}  ok")


if __name__ == "__main__":
    main()
