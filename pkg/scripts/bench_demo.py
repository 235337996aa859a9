"""Time generation, model build and solve for the bundled demo in both modes."""

import time

from gridsched import io
from gridsched.cli import data_path
from gridsched.generator import generate
from gridsched.lp import solve
from gridsched.schedule import build_model


def main():
    t0 = time.perf_counter()
    scenario = generate(io.generator_from_dict(io.load_json(data_path("demo_generator.json")))).scenario
    print(f"generate: {time.perf_counter() - t0:.2f}s")
    for mode in ("uni", "v2g"):
        config = scenario.replace(direction_mode=mode)
        t0 = time.perf_counter()
        lp, _ = build_model(config)
        t1 = time.perf_counter()
        sol = solve(lp)
        t2 = time.perf_counter()
        print(f"{mode}: {lp.n} vars, {lp.m} rows, build {t1 - t0:.2f}s, solve {t2 - t1:.2f}s, "
              f"{sol.iterations} iterations, objective {sol.objective_value:.3f}")


if __name__ == "__main__":
    main()
