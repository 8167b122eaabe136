"""Compare the compiled and pure-Python episode kernels on the 4x4 scenarios.

    python benchmarks/bench_kernels.py --episodes 5000 --repeat 3

Prints a CSV of best-of-``repeat`` wall times and checks that both backends
produce the same Q-table.
"""
import time

import click
import numpy as np

from supervised_rl import _backend
from supervised_rl.environment import GRID_ACTIONS, GridSpec, grid_world
from supervised_rl.learner import LearnConfig, train
from supervised_rl.specs import forbid_factors, only_immediately_after


@click.command()
@click.option("--episodes", default=5000, show_default=True)
@click.option("--repeat", default=3, show_default=True)
@click.option("--size", default=4, show_default=True, help="Grid side length.")
def main(episodes, repeat, size):
    env = grid_world(GridSpec(size, size))
    specs = {
        "none": None,
        "h1": forbid_factors(GRID_ACTIONS, [("a2", "a2")]),
        "h2": only_immediately_after(GRID_ACTIONS, ("a3",), "a2"),
    }
    backends = sorted(_backend.KERNELS)
    click.echo("spec,backend,episodes,steps,seconds,steps_per_second,speedup")
    for name, spec in specs.items():
        config = LearnConfig(episodes=episodes, seed=0)
        timings, tables = {}, {}
        for backend in backends:
            best = np.inf
            for _ in range(repeat):
                t0 = time.perf_counter()
                result = train(env, spec, config, keep_traces=False, backend=backend)
                best = min(best, time.perf_counter() - t0)
            timings[backend] = best
            tables[backend] = result
        steps = int(tables[backends[0]].lengths.sum())
        for backend in backends:
            speedup = timings["python"] / timings[backend]
            click.echo(f"{name},{backend},{episodes},{steps},{timings[backend]:.4f},"
                       f"{steps / timings[backend]:.0f},{speedup:.1f}")
        if len(backends) > 1 and not np.array_equal(tables["python"].q.values, tables["cython"].q.values):
            raise click.ClickException(f"backends disagree on spec {name}")


if __name__ == "__main__":
    main()
