"""Compiled vs numpy backends on the hot loops.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Prints best-of-N
wall time per kernel and problem size, plus the largest deviation between
the two backends.
"""
import timeit

import click
import numpy as np

from relmeas import _accel
from relmeas.core import GridSpec
from relmeas.measurement import gaussian_kernel


def _cases(n_modes):
    rng = np.random.default_rng(0)
    grid = GridSpec(n_modes, 0.05 * n_modes, 1.0)
    c = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
    xs = rng.uniform(-grid.extent / 2, grid.extent / 2, 256)
    f = rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)
    rh2 = gaussian_kernel(grid, 0.5).rhohat() ** 2
    return {
        "nudft (256 points)": lambda b: b.nudft(c, grid.p, xs),
        "gram_diagonal": lambda b: b.gram_diagonal(grid.energy, rh2, grid.extent),
        "lattice_convolve": lambda b: b.lattice_convolve(f, c),
    }


@click.command()
@click.option("--sizes", default="256,1024,4096", show_default=True, help="Comma-separated n_modes.")
@click.option("--repeat", default=3, show_default=True, type=click.IntRange(min=1))
def main(sizes, repeat):
    py = _accel.backend("python")
    try:
        cy = _accel.backend("cython")
    except ImportError:
        raise click.ClickException("compiled extension not built; run `pip install -e .` first")
    click.echo(f"{'kernel':<20} {'n_modes':>8} {'cython [s]':>12} {'numpy [s]':>12} {'speedup':>8} {'max dev':>10}")
    for n in (int(s) for s in sizes.split(",")):
        for name, fn in _cases(n).items():
            t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=repeat))
            t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=repeat))
            dev = float(np.max(np.abs(fn(cy) - fn(py))))
            click.echo(f"{name:<20} {n:>8d} {t_cy:>12.4g} {t_py:>12.4g} {t_py / t_cy:>8.2f} {dev:>10.2e}")


if __name__ == "__main__":
    main()
