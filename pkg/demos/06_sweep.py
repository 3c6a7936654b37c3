"""Parameter sweeps: a temperature x word-limit grid with normalized columns.

Under the mock provider the grid is flat by design (the mock ignores
temperature), which makes the plumbing easy to eyeball. Against a live
endpoint the same table is how you hunt for the generation sweet spot.

    python demos/06_sweep.py
"""
from __future__ import annotations

import tempfile
from pathlib import Path

from dotforest.cli import SweepSpec, run_sweep, sweep_table
from dotforest.corpus import generate_synthetic, save_corpus
from dotforest.pipeline import RunConfig


def main() -> None:
    dataset = Path(tempfile.mkdtemp(prefix="demo-sweep-")) / "corpus"
    save_corpus(generate_synthetic(seed=7, n_relevant=8, n_noise=4), dataset)

    config = RunConfig(dataset=dataset, seed=0, out_dir=None)
    spec = SweepSpec(
        temperatures=[0.2, 0.7, 1.2],
        word_limits=[60, 100],
        repeats=1,
    )
    rows = run_sweep(config, spec)
    print(sweep_table(rows), end="")
    print()
    print(f"{len(rows)} cells; every metric column also gets a min-max")
    print("normalized twin (norm_*) for cross-metric comparison plots.")
    print()
    print("the same sweep from a shell:")
    print(
        "  dotforest sweep --dataset corpus/ --out sweep/"
        " --temperatures 0.2,0.7,1.2 --word-limits 60,100"
    )


if __name__ == "__main__":
    main()
