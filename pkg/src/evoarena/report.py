"""Render figures from a run's CSV output, next to the CSV itself.

The CSV stays the data contract; these plots are the quick-look view of a
campaign: per-enemy energy curves for baseline sweeps and the two-line
energy trace (player vs enemy across generations) for coevolution runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _read_csv(path: Path) -> list[dict]:
    with path.open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def plot_baseline(csv_path: Path) -> list[Path]:
    """One figure per enemy: best player energy across generations, every
    seed as its own line."""
    rows = _read_csv(csv_path)
    out_paths: list[Path] = []
    enemies = sorted({int(r["enemy_id"]) for r in rows})
    for enemy_id in enemies:
        fig, ax = plt.subplots(figsize=(7, 4))
        seeds = sorted({int(r["seed"]) for r in rows if int(r["enemy_id"]) == enemy_id})
        for seed in seeds:
            series = [
                (int(r["generation"]), float(r["best_player_energy"]))
                for r in rows
                if int(r["enemy_id"]) == enemy_id and int(r["seed"]) == seed
            ]
            series.sort()
            ax.plot([g for g, _ in series], [e for _, e in series],
                    label=f"seed {seed}", alpha=0.8)
        ax.set_xlabel("generation")
        ax.set_ylabel("best player energy")
        ax.set_ylim(-5, 105)
        ax.set_title(f"baseline vs archetype {enemy_id}")
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
        out = csv_path.with_name(f"baseline_enemy{enemy_id}.png")
        fig.tight_layout()
        fig.savefig(out, dpi=120)
        plt.close(fig)
        out_paths.append(out)
    return out_paths


def plot_coevolution(csv_path: Path) -> list[Path]:
    """Best-vs-best final energies of both sides across generations."""
    rows = _read_csv(csv_path)
    gens = [int(r["generation"]) for r in rows]
    p_energy = [float(r["best_player_energy"]) for r in rows]
    e_energy = [float(r["best_enemy_energy"]) for r in rows]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(gens, p_energy, label="player", color="tab:blue")
    ax.plot(gens, e_energy, label="enemy", color="tab:red")
    for r in rows:
        if r["evolving_side"] == "enemy":
            ax.axvspan(int(r["generation"]) - 0.5, int(r["generation"]) + 0.5,
                       color="tab:red", alpha=0.06, lw=0)
    ax.set_xlabel("generation")
    ax.set_ylabel("final energy (best vs best)")
    ax.set_ylim(-5, 105)
    ax.set_title("coevolution energy trace (shaded: enemy evolving)")
    ax.legend()
    ax.grid(alpha=0.3)
    out = csv_path.with_name("coevolution.png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return [out]


def render_run_dir(run_dir: str | Path) -> list[Path]:
    """Render every known CSV in a run directory; returns written files."""
    run_dir = Path(run_dir)
    written: list[Path] = []
    baseline = run_dir / "baseline.csv"
    coevo = run_dir / "coevolution.csv"
    if baseline.exists():
        written += plot_baseline(baseline)
    if coevo.exists():
        written += plot_coevolution(coevo)
    if not written:
        raise FileNotFoundError(f"no baseline.csv or coevolution.csv under {run_dir}")
    return written
