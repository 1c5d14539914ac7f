"""Campaign execution: baseline sweeps, coevolution runs, single matches.

Writes per-generation CSV results, the best genome per cell, and a replay
of each cell's final best match. Runs are deterministic given the config
and seeds; outputs carry the config hash for provenance, never timestamps,
so a rerun is byte-identical. Long campaigns checkpoint every generation
and resume from the last completed one.
"""

from __future__ import annotations

import logging
import pickle
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional

from . import evaluation
from .config import ExperimentConfig, resolve_output_dir
from .enemies import get_archetype
from .engine import stage_for
from .evaluation import (
    BaselineRow,
    CoevolutionRow,
    FitnessWeights,
    IdleController,
    MatchRecord,
    ScriptedEnemyController,
    as_controller,
    baseline_cell,
    coevolve,
    make_driver,
    run_match,
)
from .nets import genome_from_json, genome_to_json, FixedGenome
from .replay import write_replay
from .seeding import derive_seed

log = logging.getLogger(__name__)

BASELINE_CSV_FIELDS = ("algorithm", "enemy_id", "seed", "generation",
                       "best_fitness", "best_player_energy", "enemy_energy", "duration")
COEVOLUTION_CSV_FIELDS = ("generation", "evolving_side",
                          "best_player_energy", "best_enemy_energy")


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _write_csv(path: Path, fields: tuple[str, ...], rows: list, header_line: str) -> None:
    lines = [header_line, ",".join(fields)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, f)) for f in fields))
    path.write_text("\n".join(lines) + "\n")


def _provenance(cfg: ExperimentConfig, master_seed: int) -> str:
    return f"# config_hash={cfg.config_hash()} master_seed={master_seed}"


class _Pool:
    """Optional process pool; plain map when workers <= 1."""

    def __init__(self, workers: int):
        self.workers = workers
        self._executor: Optional[ProcessPoolExecutor] = None

    def __enter__(self):
        if self.workers > 1:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc):
        if self._executor is not None:
            self._executor.shutdown()
        return False

    @property
    def map(self) -> Callable:
        if self._executor is None:
            return map
        executor = self._executor

        def pooled(fn, items):
            return executor.map(fn, items, chunksize=4)

        return pooled


def _save_genome(path: Path, genome) -> None:
    if not isinstance(genome, (FixedGenome,)) and not hasattr(genome, "connections"):
        genome = FixedGenome(genome)
    path.write_text(genome_to_json(genome))


def load_genome_file(path: str | Path):
    return genome_from_json(Path(path).read_text())


# --------------------------------------------------------------------------
# Baseline campaign


def run_baseline(cfg: ExperimentConfig, outdir: Path, pool: _Pool) -> list[BaselineRow]:
    genome_dir = outdir / "genomes"
    replay_dir = outdir / "replays"
    ckpt_dir = outdir / "checkpoints"
    for d in (genome_dir, replay_dir, ckpt_dir):
        d.mkdir(parents=True, exist_ok=True)

    all_rows: list[BaselineRow] = []
    for enemy_id in cfg.enemies:
        for seed in cfg.seeds:
            cell_name = f"{cfg.algorithm}_enemy{enemy_id}_seed{seed}"
            ckpt_path = ckpt_dir / f"{cell_name}.pkl"
            prior_rows, pop, start_gen, driver = _load_baseline_checkpoint(
                ckpt_path, cfg, enemy_id, seed)

            def checkpoint(blob: dict, *, _driver=driver, _path=ckpt_path,
                           _prior=prior_rows) -> None:
                blob.update(
                    config_hash=cfg.config_hash(),
                    driver=_driver,
                    rows=_prior + blob["rows"],
                )
                tmp = _path.with_suffix(".tmp")
                with tmp.open("wb") as fh:
                    pickle.dump(blob, fh)
                tmp.replace(_path)

            cell_rows, _final_pop, best_genome, record = baseline_cell(
                driver,
                enemy_id,
                seed,
                cfg.generations,
                tick_limit=cfg.match.tick_limit,
                weights=cfg.fitness_player,
                pool_map=pool.map,
                on_checkpoint=checkpoint,
                start_generation=start_gen,
                population=pop,
            )
            rows = prior_rows + cell_rows
            all_rows.extend(rows)
            assert record is not None and best_genome is not None
            _save_genome(genome_dir / f"best_{cell_name}.json", best_genome)
            write_replay(replay_dir / f"best_{cell_name}.replay", record,
                         config_hash=cfg.config_hash())
            ckpt_path.unlink(missing_ok=True)
            log.info("baseline cell %s finished: best fitness %.3f",
                     cell_name, rows[-1].best_fitness)
    return all_rows


def _load_baseline_checkpoint(path: Path, cfg: ExperimentConfig,
                              enemy_id: int, seed: int):
    if path.exists():
        with path.open("rb") as fh:
            blob = pickle.load(fh)
        if blob.get("config_hash") == cfg.config_hash():
            return (list(blob["rows"]), blob["population"],
                    blob["generation"], blob["driver"])
        log.warning("checkpoint %s ignored: config hash mismatch", path)
    driver_seed = derive_seed(seed, "driver", enemy_id, cfg.algorithm)
    driver = make_driver(cfg.algorithm, getattr(cfg, cfg.algorithm), driver_seed)
    return [], None, 0, driver


# --------------------------------------------------------------------------
# Coevolution campaign


def run_coevolution(cfg: ExperimentConfig, outdir: Path, pool: _Pool) -> list[CoevolutionRow]:
    assert cfg.schedule is not None
    master_seed = cfg.seeds[0]
    genome_dir = outdir / "genomes"
    replay_dir = outdir / "replays"
    ckpt_dir = outdir / "checkpoints"
    for d in (genome_dir, replay_dir, ckpt_dir):
        d.mkdir(parents=True, exist_ok=True)
    ckpt_path = ckpt_dir / "coevolution.pkl"

    resume = None
    if ckpt_path.exists():
        with ckpt_path.open("rb") as fh:
            blob = pickle.load(fh)
        if blob.get("config_hash") == cfg.config_hash():
            resume = blob
        else:
            log.warning("checkpoint %s ignored: config hash mismatch", ckpt_path)

    if resume is None:
        algo_cfg = getattr(cfg, cfg.algorithm)
        player_driver = make_driver(cfg.algorithm, algo_cfg,
                                    derive_seed(master_seed, "driver", "player"))
        enemy_driver = make_driver(cfg.algorithm, algo_cfg,
                                   derive_seed(master_seed, "driver", "enemy"))
    else:
        player_driver = resume["player_driver"]
        enemy_driver = resume["enemy_driver"]

    def on_checkpoint(blob: dict) -> None:
        blob.update(
            config_hash=cfg.config_hash(),
            player_driver=player_driver,
            enemy_driver=enemy_driver,
        )
        tmp = ckpt_path.with_suffix(".tmp")
        with tmp.open("wb") as fh:
            pickle.dump(blob, fh)
        tmp.replace(ckpt_path)

    rows, final = coevolve(
        player_driver,
        enemy_driver,
        cfg.schedule,
        master_seed,
        tick_limit=cfg.match.tick_limit,
        player_weights=cfg.fitness_player,
        enemy_weights=cfg.fitness_enemy,
        pool_map=pool.map,
        resume=resume,
        on_checkpoint=on_checkpoint,
    )

    best_p = max(range(len(final["player_fitnesses"])),
                 key=lambda i: (final["player_fitnesses"][i], -i))
    best_e = max(range(len(final["enemy_fitnesses"])),
                 key=lambda i: (final["enemy_fitnesses"][i], -i))
    player_best = final["player_population"][best_p]
    enemy_best = final["enemy_population"][best_e]
    _save_genome(genome_dir / "best_player.json", player_best)
    _save_genome(genome_dir / "best_enemy.json", enemy_best)
    _, _, record = run_match(
        as_controller(player_best, "player"),
        as_controller(enemy_best, "enemy"),
        stage_for(0),
        derive_seed(master_seed, "final"),
        cfg.match.tick_limit,
        record=True,
    )
    assert record is not None
    write_replay(replay_dir / "final_best_vs_best.replay", record,
                 config_hash=cfg.config_hash())
    ckpt_path.unlink(missing_ok=True)
    return rows


# --------------------------------------------------------------------------
# Single match


def run_single_match(cfg: ExperimentConfig, outdir: Path) -> dict:
    assert cfg.single_match is not None
    sm = cfg.single_match
    seed = cfg.seeds[min(sm.seed_index, len(cfg.seeds) - 1)]
    if sm.player_genome:
        player = as_controller(load_genome_file(sm.player_genome), "player")
    else:
        player = IdleController()
    if sm.enemy_genome:
        enemy = as_controller(load_genome_file(sm.enemy_genome), "enemy")
        stage_id = 0
    else:
        assert sm.enemy is not None
        enemy = ScriptedEnemyController(get_archetype(sm.enemy))
        stage_id = sm.enemy
    p_res, e_res, record = run_match(
        player, enemy, stage_for(stage_id), seed, cfg.match.tick_limit, record=True)
    replay_dir = outdir / "replays"
    replay_dir.mkdir(parents=True, exist_ok=True)
    assert record is not None
    write_replay(replay_dir / "single_match.replay", record,
                 config_hash=cfg.config_hash())
    return {
        "winner": p_res.winner,
        "player_energy": p_res.self_energy,
        "enemy_energy": e_res.self_energy,
        "duration": p_res.duration,
    }


# --------------------------------------------------------------------------
# Entry


def run_experiment(config_path: str | Path, output_override: Optional[str] = None) -> Path:
    """Run the campaign described by a config file; returns the output dir."""
    cfg = ExperimentConfig.load(config_path)
    outdir = resolve_output_dir(cfg, output_override)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.yaml").write_text(cfg.to_yaml())

    with _Pool(cfg.match.workers) as pool:
        if cfg.campaign == "baseline":
            rows = run_baseline(cfg, outdir, pool)
            _write_csv(outdir / "baseline.csv", BASELINE_CSV_FIELDS, rows,
                       _provenance(cfg, cfg.seeds[0]))
        elif cfg.campaign == "coevolution":
            rows = run_coevolution(cfg, outdir, pool)
            _write_csv(outdir / "coevolution.csv", COEVOLUTION_CSV_FIELDS, rows,
                       _provenance(cfg, cfg.seeds[0]))
        else:
            summary = run_single_match(cfg, outdir)
            log.info("single match: %s", summary)
            (outdir / "single_match.txt").write_text(
                _provenance(cfg, cfg.seeds[0]) + "\n" +
                "\n".join(f"{k}={_fmt(v)}" for k, v in summary.items()) + "\n")
    return outdir
