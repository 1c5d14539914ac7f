"""Experiment configuration files: named YAML blocks, validation with
block-level diagnostics, canonical serialization, and a content hash that
stamps every output artifact."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .evaluation import CoevolutionSchedule, FitnessWeights
from .ga import GaConfig
from .neat import NeatConfig

CAMPAIGNS = ("baseline", "coevolution", "single_match")
ALGORITHMS = ("ga", "neat")
OUTPUT_DIR_ENV = "EVOARENA_OUT"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the bad block."""


@dataclass
class MatchSettings:
    tick_limit: int = 3000
    workers: int = 0


@dataclass
class SingleMatchSettings:
    enemy: Optional[int] = 1
    seed_index: int = 0
    player_genome: Optional[str] = None
    enemy_genome: Optional[str] = None


@dataclass
class ExperimentConfig:
    campaign: str = "baseline"
    algorithm: str = "neat"
    enemies: list[int] = field(default_factory=lambda: [5])
    seeds: list[int] = field(default_factory=lambda: [1])
    generations: int = 50
    output_dir: Optional[str] = None
    match: MatchSettings = field(default_factory=MatchSettings)
    fitness_player: FitnessWeights = field(default_factory=lambda: FitnessWeights(1, 2, 2))
    fitness_enemy: FitnessWeights = field(default_factory=lambda: FitnessWeights(1, 2, 3))
    ga: Optional[GaConfig] = None
    neat: Optional[NeatConfig] = None
    schedule: Optional[CoevolutionSchedule] = None
    single_match: Optional[SingleMatchSettings] = None

    def validate(self) -> None:
        if self.campaign not in CAMPAIGNS:
            raise ConfigError(f"campaign must be one of {CAMPAIGNS}, got {self.campaign!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not self.seeds:
            raise ConfigError("seeds: list must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds: duplicate values")
        for enemy in self.enemies:
            if not 1 <= enemy <= 8:
                raise ConfigError(f"enemies: archetype id {enemy} out of range 1..8")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if self.match.tick_limit < 1:
            raise ConfigError("match.tick_limit must be >= 1")
        if self.match.workers < 0:
            raise ConfigError("match.workers must be >= 0")
        if self.campaign in ("baseline", "coevolution"):
            block = getattr(self, self.algorithm)
            if block is None:
                raise ConfigError(
                    f"algorithm={self.algorithm} requires the '{self.algorithm}' config block")
            block.validate()
        if self.campaign == "baseline" and not self.enemies:
            raise ConfigError("baseline campaign requires a non-empty 'enemies' list")
        if self.campaign == "coevolution":
            if self.schedule is None:
                raise ConfigError("coevolution campaign requires the 'schedule' block")
            self.schedule.validate()
        if self.campaign == "single_match":
            if self.single_match is None:
                raise ConfigError("single_match campaign requires the 'single_match' block")
            sm = self.single_match
            if sm.enemy is None and sm.enemy_genome is None:
                raise ConfigError("single_match needs an enemy archetype or an enemy genome")
            if sm.enemy is not None and not 1 <= sm.enemy <= 8:
                raise ConfigError(f"single_match.enemy id {sm.enemy} out of range 1..8")

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        doc: dict = {
            "campaign": self.campaign,
            "algorithm": self.algorithm,
            "enemies": list(self.enemies),
            "seeds": list(self.seeds),
            "generations": self.generations,
            "output_dir": self.output_dir,
            "match": asdict(self.match),
            "fitness": {
                "player": asdict(self.fitness_player),
                "enemy": asdict(self.fitness_enemy),
            },
        }
        if self.ga is not None:
            doc["ga"] = asdict(self.ga)
        if self.neat is not None:
            doc["neat"] = asdict(self.neat)
        if self.schedule is not None:
            doc["schedule"] = asdict(self.schedule)
        if self.single_match is not None:
            doc["single_match"] = asdict(self.single_match)
        return doc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a mapping")
        known = {"campaign", "algorithm", "enemies", "seeds", "generations",
                 "output_dir", "match", "fitness", "ga", "neat", "schedule",
                 "single_match"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config blocks: {sorted(unknown)}")

        def block(name: str, factory, current):
            raw = doc.get(name)
            if raw is None:
                return current
            if not isinstance(raw, dict):
                raise ConfigError(f"'{name}' block must be a mapping")
            try:
                return factory(**raw)
            except TypeError as exc:
                raise ConfigError(f"'{name}' block: {exc}") from exc

        cfg = cls()
        cfg.campaign = doc.get("campaign", cfg.campaign)
        cfg.algorithm = doc.get("algorithm", cfg.algorithm)
        cfg.enemies = [int(e) for e in doc.get("enemies", cfg.enemies)]
        cfg.seeds = [int(s) for s in doc.get("seeds", cfg.seeds)]
        cfg.generations = int(doc.get("generations", cfg.generations))
        cfg.output_dir = doc.get("output_dir")
        cfg.match = block("match", MatchSettings, cfg.match)
        fitness = doc.get("fitness") or {}
        if not isinstance(fitness, dict):
            raise ConfigError("'fitness' block must be a mapping")
        if "player" in fitness:
            cfg.fitness_player = FitnessWeights(**fitness["player"])
        if "enemy" in fitness:
            cfg.fitness_enemy = FitnessWeights(**fitness["enemy"])
        cfg.ga = block("ga", GaConfig, None)
        cfg.neat = block("neat", NeatConfig, None)
        cfg.schedule = block("schedule", CoevolutionSchedule, None)
        cfg.single_match = block("single_match", SingleMatchSettings, None)
        cfg.validate()
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        return cls.from_yaml(path.read_text())


def resolve_output_dir(cfg: ExperimentConfig, override: Optional[str] = None) -> Path:
    """--out flag, then the config, then $EVOARENA_OUT, then ./runs."""
    if override:
        return Path(override)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, "runs"))
