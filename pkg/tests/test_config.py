import json
from pathlib import Path

import pytest

from dyens.config import RunConfig, load_config, parse_config
from dyens.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_empty_config_gives_defaults():
    cfg = parse_config({})
    assert cfg == RunConfig()
    assert cfg.filter.build(3).seed == 3
    assert cfg.session_plan.inter_trial_bins == 50


@pytest.mark.parametrize("name", ["session.json", "offline.json"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert len(cfg.sha256) == 64
    brain = cfg.brain.build(cfg.seed, v_max=cfg.task.v_max)
    assert brain.n_channels == 32


def test_values_are_coerced():
    cfg = parse_config(
        {
            "filter": {"n_particles": 100, "forgetting_alpha": 1},
            "brain": {"noise_var": [1, 2, 3, 4], "schedule": [[0, 0], [100, [1, 0, 1, 0]]]},
            "session_plan": {"test_tasks": ["RTP"]},
        }
    )
    assert cfg.filter.forgetting_alpha == 1.0 and isinstance(cfg.filter.forgetting_alpha, float)
    assert cfg.brain.noise_var == (1.0, 2.0, 3.0, 4.0)
    assert cfg.brain.schedule == ((0, 0), (100, (1.0, 0.0, 1.0, 0.0)))
    brain = cfg.brain.build(0)
    assert brain.blend_weights(150, [0, 0]).tolist() == [0.5, 0.0, 0.5, 0.0]


@pytest.mark.parametrize(
    "data, fragment",
    [
        ([], "JSON object"),
        ({"colour": 1}, "colour"),
        ({"filter": {"n_particle": 5}}, "n_particle"),
        ({"filter": {"n_particles": 2.5}}, "n_particles"),
        ({"filter": {"n_particles": True}}, "n_particles"),
        ({"filter": {"forgetting_alpha": 0.0}}, "forgetting_alpha"),
        ({"seed": "zero"}, "seed"),
        ({"task": []}, "task"),
        ({"brain": {"schedule": []}}, "schedule"),
        ({"brain": {"schedule": [[0, "linear"]]}}, "schedule"),
        ({"session_plan": {"assist_levels": [0.5, 2.0]}}, "assist"),
        ({"session_plan": {"test_tasks": ["Maze"]}}, "Maze"),
        ({"offline": {"pool_source": "oracle"}}, "pool_source"),
        ({"fit": {"hidden_sizes": [30, "fifty"]}}, "hidden_sizes"),
    ],
)
def test_invalid_configs_raise(data, fragment):
    with pytest.raises(ConfigError, match=fragment):
        cfg = parse_config(data)
        cfg.filter.build(0)


def test_bad_schedule_detected_at_build():
    cfg = parse_config({"brain": {"schedule": [[10, 0], [5, 1]]}})
    with pytest.raises(ConfigError):
        cfg.brain.build(0)


def test_load_errors_name_the_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(ConfigError, match="nope.json"):
        load_config(missing)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="bad.json"):
        load_config(bad)


def test_sha256_tracks_file_bytes(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 1}))
    a = load_config(p).sha256
    p.write_text(json.dumps({"seed": 1}, indent=2))
    assert load_config(p).sha256 != a
