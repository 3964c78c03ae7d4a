from pathlib import Path

import pytest

from cqt_certify.config import (
    ChannelChoice,
    SweepConfig,
    build_config,
    load_config_file,
    normalize_key,
)
from cqt_certify.errors import ConfigError
from cqt_certify.povm import Backend
from cqt_certify.states import Channel


def test_defaults():
    config = SweepConfig()
    assert config.channel == ChannelChoice.Both
    assert config.sdp_tol == 1e-7
    assert config.seed == 42
    assert config.optimizer_restarts == 8
    assert config.output_path == Path("sweep.csv")
    assert config.backend == Backend.InteriorPoint
    assert len(config.grid()) == 51


def test_grid_endpoints():
    config = SweepConfig(p_min=0.0, p_max=1.0, p_step=0.25)
    assert config.grid() == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_grid_single_point():
    assert SweepConfig(p_min=0.3, p_max=0.3).grid() == [0.3]


def test_channel_choice_channels():
    assert ChannelChoice.Both.channels() == [Channel.Total, Channel.Qubit]
    assert ChannelChoice.Qubit.channels() == [Channel.Qubit]


@pytest.mark.parametrize(
    "values",
    [
        {"p_min": 0.8, "p_max": 0.2},
        {"p_max": 1.5},
        {"p_step": 0.0},
        {"sdp_tol": -1.0},
        {"jobs": 0},
        {"unknown": 1},
    ],
)
def test_build_config_rejects(values):
    with pytest.raises(ConfigError):
        build_config(values)


def test_normalize_key():
    assert normalize_key(" P-Step ") == "p_step"
    assert normalize_key("restarts") == "optimizer_restarts"
    assert normalize_key("out") == "output_path"


def test_load_config_file(tmp_path):
    path = tmp_path / "sweep.conf"
    path.write_text(
        "# noise grid\n"
        "channel = qubit\n"
        "\n"
        "p-step = 0.1   # coarse\n"
        "restarts = 3\n"
        "out = result.csv\n",
        encoding="utf-8",
    )
    values = load_config_file(path)
    assert values == {
        "channel": "qubit",
        "p_step": "0.1",
        "optimizer_restarts": "3",
        "output_path": "result.csv",
    }

    config = build_config(values)
    assert config.channel == ChannelChoice.Qubit
    assert config.p_step == 0.1
    assert config.optimizer_restarts == 3


def test_load_config_unknown_key(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("colour = red\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(path)


def test_load_config_malformed_line(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("seed 42\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.conf")


def test_command_line_overrides_file():
    config = build_config(
        {"seed": "7", "p_step": "0.1"},
        {"seed": 9, "p_max": None, "p-min": 0.2},
    )
    assert config.seed == 9
    assert config.p_step == 0.1
    assert config.p_max == 1.0
    assert config.p_min == 0.2
