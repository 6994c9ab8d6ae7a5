import re
from pathlib import Path

import pytest

from pprfraud.config import SCHEMA, load_config
from pprfraud.errors import ConfigError
from pprfraud.exposure import WeightMode
from pprfraud.model import ClassWeighting


def write_ini(tmp_path, text):
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    return path


def test_defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = load_config()
    assert cfg.seed == 42 and cfg.synth.seed == 42
    assert cfg.synth.n_accounts == 5000 and cfg.synth.n_transactions == 100_000
    assert cfg.synth.n_rings == 20 and cfg.synth.ring_size == 4 and cfg.synth.fraud_rate == 0.005
    assert cfg.ppr.alpha == 0.85 and cfg.ppr.tol == 1e-9 and cfg.ppr.weight_mode is WeightMode.COUNT
    assert cfg.window_days == 45 and cfg.history_days == 14 and cfg.train_fraction == 0.7
    assert cfg.train.class_weighting is ClassWeighting.NONE
    assert cfg.models == ["LR_base", "LR_ppr"]
    assert cfg.out_dir == tmp_path / "out"


def test_file_then_overrides(tmp_path):
    path = write_ini(tmp_path, "[pipeline]\nseed = 7\nout_dir = results\n[ppr]\nalpha = 0.5\n[synth]\nchannels = A:0.5, B:0.5\n")
    cfg = load_config(path, {"alpha": "0.6", "mode": "baseline"})
    assert cfg.seed == 7 and cfg.synth.seed == 7
    assert cfg.ppr.alpha == 0.6
    assert cfg.synth.channels == (("A", 0.5), ("B", 0.5))
    assert cfg.out_dir == tmp_path / "results"
    assert cfg.models == ["LR_base"] and not cfg.include_ppr


@pytest.mark.parametrize(
    "text, message",
    [
        ("[ppr]\nalpha = 1.5\n", "alpha"),
        ("[ppr]\nbeta = 1\n", "unknown key"),
        ("[synth]\nalpha = 0.5\n", "belongs in [ppr]"),
        ("[split]\ntrain_fraction = 1\n", "train_fraction"),
        ("[synth]\nn_accounts = many\n", "n_accounts"),
        ("[pipeline]\nmode = everything\n", "mode"),
        ("[synth]\nchannels = A:0.5\n", "sum to 1"),
        ("no section header\n", "section"),
    ],
)
def test_bad_files_raise(tmp_path, text, message):
    with pytest.raises(ConfigError, match=re.escape(message)):
        load_config(write_ini(tmp_path, text))


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config(Path("/nonexistent/cfg.ini"))


def test_unknown_override():
    with pytest.raises(ConfigError):
        load_config(None, {"colour": "blue"})


def test_schema_keys_are_unique_and_default_parse(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    # every default round-trips through its own parser when written as text
    lines = {}
    for key, (section, _, default) in SCHEMA.items():
        if default is None:
            continue
        text = ",".join(f"{n}:{p}" for n, p in default) if isinstance(default, tuple) else str(default)
        lines.setdefault(section, []).append(f"{key} = {text}")
    body = "".join(f"[{s}]\n" + "\n".join(v) + "\n" for s, v in lines.items())
    assert load_config(write_ini(tmp_path, body)) == load_config(None, {"out_dir": str(tmp_path / "out")})


def test_shipped_configs_load():
    root = Path(__file__).resolve().parent.parent / "configs"
    default = load_config(root / "default.ini")
    assert default == load_config(None, {"out_dir": str(root.parent / "out")})
    assert load_config(root / "small.ini").synth.n_transactions == 6000
