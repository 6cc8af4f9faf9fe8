import dataclasses

import pytest

from rsmatch.config import (TrainConfig, config_from_mapping, config_hash,
                            parse_config, serialize_config, write_config)
from rsmatch.errors import ConfigError


def test_defaults_resolve():
    cfg = TrainConfig(num_classes=10).resolved()
    cfg.validate()
    assert cfg.queue_size == 8
    assert cfg.classes_per_update == 10
    assert cfg.enqueue_per_class == 1
    assert cfg.detector_threshold == cfg.confidence_threshold == 0.95
    assert cfg.unlabeled_ratio == 7
    assert cfg.nesterov is True


def test_classes_per_update_capped_at_num_classes():
    cfg = TrainConfig(num_classes=4).resolved()
    assert cfg.classes_per_update == 4


def test_cosine_factor_default():
    assert TrainConfig(num_classes=2).cosine_factor == pytest.approx(7 / 16)


@pytest.mark.parametrize("field,value", [
    ("num_classes", 1),
    ("labeled_batch", 0),
    ("unlabeled_ratio", 0),
    ("confidence_threshold", 0.0),
    ("confidence_threshold", 1.5),
    ("queue_size", 0),
    ("total_iterations", 0),
    ("lr", -0.1),
    ("arch", "vgg"),
    ("method", "mixmatch"),
    ("strategy", "pseudo"),
    ("gate_mode", "oracle"),
])
def test_invalid_values_name_the_field(field, value):
    cfg = dataclasses.replace(TrainConfig(num_classes=4), **{field: value})
    with pytest.raises(ConfigError) as err:
        cfg.resolved().validate()
    assert field in str(err.value)


def test_enqueue_cannot_exceed_capacity():
    cfg = TrainConfig(num_classes=4, queue_size=2, enqueue_per_class=3)
    with pytest.raises(ConfigError):
        cfg.resolved().validate()


def test_classes_per_update_cannot_exceed_num_classes():
    cfg = TrainConfig(num_classes=4, classes_per_update=5)
    with pytest.raises(ConfigError):
        cfg.resolved().validate()


def test_ablation_flags_require_full_method():
    cfg = TrainConfig(num_classes=4, method="fixmatch", single_queue=True)
    with pytest.raises(ConfigError):
        cfg.resolved().validate()


def test_roundtrip_through_yaml(tmp_path):
    cfg = TrainConfig(num_classes=6, lr=0.05, single_queue=True, seed=42)
    path = tmp_path / "cfg.yaml"
    write_config(cfg, path)
    assert parse_config(path) == cfg


def test_serialize_parse_identity():
    cfg = TrainConfig(num_classes=3, method="fixmatch", warmup_iterations=10)
    text = serialize_config(cfg)
    assert config_from_mapping(__import__("yaml").safe_load(text)) == cfg


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        config_from_mapping({"num_classes": 4, "n_qeue": 8})
    assert "n_qeue" in str(err.value)


def test_type_coercion_from_yaml_strings():
    cfg = config_from_mapping({"num_classes": "4", "lr": "0.1", "nesterov": "false"})
    assert cfg.num_classes == 4
    assert cfg.lr == 0.1
    assert cfg.nesterov is False


def test_parse_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("num_classes: 4\nlr: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError) as err:
        parse_config(path)
    assert "line" in str(err.value)


def test_seed_env_override(tmp_path, monkeypatch):
    path = tmp_path / "cfg.yaml"
    write_config(TrainConfig(num_classes=4, seed=0), path)
    monkeypatch.setenv("RSMATCH_SEED", "777")
    assert parse_config(path).seed == 777


def test_seed_env_override_rejects_garbage(tmp_path, monkeypatch):
    path = tmp_path / "cfg.yaml"
    write_config(TrainConfig(num_classes=4), path)
    monkeypatch.setenv("RSMATCH_SEED", "not-a-number")
    with pytest.raises(ConfigError):
        parse_config(path)


def test_config_hash_stable_and_sensitive():
    a = TrainConfig(num_classes=4, seed=1)
    b = TrainConfig(num_classes=4, seed=1)
    c = TrainConfig(num_classes=4, seed=2)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 12
