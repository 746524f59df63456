import pytest

from acimlab.config import (
    ConfigError,
    cfg_bool,
    cfg_float,
    cfg_floats,
    cfg_int,
    parse_config_text,
    system_fingerprint,
    system_from_config,
)
from acimlab.presets import example4


def test_parse_flat_keys():
    cfg = parse_config_text("""
# a comment
preset = example4
n=1024   # trailing comment
epsilons=0.2,0.1
""")
    assert cfg == {"preset": "example4", "n": "1024", "epsilons": "0.2,0.1"}


def test_parse_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_config_text("this is not a key value pair")


def test_getters_validate():
    cfg = {"n": "abc", "x": "0.5", "flag": "yes", "eps": "0.2,0.1"}
    with pytest.raises(ConfigError):
        cfg_int(cfg, "n", 1)
    assert cfg_float(cfg, "x", 0.0) == 0.5
    with pytest.raises(ConfigError):
        cfg_float(cfg, "x", 0.0, lo=0.6)
    assert cfg_bool(cfg, "flag", False) is True
    assert cfg_floats(cfg, "eps", ()) == (0.2, 0.1)
    assert cfg_int(cfg, "missing", 7) == 7


def test_preset_system():
    sys = system_from_config({"preset": "example4"})
    assert system_fingerprint(sys) == system_fingerprint(example4())
    narrower = system_from_config({"preset": "example4", "alpha": "0.6", "beta": "0.3"})
    assert narrower.maps[0].exponent == 0.6


def test_unknown_preset():
    with pytest.raises(ConfigError):
        system_from_config({"preset": "nosuch"})


def test_explicit_system_matches_preset():
    cfg = {
        "K": "2",
        "map1.left": "lsv(0.5)", "map1.right": "affine(2,-1)",
        "map2.left": "lsv(0.25)", "map2.right": "affine(1.5,-0.75)",
        "prob1": "example4", "prob2": "example4",
    }
    sys = system_from_config(cfg)
    assert system_fingerprint(sys) == system_fingerprint(example4())


def test_explicit_system_constant_probs():
    cfg = {
        "K": "2",
        "map1.left": "lsv(0.5)", "map1.right": "affine(2,-1)",
        "map2.left": "lsv(0.25)", "map2.right": "affine(1.5,-0.75)",
        "prob1": "const(0.5)", "prob2": "const(0.5)",
    }
    sys = system_from_config(cfg)
    assert sys.probs.value(0, 0.7) == 0.5


def test_probabilities_must_sum_to_one():
    cfg = {
        "K": "2",
        "map1.left": "lsv(0.5)", "map1.right": "affine(2,-1)",
        "map2.left": "lsv(0.25)", "map2.right": "affine(1.5,-0.75)",
        "prob1": "const(0.6)", "prob2": "const(0.6)",
    }
    with pytest.raises(ConfigError):
        system_from_config(cfg)


def test_missing_map_keys():
    with pytest.raises(ConfigError):
        system_from_config({"K": "2", "map1.left": "lsv(0.5)"})


def test_bad_branch_form():
    cfg = {
        "K": "2",
        "map1.left": "wavy(0.5)", "map1.right": "affine(2,-1)",
        "map2.left": "lsv(0.25)", "map2.right": "affine(1.5,-0.75)",
        "prob1": "const(0.5)", "prob2": "const(0.5)",
    }
    with pytest.raises(ConfigError):
        system_from_config(cfg)


def test_fingerprint_distinguishes_systems():
    a = system_fingerprint(example4())
    b = system_fingerprint(example4(alpha=0.6))
    assert a != b
