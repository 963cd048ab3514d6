import pytest

from isiamids.config import DEFAULTS, SEED_OFFSETS, ConfigError, RunConfig, parse_text


def test_parse_comments_and_blanks():
    assert parse_text("# run\n\nseed = 4  # global\ngbt.rounds=7\n") == {"seed": "4", "gbt.rounds": "7"}


@pytest.mark.parametrize("text, match", [("gbt.round = 3", "unknown key"), ("seed = 1\nseed = 2", "duplicate"),
                                         ("just words", "key = value")])
def test_parse_rejects(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_text(text)


def test_seed_required():
    with pytest.raises(ConfigError, match="seed"):
        RunConfig.build({})
    with pytest.raises(ConfigError, match="integer"):
        RunConfig.build({"seed": "x"})


def test_override_beats_file():
    cfg = RunConfig.build({"seed": "1", "order": "P1"}, {"seed": 9, "order": "xsd"})
    assert cfg.seed == 9 and cfg["order"] == "XSA"


@pytest.mark.parametrize("key, value", [("order", "XXS"), ("dataset", "kdd99"), ("precision", "float16"),
                                        ("gbt.rounds", "0"), ("dnn.hidden", ""), ("dnn.lr", "-1"),
                                        ("siamese.references", "-2"), ("train", "/no/such/file")])
def test_invalid_values(key, value):
    with pytest.raises(ConfigError):
        RunConfig.build({"seed": "1", key: value})


def test_relative_paths_resolve_against_config(tmp_path):
    (tmp_path / "raw.csv").write_text("a,b\n")
    (tmp_path / "run.cfg").write_text("seed = 2\ntrain = raw.csv\n")
    cfg = RunConfig.load(tmp_path / "run.cfg")
    assert cfg["train"] == str(tmp_path / "raw.csv")


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "absent.cfg")


def test_component_seeds_fan_out():
    cfg = RunConfig.build({"seed": "10"})
    assert {k: cfg.component_seed(k) for k in SEED_OFFSETS} == {k: 10 + v for k, v in SEED_OFFSETS.items()}
    assert cfg.gbt("gbt").seed != cfg.gbt("layer2").seed


def test_digest_and_text_round_trip(tmp_path):
    cfg = RunConfig.build({"seed": "5", "dnn.epochs": "3"})
    (tmp_path / "c.cfg").write_text(cfg.to_text())
    again = RunConfig.load(tmp_path / "c.cfg")
    assert again.digest() == cfg.digest()
    assert RunConfig.build({"seed": "6"}).digest() != cfg.digest()


def test_defaults_follow_documented_values():
    cfg = RunConfig.build({"seed": "0"})
    g = cfg.gbt("gbt")
    assert (g.rounds, g.max_depth, g.learning_rate, g.l2_penalty, g.split_penalty, g.min_child_hessian) == \
        (100, 6, 0.3, 1.0, 0.0, 1.0)
    assert cfg.hidden("dnn.hidden") == (1024, 512, 256, 128, 64)
    assert cfg.hidden("siamese.hidden") == (1024, 512, 256, 128)
    t = cfg.dnn_train()
    assert (t.epochs, t.batch_size, t.lr, t.beta1, t.beta2, t.eps) == (20, 256, 0.001, 0.9, 0.999, 1e-8)
    assert DEFAULTS["siamese.margin"] == "1.0" and DEFAULTS["siamese.references"] == "25"
    assert DEFAULTS["bench.per_class"] == "10" and cfg["order"] == "XSA"
