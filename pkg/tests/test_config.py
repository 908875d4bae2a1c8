import pytest

from nonlocal_epidemic.config import DEFAULTS, SCHEMA, parse_config, parse_config_string
from nonlocal_epidemic.errors import ParseError, ValidationError
from nonlocal_epidemic.kernels import KernelFamily


def test_empty_config_gives_p1_defaults():
    cfg = parse_config_string("")
    assert cfg.params.a12 == 2.0 and cfg.params.mu == 1.0
    assert cfg.init.h0 == 1.0
    assert cfg.get("numerics", "dx") == 0.02
    echo = cfg.echo()
    assert echo["model"]["a12"] == 2.0
    assert echo["numerics"]["T"] == 200.0


def test_defaults_table_matches_schema():
    for sec, keys in SCHEMA.items():
        assert set(DEFAULTS[sec]) == set(keys)


def test_overrides_and_preset():
    cfg = parse_config_string("""
[model]
preset = P2
mu = 3   ; inline comment
[kernel.J1]
family = gaussian
sigma = 0.5
[initial]
shape = cosine
h0 = 0.4
[classify]
certify = yes
""")
    assert cfg.params.a12 == 0.5 and cfg.params.mu == 3.0
    assert cfg.params.J1.family is KernelFamily.parse("gaussian")
    assert cfg.init.h0 == 0.4
    assert cfg.get("classify", "certify") is True


def test_hash_is_stable_and_sensitive():
    a = parse_config_string("[model]\nmu = 2\n")
    b = parse_config_string("[model]\nmu = 2.0\n")
    c = parse_config_string("[model]\nmu = 2.5\n")
    assert a.content_hash() == b.content_hash() != c.content_hash()
    assert len(a.content_hash()) == 16


def test_all_errors_reported():
    with pytest.raises(ValidationError) as ei:
        parse_config_string("[model]\nd1 = -1\na13 = 2\n[numerics]\ndx = abc\n[bogus]\nx = 1\n")
    errs = ei.value.errors
    assert "[model] d1: invalid value -1.0" in errs
    assert "[model] a13: unknown key" in errs
    assert any(e.startswith("[numerics] dx:") for e in errs)
    assert "[bogus]: unknown section" in errs


@pytest.mark.parametrize("text", ["[initial]\nshape = square\n", "[reaction]\nfamily = hill\n",
                                  "[model]\npreset = P3\n", "[kernel.K]\nfamily = box\n"])
def test_invalid_choices(text):
    with pytest.raises(ValidationError):
        parse_config_string(text)


def test_parse_errors(tmp_path):
    with pytest.raises(ParseError):
        parse_config_string("mu = 1\n")
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.ini")
    f = tmp_path / "run.ini"
    f.write_text("[model]\nmu = 0.5\n")
    assert parse_config(f).params.mu == 0.5
    assert parse_config(f).source == str(f)
