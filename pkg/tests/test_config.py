import math
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from logwave import functionals as fn
from logwave.config import (
    PRESETS, ConfigurationError, InitialSpec, ProblemConfig, from_flat, loads, override, parse_config,
    preset_config, serialize,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_minimal_file_defaults(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text("name = \"minimal\"\n")
    cfg = parse_config(f)
    assert cfg == replace(ProblemConfig(), name="minimal")
    assert cfg.extents == (math.pi,) and cfg.modes == (32,) and cfg.p == 3.0
    assert cfg.integrator.tolerance == 1e-8 and cfg.detector.divergence == 1e8
    assert cfg.exponents.sigma == 1.0


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_config(tmp_path / "nope.toml")


def test_tables_equal_dotted():
    a = loads("[domain]\nmodes = 8\n[equation]\np = 3.5\n")
    b = loads("domain.modes = 8\nequation.p = 3.5\n")
    assert a == b and a.modes == (8,)


def test_p_equal_two_rejected():
    with pytest.raises(ConfigurationError, match=r"2 < p < 2_\*"):
        loads("equation.p = 2\n")


def test_increasing_alpha_rejected():
    with pytest.raises(ConfigurationError, match="nonincreasing"):
        loads('damping.kind = "exponential-decay"\ndamping.rate = -0.5\n')


def test_all_violations_listed():
    with pytest.raises(ConfigurationError) as e:
        loads('equation.p = 1.5\ninteger = 3\nintegrator.t_max = 0\nintegrator.tolerance = 1.5\n'
              'domain.modes = "x"\nequation.omega = -1\nwell.safety = 0.5\n')
    msg = str(e.value)
    for key in ("equation.p", "integer", "integrator.t_max", "integrator.tolerance", "domain.modes",
                "equation.omega", "well.safety"):
        assert key in msg, key


def test_2d_broadcast():
    cfg = loads("domain.dim = 2\ndomain.extents = 3.0\ndomain.modes = 6\n")
    assert cfg.extents == (3.0, 3.0) and cfg.modes == (6, 6)
    assert cfg.domain().lambda1 == pytest.approx(2 * (math.pi / 3) ** 2)


@pytest.mark.parametrize("name", PRESETS)
def test_preset_round_trip(name):
    cfg = preset_config(name)
    text = serialize(cfg)
    again = loads(text)
    assert again == cfg and serialize(again) == text


@pytest.mark.parametrize("name", PRESETS)
def test_shipped_configs_match_presets(name):
    cfg = parse_config(CONFIGS / f"{name}.toml")
    assert cfg.digest() == preset_config(name).digest()


def test_digest_order_free():
    text = serialize(preset_config("negative_energy"))
    lines = text.splitlines(keepends=True)
    shuffled = "".join(lines[1::2] + lines[::2])
    assert loads(shuffled).digest() == loads(text).digest()
    moved = loads(text.replace('output.dir = "out"', 'output.dir = "elsewhere"'))
    assert moved.digest() == loads(text).digest()
    changed = loads(text.replace("equation.p = 3.0", "equation.p = 3.5"))
    assert changed.digest() != loads(text).digest()


floats = st.floats(1e-6, 1e3, allow_nan=False)


@given(floats, st.floats(2.05, 6.0), st.floats(0.0, 3.0), floats, st.integers(1, 40),
       st.sampled_from(["constant", "exponential-decay"]))
def test_round_trip_property(L, p, omega, amp, modes, kind):
    cfg = replace(ProblemConfig(), extents=(L,), p=p, omega=omega, modes=(modes,),
                  initial=InitialSpec(amplitude=amp, velocity=-amp / 3))
    cfg = replace(cfg, damping=replace(cfg.damping, kind=kind, rate=0.25))
    text = serialize(cfg)
    assert loads(text) == cfg
    assert serialize(loads(text)) == text


def test_coefficient_initial_data():
    cfg = loads('initial.kind = "coefficients"\ninitial.u0 = [1.0, 0.5]\ninitial.u1 = [0.0, 0.0, 0.25]\n'
                "domain.modes = 8\n")
    u0, u1 = cfg.initial_fields()
    assert list(u0.coeffs[:3]) == [1.0, 0.5, 0.0] and u1.coeffs[2] == 0.25
    assert loads(serialize(cfg)) == cfg
    with pytest.raises(ConfigurationError, match="beyond modes"):
        loads('initial.kind = "coefficients"\ninitial.u0 = [1, 2, 3]\ndomain.modes = 2\n')


def test_eigenmode_initial_data():
    cfg = loads("initial.mode = 3\ninitial.amplitude = 2.0\ninitial.velocity = -1.0\n")
    u0, u1 = cfg.initial_fields()
    assert u0.coeffs[2] == 2.0 and u1.coeffs[2] == -1.0
    with pytest.raises(ConfigurationError, match="outside retained"):
        loads("initial.mode = 99\n")


@pytest.mark.parametrize("name", PRESETS)
def test_presets_satisfy_their_inequalities(name):
    cfg = preset_config(name)
    u0, u1 = cfg.initial_fields()
    well = cfg.well_analysis()
    rt = fn.classify_initial_data(u0, u1, well, cfg.exponents, u0.domain.lambda1)
    if name == "negative_energy":
        assert rt.E0 < 0 and rt.has("NegativeEnergy")
    elif name == "subcritical_unstable":
        assert rt.I0 < 0 and 0 < rt.E0 < well.d_est and rt.E0 < well.d0
    elif name == "small_data_global":
        assert rt.I0 > 0 and rt.E0 < well.d_est
    else:
        assert rt.has("HighEnergyGrowth") and rt.has("HighEnergyBoundEligible") and rt.E0 > well.d_est


@pytest.mark.parametrize("name,level", [("negative_energy", 0.9), ("small_data_global", 1.5),
                                        ("subcritical_unstable", 3.0)])
def test_preset_inequality_checked_at_load(name, level):
    with pytest.raises(ConfigurationError, match=name):
        preset_config(name, **{"initial.level": level})


def test_override():
    cfg = preset_config("small_data_global")
    assert override(cfg, "integrator.t_max", 0.5).integrator.t_max == 0.5
    with pytest.raises(ConfigurationError):
        override(cfg, "integrator.t_max", -1.0)


def test_sweep_keys():
    cfg = loads('sweep.initial.amplitude = [1.0, 2.0]\n')
    assert cfg.sweep == (("initial.amplitude", (1.0, 2.0)),)
    assert loads(serialize(cfg)) == cfg
    with pytest.raises(ConfigurationError, match="unknown sweep axis"):
        loads("sweep.initial.nope = [1]\n")
