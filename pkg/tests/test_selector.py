import pytest
from conftest import disk_mask, fixture_scene, flat_scene
from hypothesis import given
from hypothesis import strategies as st

from shapegrasp.errors import ConfigError
from shapegrasp.pipeline import (
    PipelineConfig,
    choose_decomposition,
    decompose_2d_search,
)
from shapegrasp.selector import (
    Decomposition,
    Reason,
    SelectorConfig,
    gamma_sequence,
    select,
    threshold_search,
)


def dec(n, source):
    return Decomposition(parts=[object()] * n, source=source, gamma_used=0.2, iterations=0, gammas_tried=[0.2])


def test_gamma_sequences():
    assert gamma_sequence(0.15) == [0.15, 0.125, 0.1, 0.075, 0.05, 0.025]
    assert gamma_sequence(0.2)[:3] == [0.2, 0.175, 0.15]
    assert gamma_sequence(0.2)[-1] == 0.025
    assert gamma_sequence(0.035, 0.025, 0.01) == [0.035, 0.01]


def test_search_stops_at_first_split():
    calls = []

    def fn(g):
        calls.append(g)
        return [1, 2] if g <= 0.1 else [1]

    d = threshold_search(fn, 0.15)
    assert d.gamma_used == 0.1
    assert d.iterations == 2 and d.runs == 3
    assert calls == [0.15, 0.125, 0.1]
    assert not d.degenerate


def test_search_exhausted_is_degenerate():
    d = threshold_search(lambda g: [1], 0.15)
    assert d.degenerate and len(d.parts) == 1
    assert d.gamma_used == 0.025


# (3D parts, confidence) -> chosen source, reason
@pytest.mark.parametrize(
    "n3, conf, source, reason",
    [
        (3, 0.95, "3d", Reason.PREFERRED_3D),
        (10, 0.85, "3d", Reason.PREFERRED_3D),  # both bounds inclusive
        (11, 0.95, "2d", Reason.TOO_MANY_PARTS_3D),
        (3, 0.849, "2d", Reason.LOW_DEPTH_CONFIDENCE),
        (11, 0.5, "2d", Reason.TOO_MANY_PARTS_3D),
        (1, 1.0, "3d", Reason.PREFERRED_3D),
    ],
)
def test_choice_rule(n3, conf, source, reason):
    r = select(dec(4, "2d"), dec(n3, "3d"), conf)
    assert r.chosen.source == source
    assert r.reason is reason


def test_missing_3d_forces_2d():
    r = select(dec(2, "2d"), None, 0.0)
    assert r.reason is Reason.FORCED_2D and r.rejected is None


@given(st.integers(1, 30), st.floats(0, 1), st.integers(1, 20), st.floats(0.5, 1))
def test_choice_rule_property(n3, conf, omega, alpha):
    cfg = SelectorConfig(omega=omega, alpha=alpha)
    r = select(dec(2, "2d"), dec(n3, "3d"), conf, cfg)
    assert (r.chosen.source == "3d") == (n3 <= omega and conf >= alpha)


def test_bad_config():
    with pytest.raises(ConfigError):
        SelectorConfig(gamma_init_2d=1.5)
    with pytest.raises(ConfigError):
        SelectorConfig(omega=0)
    with pytest.raises(ConfigError):
        SelectorConfig(gamma_floor=0.3)


def test_disk_is_degenerate():
    scene = flat_scene(disk_mask((200, 200), 100, 100, 60))
    d = decompose_2d_search(scene, SelectorConfig())
    assert d.degenerate and len(d.parts) == 1


def test_screwdriver_needs_lower_threshold():
    scene, _ = fixture_scene("screwdriver")
    d = decompose_2d_search(scene, SelectorConfig())
    assert d.gamma_used == pytest.approx(0.125)
    assert d.iterations == 1 and d.runs == 2
    assert len(d.parts) >= 2


def test_forced_2d_mode_skips_3d():
    scene, _ = fixture_scene("hammer")
    result, _ = choose_decomposition(scene, PipelineConfig(mode="2d"))
    assert result.reason is Reason.FORCED_2D
    assert result.chosen.source == "2d"


def test_low_confidence_rejects_3d():
    scene, _ = fixture_scene("wine bottle")
    result, _ = choose_decomposition(scene, PipelineConfig())
    assert result.reason is Reason.LOW_DEPTH_CONFIDENCE
    assert result.chosen.source == "2d"
    assert result.conf_fraction < 0.85
