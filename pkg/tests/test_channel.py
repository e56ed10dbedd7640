"""Channel model checks against hand-worked values and a numpy re-derivation."""

import math

import numpy as np
import pytest

from hsrsched.channel import (
    AntennaParams,
    Band,
    ChannelParams,
    FrameConfig,
    Link,
    LinkRole,
    PathLossParams,
    RadioParams,
    ShadowField,
    achieved_throughput,
    antenna_gain,
    db_to_linear,
    eavesdropper_rate,
    interference_power,
    link_rate,
    linear_to_db,
    off_boresight_angle,
    path_loss,
    received_power,
    secrecy_admissible,
    secrecy_capacity,
    secrecy_ok,
    shannon_rate,
    signal_power,
)
from hsrsched.errors import ConfigurationError
from hsrsched.scenario import BS, EVE, UAV, NodeId, Position3D

ANT = AntennaParams()
PL = PathLossParams()
F1 = RadioParams(Band.F1, 28.0, 850.0, -30.0)


# --- antenna ------------------------------------------------------------------


def test_boresight_gain_is_max_gain():
    assert antenna_gain(0.0, ANT) == 20.0


def test_gain_at_half_beamwidth_is_3_db_down():
    # 20 - 3.01 * (2 * 7.5 / 15)^2
    assert antenna_gain(7.5, ANT) == pytest.approx(16.99, abs=0.01)


def test_side_lobe_level_for_15_degree_beam():
    # -0.4111 * ln(15) - 10.579, worked by hand: -1.11328 - 10.579
    assert ANT.side_lobe_gain == pytest.approx(-11.6923, abs=1e-4)
    assert antenna_gain(90.0, ANT) == ANT.side_lobe_gain


def test_main_lobe_edge():
    # main lobe spans 2.6 * 15 = 39 degrees; edge at 19.5
    assert ANT.main_lobe_width == pytest.approx(39.0)
    assert antenna_gain(19.5, ANT) == pytest.approx(20 - 3.01 * 2.6**2)
    assert antenna_gain(19.51, ANT) == ANT.side_lobe_gain


def test_clamped_main_lobe():
    p = AntennaParams(max_attenuation=10.0, clamp_main_lobe=True)
    assert antenna_gain(19.0, p) == pytest.approx(10.0)
    assert antenna_gain(3.0, p) == pytest.approx(20 - 3.01 * 0.16)


def test_gain_angle_domain():
    with pytest.raises(ValueError):
        antenna_gain(-0.1, ANT)
    with pytest.raises(ValueError):
        antenna_gain(180.5, ANT)


def test_bad_antenna_params():
    with pytest.raises(ConfigurationError):
        AntennaParams(half_power_beamwidth=0)
    with pytest.raises(ConfigurationError):
        AntennaParams(side_lobe_gain=25.0)


@pytest.mark.parametrize(
    "aim, toward, expected",
    [((1, 0, 0), (5, 0, 0), 0.0), ((1, 0, 0), (0, 2, 0), 90.0), ((1, 0, 0), (-1, 0, 0), 180.0), ((1, 0, 0), (1, 1, 0), 45.0)],
)
def test_off_boresight_angle(aim, toward, expected):
    o = Position3D(0, 0, 0)
    assert off_boresight_angle(o, Position3D(*aim), Position3D(*toward)) == pytest.approx(expected)


# --- propagation ----------------------------------------------------------------


def test_path_loss_far_segment_at_200_m():
    # 42.34 + 15.9 * log10(200)
    assert path_loss(200.0, PL) == pytest.approx(78.93, abs=0.01)


def test_path_loss_near_segment_at_100_m():
    # 108.75 - 14.5 * 2
    assert path_loss(100.0, PL) == pytest.approx(79.75, abs=0.01)


def test_path_loss_segments_meet_at_break_distance():
    near = 108.75 - 14.5 * math.log10(153.3)
    far = 42.34 + 15.9 * math.log10(153.3)
    assert path_loss(153.3, PL) == pytest.approx(near)
    assert path_loss(153.30001, PL) == pytest.approx(far, abs=1e-4)
    assert abs(near - far) < 0.05


def test_shadowing_only_when_enabled():
    assert path_loss(50.0, PL, shadow=4.0) == path_loss(50.0, PL)
    on = PathLossParams(shadowing_enabled=True)
    assert path_loss(50.0, on, shadow=4.0) == pytest.approx(path_loss(50.0, PL) + 4.0)


def test_path_loss_rejects_zero_distance():
    with pytest.raises(ValueError):
        path_loss(0.0, PL)


def test_received_power_chained_from_path_loss():
    radio = RadioParams(Band.F1, 28.0, 850.0, 30.0)
    assert received_power(20.0, 20.0, radio, 200.0, PL) == pytest.approx(-8.93, abs=0.01)


def test_received_power_budget():
    assert received_power(20.0, 15.0, F1, 100.0, PL) == pytest.approx(20 + 15 - 30 - 79.75)


def test_shadow_field_is_per_pair_and_order_independent():
    a = ShadowField(7, 5.85)
    x = a(BS, NodeId.mr(1))
    y = a(UAV, NodeId.mr(1))
    b = ShadowField(7, 5.85)
    assert b(UAV, NodeId.mr(1)) == y and b(BS, NodeId.mr(1)) == x
    assert x != y
    assert a(NodeId.mr(1), BS) != x
    assert ShadowField(7, 5.85, enabled=False)(BS, NodeId.mr(1)) == 0.0
    draws = np.array([ShadowField(s, 5.85)(BS, UAV) for s in range(2000)])
    assert abs(draws.mean()) < 0.4 and draws.std() == pytest.approx(5.85, rel=0.06)


# --- rate ---------------------------------------------------------------------


def test_rate_at_unit_sinr():
    # 0.5 * 850 MHz * log2(2)
    assert shannon_rate(1.0, 1.0, F1) == pytest.approx(425e6, abs=1e3)


def test_noise_floor():
    # -134 dBm/MHz over 850 MHz
    assert F1.noise_dbm == pytest.approx(-134 + 29.2942, abs=1e-4)


def test_db_round_trip():
    assert db_to_linear(30.0) == pytest.approx(1000.0)
    assert linear_to_db(db_to_linear(-47.3)) == pytest.approx(-47.3)


def test_bad_radio_params():
    with pytest.raises(ConfigurationError, match="bandwidth"):
        RadioParams(Band.F1, 28.0, -1.0, 0.0)
    with pytest.raises(ConfigurationError, match="efficiency"):
        RadioParams(Band.F1, 28.0, 850.0, 0.0, efficiency=1.5)


def _oracle_gain_db(origin, aim, toward):
    a, b = np.subtract(aim, origin), np.subtract(toward, origin)
    ang = np.degrees(np.arccos(np.clip(a @ b / np.linalg.norm(a) / np.linalg.norm(b), -1, 1)))
    if ang <= 19.5:
        return 20.0 - 3.01 * (ang / 7.5) ** 2
    return -0.4111 * np.log(15.0) - 10.579


def _oracle_pl_db(d):
    return 108.75 - 14.5 * np.log10(d) if d <= 153.3 else 42.34 + 15.9 * np.log10(d)


def _oracle_rx_mw(tx, tx_aim, rx, rx_aim, pt=-30.0):
    d = np.linalg.norm(np.subtract(rx, tx))
    g = _oracle_gain_db(tx, tx_aim, rx) + _oracle_gain_db(rx, rx_aim, tx)
    return 10 ** ((pt + g - _oracle_pl_db(d)) / 10)


GEOM = {
    BS: (0.0, 25.0, 10.0),
    UAV: (-150.0, 25.0, 100.0),
    NodeId.mr(0): (-4.0, 0.0, 2.5),
    NodeId.mr(1): (-60.0, 0.0, 2.5),
    NodeId.mr(2): (-170.0, 0.0, 2.5),
    EVE: (-90.0, 0.0, 2.5),
}
POS = {k: Position3D(*v) for k, v in GEOM.items()}


def _link(i, tx, rx):
    band = Band.F1 if tx == BS else Band.F2
    role = LinkRole.DIRECT if tx == BS and rx != UAV else (LinkRole.BS_TO_UAV if rx == UAV else LinkRole.UAV_TO_MR)
    return Link(i, i, tx, rx, band, role, 1e6)


def test_link_rate_matches_independent_sinr_computation():
    params = ChannelParams()
    a = _link(0, BS, NodeId.mr(0))
    b = _link(1, BS, NodeId.mr(1))
    c = _link(2, BS, UAV)
    s = _oracle_rx_mw(GEOM[BS], GEOM[NodeId.mr(0)], GEOM[NodeId.mr(0)], GEOM[BS])
    i_b = _oracle_rx_mw(GEOM[BS], GEOM[NodeId.mr(1)], GEOM[NodeId.mr(0)], GEOM[BS])
    i_c = _oracle_rx_mw(GEOM[BS], GEOM[UAV], GEOM[NodeId.mr(0)], GEOM[BS])
    noise = 10 ** ((-134 + 10 * np.log10(850)) / 10)
    expected = 0.5 * 850e6 * np.log2(1 + s / (noise + i_b + i_c))
    assert link_rate(a, [a, b, c], POS, params) == pytest.approx(expected, rel=1e-9)
    alone = 0.5 * 850e6 * np.log2(1 + s / noise)
    assert link_rate(a, [a], POS, params) == pytest.approx(alone, rel=1e-9)
    assert linear_to_db(s) == pytest.approx(signal_power(a, POS, params), abs=1e-9)
    assert linear_to_db(i_b) == pytest.approx(interference_power(b, a, POS, params), abs=1e-9)


def test_uav_band_ignores_bs_band_links():
    params = ChannelParams()
    u = _link(0, UAV, NodeId.mr(2))
    b = _link(1, BS, NodeId.mr(1))
    assert link_rate(u, [u, b], POS, params) == link_rate(u, [u], POS, params)
    s = _oracle_rx_mw(GEOM[UAV], GEOM[NodeId.mr(2)], GEOM[NodeId.mr(2)], GEOM[UAV])
    noise = 10 ** ((-134 + 10 * np.log10(1500)) / 10)
    assert link_rate(u, [u], POS, params) == pytest.approx(0.5 * 1500e6 * np.log2(1 + s / noise), rel=1e-9)
    with pytest.raises(ValueError):
        interference_power(b, u, POS, params)
    with pytest.raises(ValueError):
        interference_power(u, u, POS, params)


def test_eavesdropper_rate_and_secrecy():
    params = ChannelParams()
    a = _link(0, BS, NodeId.mr(1))
    b = _link(1, BS, NodeId.mr(0))
    # eavesdropper beam faces the BS; link b's beam leaks in as interference
    s = _oracle_rx_mw(GEOM[BS], GEOM[NodeId.mr(1)], GEOM[EVE], GEOM[BS])
    j = _oracle_rx_mw(GEOM[BS], GEOM[NodeId.mr(0)], GEOM[EVE], GEOM[BS])
    noise = 10 ** ((-134 + 10 * np.log10(850)) / 10)
    ce = 0.5 * 850e6 * np.log2(1 + s / (noise + j))
    assert eavesdropper_rate(a, [a, b], POS, params) == pytest.approx(ce, rel=1e-9)
    cm = link_rate(a, [a, b], POS, params)
    assert secrecy_admissible(a, [a, b], POS, params) == (ce < 0.1 * cm)
    with pytest.raises(ValueError):
        eavesdropper_rate(_link(2, UAV, NodeId.mr(2)), [], POS, params)
    with pytest.raises(ValueError):
        secrecy_admissible(_link(2, UAV, NodeId.mr(2)), [], POS, params)


def test_omni_eavesdropper_has_0_dbi_receive_gain():
    params = ChannelParams(eavesdropper_directional=False)
    a = _link(0, BS, NodeId.mr(1))
    d = np.linalg.norm(np.subtract(GEOM[EVE], GEOM[BS]))
    pr = -30.0 + _oracle_gain_db(GEOM[BS], GEOM[NodeId.mr(1)], GEOM[EVE]) - _oracle_pl_db(d)
    noise = 10 ** ((-134 + 10 * np.log10(850)) / 10)
    expected = 0.5 * 850e6 * np.log2(1 + 10 ** (pr / 10) / noise)
    assert eavesdropper_rate(a, [a], POS, params) == pytest.approx(expected, rel=1e-9)


def test_secrecy_ratio_is_strict():
    assert not secrecy_ok(10.0, 1.0)
    assert secrecy_ok(10.0, 0.999)
    assert secrecy_capacity(10.0, 1.0) == 9.0


def test_achieved_throughput():
    frame = FrameConfig()
    r = 1e9
    # all 8000 slots at 1 Gbit/s over a 144.85 ms frame
    assert achieved_throughput([r] * 8000, frame) == pytest.approx(r * 0.144 / 0.14485)
    with pytest.raises(ValueError):
        achieved_throughput([r] * 8001, frame)


def test_frame_defaults_and_demand():
    f = FrameConfig()
    assert (f.slot_count, f.slot_duration, f.scheduling_phase) == (8000, 18e-6, 850e-6)
    assert f.duration == pytest.approx(0.14485)
    assert f.demand_volume(100e6) == pytest.approx(14.485e6)
    with pytest.raises(ConfigurationError):
        FrameConfig(slot_count=0)


def test_link_band_must_match_transmitter():
    with pytest.raises(ValueError):
        Link(0, 0, BS, NodeId.mr(0), Band.F2, LinkRole.DIRECT, 1.0)


def test_path_loss_overrides():
    rural = PathLossParams(alpha_near=100.0)
    params = ChannelParams(path_loss_overrides={"bs_uav": rural})
    assert params.path_loss_for(BS, UAV) is rural
    assert params.path_loss_for(BS, NodeId.mr(0)) is params.path_loss
    with pytest.raises(ConfigurationError):
        ChannelParams(path_loss_overrides={"nope": rural})
