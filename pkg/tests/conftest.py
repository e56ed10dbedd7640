from dataclasses import replace

import pytest

from hsrsched.channel import ChannelParams, FrameConfig
from hsrsched.scenario import NodeId, ScenarioConfig, Scenario, Flow, build_scenario
from hsrsched.world import World


def make_world(flow_count=6, seed=0, slot_count=8000, channel=None, **scenario_kw) -> World:
    sc = build_scenario(ScenarioConfig(flow_count=flow_count, **scenario_kw), seed)
    return World(sc, channel or ChannelParams(), FrameConfig(slot_count=slot_count))


def world_with_flows(flows, seed=0, slot_count=8000, channel=None, **scenario_kw) -> World:
    """World with hand-picked ``(mr_index, qos)`` flows on the default geometry."""
    base = build_scenario(ScenarioConfig(flow_count=0, **scenario_kw), seed)
    chosen = tuple(Flow(k, NodeId.mr(mr), q) for k, (mr, q) in enumerate(flows))
    return World(replace(base, flows=chosen), channel or ChannelParams(), FrameConfig(slot_count=slot_count))


@pytest.fixture
def world():
    return make_world()
