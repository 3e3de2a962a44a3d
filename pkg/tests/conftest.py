"""Shared fixtures: the packaged default scenario and a small single-radar
scenario factory for targeted tests."""

import numpy as np
import pytest

from hrcn.scenario import (CommSystem, FusionGrid, RadarKind, RadarNode,
                           Scenario, TargetTruth, build_schedule,
                           default_scenario_path, load_scenario, validate)


@pytest.fixture(scope="session")
def scenario():
    return load_scenario(default_scenario_path())


@pytest.fixture(scope="session")
def schedule(scenario):
    return build_schedule(scenario)


def make_mini_scenario(t0=6.0, num_intervals=1, start_time=0.0,
                       initial_time=2.0, revisit=2.0, fixed_dwell=0.02,
                       power_budget=100.0, comm_noise_var=0.1,
                       comm_power_budget=30.0, throughput_floor=0.0,
                       radar_to_comm=0.01, comm_to_radar=0.1):
    """One MMR, one downlink, one target; every knob overridable."""
    radar = RadarNode(
        id=1, kind=RadarKind.MMR, position=np.array([0.0, 0.0]),
        bandwidth=1e6, beamwidth=0.05, noise_var=1.0,
        range_const=1e-10, bearing_const=1.6e-3,
        initial_time=np.array([initial_time]),
        revisit_interval=np.array([revisit]),
        fixed_dwell=fixed_dwell, power_budget=power_budget)
    comm = CommSystem(
        num_links=1, noise_var=comm_noise_var,
        power_budget=comm_power_budget,
        throughput_floor=np.array([throughput_floor]),
        radar_to_comm_gain=np.array([[radar_to_comm + 0j]]),
        comm_to_radar_gain=np.array([[comm_to_radar + 0j]]))
    target = TargetTruth(id=1,
                         initial_state=np.array([2000.0, 100.0, 3000.0, 60.0]),
                         process_noise_intensity=1.0, rcs=np.array([1.0]))
    sc = Scenario(radars=[radar], comm=comm, targets=[target],
                  grid=FusionGrid(interval_length=t0,
                                  num_intervals=num_intervals,
                                  start_time=start_time))
    validate(sc)
    return sc
