"""Static experiment description: radars, comm links, targets, fusion grid,
and the derived asynchronous measurement schedule.

Scenario files are YAML with four sections (``grid``, ``radars``, ``comm``,
``targets``); SI units throughout, complex gains as ``[re, im]`` pairs.  See
the schema documented in the README and the shipped ``data/default.yaml``.
"""

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Optional

import numpy as np
import yaml


class ScenarioError(ValueError):
    """Malformed or invariant-violating scenario description."""


class RadarKind(Enum):
    MMR = "mmr"  # co-located MIMO radar: power optimized, dwell fixed
    PAR = "par"  # phased array: dwell optimized, power fixed
    MSR = "msr"  # mechanical scanning: both fixed


@dataclass
class RadarNode:
    id: int
    kind: RadarKind
    position: np.ndarray          # (2,) meters
    bandwidth: float              # Hz
    beamwidth: float              # rad, 3 dB receive beamwidth
    noise_var: float              # W
    range_const: float            # dimensionless measurement-error constant
    bearing_const: float
    initial_time: np.ndarray      # (Q,) s, first illumination per target
    revisit_interval: np.ndarray  # (Q,) s
    fixed_dwell: Optional[float] = None   # s, MMR and MSR
    fixed_power: Optional[float] = None   # W, PAR and MSR
    power_budget: Optional[float] = None  # W, MMR only
    time_budget: Optional[float] = None   # s, PAR only


@dataclass
class CommSystem:
    num_links: int
    noise_var: float                 # W
    power_budget: float              # W, base-station total
    throughput_floor: np.ndarray     # (J,) or (J, K) nats
    radar_to_comm_gain: np.ndarray   # (J, N) complex
    comm_to_radar_gain: np.ndarray   # (N, J) complex

    @property
    def alpha_r_sq(self) -> np.ndarray:
        """|alpha^r|^2, interference gain radar -> downlink, (J, N)."""
        return np.abs(self.radar_to_comm_gain) ** 2

    @property
    def alpha_c_sq(self) -> np.ndarray:
        """|alpha^c|^2, interference gain downlink -> radar, (N, J)."""
        return np.abs(self.comm_to_radar_gain) ** 2

    def floor(self, j: int, k: int) -> float:
        """Throughput floor for link j at fusion interval k."""
        if self.throughput_floor.ndim == 1:
            return float(self.throughput_floor[j])
        return float(self.throughput_floor[j, k])


@dataclass
class TargetTruth:
    id: int
    initial_state: np.ndarray        # (4,) [x, vx, y, vy]
    process_noise_intensity: float   # m^2/s^3
    rcs: np.ndarray                  # (N,) m^2, per radar


@dataclass
class FusionGrid:
    interval_length: float   # T0, s
    num_intervals: int       # K
    start_time: float = 0.0  # t_1

    def boundary(self, k: int) -> tuple[float, float]:
        """Half-open window (t_k, t_{k+1}] of fusion interval k (0-based)."""
        t0 = self.start_time + k * self.interval_length
        return t0, t0 + self.interval_length


@dataclass
class Scenario:
    radars: list[RadarNode]
    comm: CommSystem
    targets: list[TargetTruth]
    grid: FusionGrid

    @property
    def n_radars(self) -> int:
        return len(self.radars)

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    @property
    def mmr_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.radars) if r.kind is RadarKind.MMR]

    @property
    def par_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.radars) if r.kind is RadarKind.PAR]

    @property
    def msr_indices(self) -> list[int]:
        return [i for i, r in enumerate(self.radars) if r.kind is RadarKind.MSR]


@dataclass
class MeasurementSchedule:
    """Per (radar, target, interval) measurement times and counts."""

    counts: np.ndarray  # (N, Q, K) int
    _times: dict = field(default_factory=dict, repr=False)

    def times(self, i: int, q: int, k: int) -> np.ndarray:
        return self._times[(i, q, k)]


_KIND_ORDER = {RadarKind.MMR: 0, RadarKind.PAR: 1, RadarKind.MSR: 2}


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def _get(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"{where}: missing required field '{key}'")
    return section[key]


def _per_target(value, n_targets: int, where: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n_targets, arr[0])
    _require(arr.size == n_targets,
             f"{where}: expected scalar or {n_targets} per-target values")
    return arr


def _complex_matrix(rows, shape: tuple[int, int], where: str) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    _require(arr.shape == (*shape, 2),
             f"{where}: expected {shape[0]}x{shape[1]} [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _parse_radar(section: dict, idx: int, n_targets: int) -> RadarNode:
    where = f"radars[{idx}]"
    kind_raw = str(_get(section, "kind", where)).lower()
    try:
        kind = RadarKind(kind_raw)
    except ValueError:
        raise ScenarioError(f"{where}: unknown radar kind '{kind_raw}'") from None
    node = RadarNode(
        id=int(section.get("id", idx + 1)),
        kind=kind,
        position=np.asarray(_get(section, "position", where), dtype=float),
        bandwidth=float(_get(section, "bandwidth", where)),
        beamwidth=float(_get(section, "beamwidth", where)),
        noise_var=float(_get(section, "noise_var", where)),
        range_const=float(_get(section, "range_const", where)),
        bearing_const=float(_get(section, "bearing_const", where)),
        initial_time=_per_target(_get(section, "initial_time", where),
                                 n_targets, where),
        revisit_interval=_per_target(_get(section, "revisit_interval", where),
                                     n_targets, where),
    )
    if kind in (RadarKind.MMR, RadarKind.MSR):
        node.fixed_dwell = float(_get(section, "fixed_dwell", where))
    if kind in (RadarKind.PAR, RadarKind.MSR):
        node.fixed_power = float(_get(section, "fixed_power", where))
    if kind is RadarKind.MMR:
        node.power_budget = float(_get(section, "power_budget", where))
    if kind is RadarKind.PAR:
        node.time_budget = float(_get(section, "time_budget", where))
    return node


def validate(scenario: Scenario) -> None:
    """Check every scenario invariant; raise ScenarioError naming the first
    violation."""
    grid = scenario.grid
    _require(grid.interval_length > 0, "grid.interval_length must be > 0")
    _require(grid.num_intervals >= 1, "grid.num_intervals must be >= 1")

    q_n = scenario.n_targets
    _require(q_n >= 1, "at least one target required")

    order = [_KIND_ORDER[r.kind] for r in scenario.radars]
    _require(order == sorted(order),
             "radars must be listed grouped as MMR, then PAR, then MSR")

    for i, r in enumerate(scenario.radars):
        where = f"radars[{i}]"
        _require(r.position.shape == (2,), f"{where}: position must be (x, y)")
        _require(r.bandwidth > 0, f"{where}: bandwidth must be > 0")
        _require(r.beamwidth > 0, f"{where}: beamwidth must be > 0")
        _require(r.noise_var > 0, f"{where}: noise_var must be > 0")
        _require(r.range_const > 0, f"{where}: range_const must be > 0")
        _require(r.bearing_const > 0, f"{where}: bearing_const must be > 0")
        _require(np.all(r.revisit_interval > 0),
                 f"{where}: revisit_interval must be > 0")
        _require(np.all(r.initial_time >= 0),
                 f"{where}: initial_time must be >= 0")
        if r.kind in (RadarKind.MMR, RadarKind.MSR):
            _require(r.fixed_dwell is not None and r.fixed_dwell > 0,
                     f"{where}: fixed_dwell must be > 0")
            _require(np.ptp(r.revisit_interval) == 0,
                     f"{where}: {r.kind.value} revisit_interval must be "
                     "identical across targets")
        if r.kind in (RadarKind.PAR, RadarKind.MSR):
            _require(r.fixed_power is not None and r.fixed_power > 0,
                     f"{where}: fixed_power must be > 0")
        if r.kind is RadarKind.MMR:
            _require(r.power_budget is not None and r.power_budget > 0,
                     f"{where}: power_budget must be > 0")
        if r.kind is RadarKind.PAR:
            _require(r.time_budget is not None and r.time_budget > 0,
                     f"{where}: time_budget must be > 0")

    comm = scenario.comm
    n = scenario.n_radars
    _require(comm.num_links >= 1, "comm.num_links must be >= 1")
    _require(comm.noise_var > 0, "comm.noise_var must be > 0")
    _require(comm.power_budget > 0, "comm.power_budget must be > 0")
    _require(np.all(comm.throughput_floor >= 0),
             "comm.throughput_floor must be >= 0")
    _require(comm.radar_to_comm_gain.shape == (comm.num_links, n),
             "comm.radar_to_comm_gain must be J x N")
    _require(comm.comm_to_radar_gain.shape == (n, comm.num_links),
             "comm.comm_to_radar_gain must be N x J")
    _require(np.all(np.isfinite(comm.radar_to_comm_gain))
             and np.all(np.isfinite(comm.comm_to_radar_gain)),
             "comm gains must be finite")

    for t_idx, t in enumerate(scenario.targets):
        where = f"targets[{t_idx}]"
        _require(t.initial_state.shape == (4,),
                 f"{where}: initial_state must be [x, vx, y, vy]")
        _require(np.all(np.isfinite(t.initial_state)),
                 f"{where}: initial_state must be finite")
        _require(t.process_noise_intensity >= 0,
                 f"{where}: process_noise_intensity must be >= 0")
        _require(t.rcs.shape == (n,), f"{where}: rcs must give one value per radar")
        _require(np.all(t.rcs > 0), f"{where}: rcs must be > 0")


def load_scenario(path) -> Scenario:
    """Load and validate a scenario YAML file."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"parse error in {path}: top level must be a mapping")

    for section in ("grid", "radars", "comm", "targets"):
        if section not in raw:
            raise ScenarioError(f"missing section '{section}'")

    g = raw["grid"]
    grid = FusionGrid(
        interval_length=float(_get(g, "interval_length", "grid")),
        num_intervals=int(_get(g, "num_intervals", "grid")),
        start_time=float(g.get("start_time", 0.0)),
    )

    targets_raw = raw["targets"]
    q_n = len(targets_raw)
    radars = [_parse_radar(sec, i, q_n) for i, sec in enumerate(raw["radars"])]
    n = len(radars)

    c = raw["comm"]
    j_n = int(_get(c, "num_links", "comm"))
    floor = np.asarray(_get(c, "throughput_floor", "comm"), dtype=float)
    comm = CommSystem(
        num_links=j_n,
        noise_var=float(_get(c, "noise_var", "comm")),
        power_budget=float(_get(c, "power_budget", "comm")),
        throughput_floor=floor,
        radar_to_comm_gain=_complex_matrix(
            _get(c, "radar_to_comm_gain", "comm"), (j_n, n),
            "comm.radar_to_comm_gain"),
        comm_to_radar_gain=_complex_matrix(
            _get(c, "comm_to_radar_gain", "comm"), (n, j_n),
            "comm.comm_to_radar_gain"),
    )

    targets = []
    for t_idx, sec in enumerate(targets_raw):
        where = f"targets[{t_idx}]"
        targets.append(TargetTruth(
            id=int(sec.get("id", t_idx + 1)),
            initial_state=np.asarray(_get(sec, "initial_state", where), dtype=float),
            process_noise_intensity=float(_get(sec, "process_noise_intensity", where)),
            rcs=np.asarray(_get(sec, "rcs", where), dtype=float),
        ))

    scenario = Scenario(radars=radars, comm=comm, targets=targets, grid=grid)
    validate(scenario)
    return scenario


def default_scenario_path() -> str:
    """Path of the packaged default scenario file."""
    return str(resources.files("hrcn").joinpath("data/default.yaml"))


def build_schedule(scenario: Scenario) -> MeasurementSchedule:
    """Derive measurement times per (radar, target, interval).

    Times are the arithmetic progression initial_time + n * revisit_interval
    intersected with the half-open window (t_k, t_{k+1}]; boundary points
    belong to the interval they close.
    """
    grid = scenario.grid
    n, q_n, k_n = scenario.n_radars, scenario.n_targets, grid.num_intervals
    horizon = grid.start_time + k_n * grid.interval_length
    counts = np.zeros((n, q_n, k_n), dtype=int)
    times: dict = {}
    for i, radar in enumerate(scenario.radars):
        for q in range(q_n):
            t0 = radar.initial_time[q]
            rev = radar.revisit_interval[q]
            n_pts = max(0, int(np.floor((horizon - t0) / rev)) + 1)
            pts = t0 + rev * np.arange(n_pts)
            pts = pts[pts <= horizon]
            for k in range(k_n):
                lo, hi = grid.boundary(k)
                a = np.searchsorted(pts, lo, side="right")
                b = np.searchsorted(pts, hi, side="right")
                times[(i, q, k)] = pts[a:b].copy()
                counts[i, q, k] = b - a
    return MeasurementSchedule(counts=counts, _times=times)
