"""Named, parameterized experiments producing result matrices.

Each operation optimizes a surface configuration against a synthesized
environment (ping-style eavesdropping of the considered devices feeds the
cost function, exploiting channel reciprocity) and then evaluates the
jamming outcome: RSSI and JSR matrices, packet-rate power sweeps, adaptive
throughput, spatial scans.

All randomness flows from the scenario seed through named sub-streams
(environment, optimizer, measurement, evaluation, link, masks), so any run
is bit-reproducible.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import link, optimizer
from .channel import (
    Environment,
    EnvironmentSpec,
    Position,
    as_position,
    direct_channel,
    environment_to_dict,
    move_device,
    perturb_environment,
    received_rssi,
    ris_subchannels,
    ris_subchannels_batch,
    synthesize_environment,
)
from .optimizer import (
    CostWeights,
    Trace,
    run_optimizer,
)
from .ris import RisConfig, compose_channel, random_config

MODES = (
    "packet-rate",
    "throughput",
    "jsr-matrix",
    "heatmap",
    "element-sweep",
    "displacement",
    "exclusion",
    "directional-baseline",
    "perturbation",
)

# Modes that run without an explicit target set.
_TARGETLESS_MODES = ("jsr-matrix", "exclusion")

# Sub-stream tags off the master seed (channel module uses 11..14).
_STREAM_OPTIMIZER = 21
_STREAM_MEASURE = 22
_STREAM_EVAL = 23
_STREAM_LINK = 24
_STREAM_MASK = 25
_STREAM_RANDCONF = 26

DISRUPTED_RATE = 5.0        # pkt/s at or below which a device counts as jammed
OPERATIONAL_RATE = 90.0     # pkt/s at or above which a device counts as healthy
AUTO_POWER_MARGIN_DB = 3.0  # headroom above the target's disruption knee
THROUGHPUT_POWER_MARGIN_DB = 2.0
LINK_SIM_WINDOWS = 40
_TINY_GAIN = 1e-30


class ScenarioError(ValueError):
    """Scenario validation failure; carries the offending field path."""

    def __init__(self, message: str, fieldpath: str = ""):
        super().__init__(message if not fieldpath else f"{fieldpath}: {message}")
        self.fieldpath = fieldpath


@dataclass(frozen=True)
class PowerSettings:
    jam_dbm: float | None = None      # None: auto, knee + margin
    ap_dbm: float = 15.0
    device_tx_dbm: float = 15.0
    sweep_from_dbm: float = -80.0
    sweep_to_dbm: float = -10.0
    sweep_step_db: float = 1.0

    def __post_init__(self):
        if self.sweep_step_db <= 0:
            raise ScenarioError("sweep step must be positive",
                                "powers.sweep_step_db")
        if self.sweep_to_dbm <= self.sweep_from_dbm:
            raise ScenarioError("sweep range must be increasing",
                                "powers.sweep_to_dbm")

    def sweep_grid(self) -> np.ndarray:
        n = int(round((self.sweep_to_dbm - self.sweep_from_dbm)
                      / self.sweep_step_db)) + 1
        return self.sweep_from_dbm + self.sweep_step_db * np.arange(n)


@dataclass(frozen=True)
class OptimizerSettings:
    table_size: int = optimizer.DEFAULT_TABLE_SIZE
    steps: int = optimizer.DEFAULT_STEPS
    reeval_period: int = optimizer.DEFAULT_REEVAL_PERIOD
    epsilon: float = optimizer.DEFAULT_EPSILON
    w_mean: float = 0.3
    w_extreme: float = 0.7
    meas_sigma_db: float = 0.5
    quantize: bool = True

    def __post_init__(self):
        if self.table_size < 2:
            raise ScenarioError("table_size must be >= 2", "optimizer.table_size")
        if self.steps < 0:
            raise ScenarioError("steps must be >= 0", "optimizer.steps")

    def cost_weights(self) -> CostWeights:
        return CostWeights(self.w_mean, self.w_extreme)


@dataclass(frozen=True)
class ScenarioSpec:
    """One experiment: environment, roles, powers, optimizer, mode knobs."""

    environment: EnvironmentSpec | Environment
    mode: str
    targets: tuple[str, ...] = ()
    seed: int = 1
    name: str = "scenario"
    ap_id: str = "D0"
    non_targets: tuple[str, ...] | None = None
    hidden: tuple[str, ...] = ()
    powers: PowerSettings = field(default_factory=PowerSettings)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    mode_params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ScenarioError(
                f"unknown mode {self.mode!r}; valid modes: {', '.join(MODES)}",
                "mode")
        devices = self._device_ids()
        if self.ap_id not in devices:
            raise ScenarioError(f"access point {self.ap_id!r} is not in the "
                                f"device roster", "ap_id")
        targets = tuple(self.targets)
        object.__setattr__(self, "targets", targets)
        for t in targets:
            if t not in devices:
                raise ScenarioError(f"target {t!r} has no position in the "
                                    f"roster", "targets")
        if self.ap_id in targets:
            raise ScenarioError(f"the access point {self.ap_id!r} cannot be a "
                                f"target", "targets")
        if not targets and self.mode not in _TARGETLESS_MODES:
            raise ScenarioError(f"mode {self.mode!r} needs a non-empty target "
                                f"set", "targets")
        if self.non_targets is None:
            non_targets = tuple(d for d in _natural_sorted(devices)
                                if d not in targets)
        else:
            non_targets = tuple(self.non_targets)
            overlap = sorted(set(non_targets) & set(targets))
            if overlap:
                raise ScenarioError(
                    f"devices {overlap} appear in both the target and "
                    f"non-target sets", "non_targets")
            for d in non_targets:
                if d not in devices:
                    raise ScenarioError(f"non-target {d!r} has no position in "
                                        f"the roster", "non_targets")
        object.__setattr__(self, "non_targets", non_targets)
        hidden = tuple(self.hidden)
        for h in hidden:
            if h not in non_targets:
                raise ScenarioError(f"hidden device {h!r} must be a "
                                    f"non-target", "hidden")
        object.__setattr__(self, "hidden", hidden)
        self._check_mode_params()

    def _device_ids(self) -> tuple[str, ...]:
        if isinstance(self.environment, Environment):
            return tuple(self.environment.devices)
        devices = self.environment.devices
        ids = tuple(devices) if isinstance(devices, Mapping) \
            else tuple(k for k, _ in devices)
        return ids

    def _check_mode_params(self):
        params = self.mode_params
        if self.mode == "exclusion":
            exclude = params.get("exclude")
            if not exclude:
                raise ScenarioError("exclusion mode needs mode_params.exclude",
                                    "mode_params.exclude")
            if exclude not in self._device_ids() or exclude == self.ap_id:
                raise ScenarioError(f"excluded device {exclude!r} must be a "
                                    f"non-AP roster device",
                                    "mode_params.exclude")
        elif self.mode == "element-sweep":
            counts = params.get("counts")
            if not counts:
                raise ScenarioError("element-sweep mode needs "
                                    "mode_params.counts", "mode_params.counts")
            if list(counts) != sorted(counts):
                raise ScenarioError("counts must be sorted ascending",
                                    "mode_params.counts")
        elif self.mode == "displacement":
            if not params.get("minimized"):
                raise ScenarioError("displacement mode needs "
                                    "mode_params.minimized",
                                    "mode_params.minimized")

    # -- helpers -----------------------------------------------------------

    def eval_devices(self) -> tuple[str, ...]:
        """Non-AP devices, natural order; the rows/columns of result matrices."""
        return tuple(d for d in _natural_sorted(self._device_ids())
                     if d != self.ap_id)

    def visible_non_targets(self) -> tuple[str, ...]:
        return tuple(d for d in self.non_targets if d not in self.hidden)

    def build_environment(self) -> Environment:
        if isinstance(self.environment, Environment):
            return self.environment
        return synthesize_environment(self.environment, self.seed)


def _natural_key(name: str):
    return tuple(int(part) if part.isdigit() else part
                 for part in re.split(r"(\d+)", name))


def _natural_sorted(names) -> list[str]:
    return sorted(names, key=_natural_key)


# ---------------------------------------------------------------------------
# Reference desk deployment: eleven devices in four clusters, attacker at the
# west wall of a 9.0 m x 7.5 m floor.  Cluster 3 is the lone device next to
# the access point; positions are configurable via desk_environment_spec.
# ---------------------------------------------------------------------------

DESK_ATTACKER = Position(0.8, 3.8, 1.2)

DESK_DEVICES: dict[str, Position] = {
    "D0": Position(5.2, 5.8, 1.5),    # access point
    "D1": Position(2.5, 6.1, 0.9),
    "D2": Position(2.8, 5.9, 0.9),
    "D3": Position(2.45, 5.7, 0.9),
    "D4": Position(7.7, 6.5, 0.9),
    "D5": Position(8.0, 6.3, 0.9),
    "D6": Position(7.6, 6.15, 0.9),
    "D7": Position(4.6, 4.9, 1.2),
    "D8": Position(6.0, 1.9, 0.9),
    "D9": Position(6.4, 1.75, 0.9),
    "D10": Position(6.2, 1.5, 0.9),
}

DESK_CLUSTERS = {
    "C1": ("D1", "D2", "D3"),
    "C2": ("D4", "D5", "D6"),
    "C3": ("D7",),
    "C4": ("D8", "D9", "D10"),
}


def desk_environment_spec(**overrides) -> EnvironmentSpec:
    kwargs = dict(devices=dict(DESK_DEVICES), attacker_position=DESK_ATTACKER)
    kwargs.update(overrides)
    return EnvironmentSpec(**kwargs)


def desk_scenario(mode: str, targets=(), seed: int = 1, **overrides) -> ScenarioSpec:
    kwargs = dict(environment=desk_environment_spec(), mode=mode,
                  targets=tuple(targets), seed=seed, name=f"desk-{mode}")
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


# ---------------------------------------------------------------------------
# Measurement oracle
# ---------------------------------------------------------------------------


class RssiOracle:
    """Eavesdropped per-device RSSI for a candidate configuration.

    By reciprocity the eavesdropped device-to-attacker gain equals the
    attacker-to-device gain, so the oracle evaluates the same composed
    surface channel that active jamming later uses.  Hidden devices are
    simply absent from the non-target list and never appear in the output.
    """

    def __init__(self, env: Environment, targets: Sequence[str],
                 non_targets: Sequence[str], device_tx_dbm: float,
                 rng: np.random.Generator, sigma_db: float = 0.5,
                 quantize: bool = True):
        self.env = env
        self.targets = tuple(targets)
        self.non_targets = tuple(non_targets)
        self.device_tx_dbm = float(device_tx_dbm)
        self.rng = rng
        self.sigma_db = float(sigma_db)
        self.quantize = bool(quantize)
        self._h_targets = _gain_matrix(env, self.targets)
        self._h_non_targets = _gain_matrix(env, self.non_targets)
        self.calls = 0

    def _rssi(self, matrix: np.ndarray, coeff: np.ndarray) -> np.ndarray:
        if matrix.shape[0] == 0:
            return np.empty(0)
        gains = np.abs(matrix @ coeff)
        power = self.device_tx_dbm + 20.0 * np.log10(np.maximum(gains, _TINY_GAIN))
        if self.quantize:
            return received_rssi(self.env, power, self.rng,
                                 self.sigma_db).astype(float)
        if self.sigma_db > 0:
            power = power + self.rng.normal(0.0, self.sigma_db, power.shape)
        return power

    def __call__(self, config: RisConfig) -> tuple[np.ndarray, np.ndarray]:
        coeff = config.coefficients()
        self.calls += 1
        return self._rssi(self._h_targets, coeff), \
            self._rssi(self._h_non_targets, coeff)


class MaskedOracle:
    """Oracle over a subset of active elements; the rest stay frozen."""

    def __init__(self, inner: RssiOracle, active: np.ndarray,
                 frozen_bits: np.ndarray):
        self.inner = inner
        self.active = np.asarray(active, dtype=int)
        self.full = np.asarray(frozen_bits, dtype=np.uint8).copy()

    def __call__(self, config: RisConfig) -> tuple[np.ndarray, np.ndarray]:
        full = self.full.copy()
        full[self.active] = config.bits
        return self.inner(RisConfig(full))

    def expand(self, config: RisConfig) -> RisConfig:
        full = self.full.copy()
        full[self.active] = config.bits
        return RisConfig(full)


def _gain_matrix(env: Environment, device_ids: Sequence[str]) -> np.ndarray:
    """Stacked surface sub-channel vectors, one row per device."""
    if not device_ids:
        return np.empty((0, env.n_elements), dtype=complex)
    return np.stack([
        ris_subchannels(env, env.devices[d], device=d) for d in device_ids
    ])


def _composed_gain_db(env: Environment, config: RisConfig,
                      device_ids: Sequence[str]) -> np.ndarray:
    matrix = _gain_matrix(env, device_ids)
    gains = np.abs(matrix @ config.coefficients())
    return 20.0 * np.log10(np.maximum(gains, _TINY_GAIN))


def _ap_signal_dbm(env: Environment, spec: ScenarioSpec,
                   device_ids: Sequence[str]) -> np.ndarray:
    return np.array([
        spec.powers.ap_dbm
        + 20.0 * math.log10(abs(direct_channel(env, spec.ap_id,
                                               env.devices[d])))
        for d in device_ids
    ])


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class TargetRow:
    """One optimized target set evaluated on every device."""

    targets: tuple[str, ...]
    attacker_rssi_dbm: dict[str, float]
    ap_rssi_dbm: dict[str, float]
    jsr_db: dict[str, float]
    norm_jsr_db: dict[str, float]
    packet_rate: dict[str, float] | None = None
    throughput_mbps: dict[str, float] | None = None
    operating_jam_dbm: float | None = None
    target_knee_dbm: float | None = None
    first_nontarget_knee_dbm: float | None = None
    margin_db: float | None = None

    def label(self) -> str:
        return "+".join(self.targets)

    def separation_db(self) -> float:
        """Rejection of the loudest non-target in normalized-JSR terms."""
        others = [v for d, v in self.norm_jsr_db.items()
                  if d not in self.targets]
        return -max(others) if others else math.inf


_CSV_METRICS = ("attacker_rssi_dbm", "ap_rssi_dbm", "jsr_db", "norm_jsr_db",
                "packet_rate", "throughput_mbps")


@dataclass
class RunResult:
    scenario: str
    mode: str
    devices: tuple[str, ...]
    rows: list[TargetRow]
    extras: dict = field(default_factory=dict)

    def row_for(self, target: str) -> TargetRow:
        for row in self.rows:
            if target in row.targets:
                return row
        raise KeyError(f"no row targeting {target!r}")

    def long_records(self):
        for row in self.rows:
            label = row.label()
            for metric in _CSV_METRICS:
                values = getattr(row, metric)
                if values is None:
                    continue
                for device in self.devices:
                    yield (self.scenario, label, device, metric,
                           values[device])

    def write_csv(self, path) -> None:
        import csv as _csv
        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["scenario", "target_set", "device", "metric",
                             "value"])
            for record in self.long_records():
                writer.writerow(record[:4] + (format(record[4], ".10g"),))

    def to_json_dict(self) -> dict:
        rows = []
        for row in self.rows:
            entry = {
                "targets": list(row.targets),
                "attacker_rssi_dbm": row.attacker_rssi_dbm,
                "ap_rssi_dbm": row.ap_rssi_dbm,
                "jsr_db": row.jsr_db,
                "norm_jsr_db": row.norm_jsr_db,
                "operating_jam_dbm": row.operating_jam_dbm,
                "target_knee_dbm": row.target_knee_dbm,
                "first_nontarget_knee_dbm": row.first_nontarget_knee_dbm,
                "margin_db": row.margin_db,
            }
            if row.packet_rate is not None:
                entry["packet_rate"] = row.packet_rate
            if row.throughput_mbps is not None:
                entry["throughput_mbps"] = row.throughput_mbps
            rows.append(entry)
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "devices": list(self.devices),
            "rows": rows,
            "extras": _jsonify({k: v for k, v in self.extras.items()
                                if not k.startswith("_")}),
        }

    def traces(self) -> list[Trace]:
        return self.extras.get("_traces", [])


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, RisConfig):
        return obj.to_json()
    return obj


# ---------------------------------------------------------------------------
# Core evaluation machinery
# ---------------------------------------------------------------------------


def _run_index(spec: ScenarioSpec, target: str) -> int:
    """Stable per-target stream index: position in the natural device order."""
    return spec.eval_devices().index(target)


def _optimize(env: Environment, spec: ScenarioSpec, targets: Sequence[str],
              run_idx: int, visible_non_targets: Sequence[str] | None = None
              ) -> tuple[RisConfig, Trace, RssiOracle]:
    opt = spec.optimizer
    visible = (tuple(visible_non_targets) if visible_non_targets is not None
               else spec.visible_non_targets())
    oracle = RssiOracle(
        env, targets, visible, spec.powers.device_tx_dbm,
        np.random.default_rng([spec.seed, _STREAM_MEASURE, run_idx]),
        sigma_db=opt.meas_sigma_db, quantize=opt.quantize,
    )
    config, trace = run_optimizer(
        opt.table_size, opt.steps, env.n_elements, oracle,
        [spec.seed, _STREAM_OPTIMIZER, run_idx],
        weights=opt.cost_weights(), epsilon=opt.epsilon,
        reeval_period=opt.reeval_period,
        noise_floor_dbm=env.noise_floor_dbm,
    )
    return config, trace, oracle


def _sweep_rates(env: Environment, jam_gain_db: np.ndarray,
                 sig_dbm: np.ndarray, powers: np.ndarray,
                 mcs: int = link.MONITOR_MCS) -> np.ndarray:
    """Packet rates over a (power grid x device) lattice, fixed MCS."""
    jam_dbm = powers[:, None] + jam_gain_db[None, :]
    ratio = link.sjnr_db(sig_dbm[None, :], jam_dbm, env.noise_floor_dbm)
    return link.PACKETS_PER_SECOND * link.packet_success_prob(ratio, mcs)


def _knee_dbm(powers: np.ndarray, rates: np.ndarray) -> float | None:
    """Lowest swept power at which the device counts as disrupted."""
    hit = np.flatnonzero(rates <= DISRUPTED_RATE)
    return float(powers[hit[0]]) if hit.size else None


def _sweep_and_knees(env, spec, jam_gain_db, sig_dbm, devices, targets,
                     mcs=link.MONITOR_MCS, require_target_knee=True):
    powers = spec.powers.sweep_grid()
    rates = _sweep_rates(env, jam_gain_db, sig_dbm, powers, mcs)
    knees = {d: _knee_dbm(powers, rates[:, i]) for i, d in enumerate(devices)}
    target_knees = [knees[t] for t in targets]
    nt_knees = [k for d, k in knees.items()
                if d not in targets and k is not None]
    first_nt = min(nt_knees) if nt_knees else None
    if any(k is None for k in target_knees):
        if require_target_knee:
            missing = [t for t in targets if knees[t] is None]
            raise RuntimeError(
                f"sweep range {spec.powers.sweep_from_dbm}.."
                f"{spec.powers.sweep_to_dbm} dBm never disrupts target(s) "
                f"{missing}; extend the sweep")
        return powers, rates, knees, None, first_nt, None
    target_knee = max(target_knees)
    # A non-target that survives the whole sweep bounds the margin from below.
    margin = ((first_nt if first_nt is not None else spec.powers.sweep_to_dbm)
              - target_knee)
    return powers, rates, knees, target_knee, first_nt, margin


def _evaluate_row(env: Environment, spec: ScenarioSpec, config: RisConfig,
                  targets: Sequence[str], run_idx: int, *,
                  rates_mcs: int = link.MONITOR_MCS,
                  with_throughput: bool = False,
                  operating_override: float | None = None
                  ) -> tuple[TargetRow, dict]:
    devices = spec.eval_devices()
    targets = tuple(targets)
    jam_gain_db = _composed_gain_db(env, config, devices)
    sig_dbm = _ap_signal_dbm(env, spec, devices)

    knee_mcs = 0 if with_throughput else rates_mcs
    needs_knee = operating_override is None and spec.powers.jam_dbm is None
    powers, rates, knees, target_knee, first_nt, margin = _sweep_and_knees(
        env, spec, jam_gain_db, sig_dbm, devices, targets, mcs=knee_mcs,
        require_target_knee=needs_knee)
    if operating_override is not None:
        operating = float(operating_override)
    elif spec.powers.jam_dbm is not None:
        operating = float(spec.powers.jam_dbm)
    elif with_throughput:
        operating = target_knee + THROUGHPUT_POWER_MARGIN_DB
    else:
        operating = target_knee + AUTO_POWER_MARGIN_DB

    eval_rng = np.random.default_rng([spec.seed, _STREAM_EVAL, run_idx])
    att_rssi = received_rssi(env, operating + jam_gain_db, eval_rng,
                             spec.optimizer.meas_sigma_db).astype(float)
    ap_rssi = received_rssi(env, sig_dbm, eval_rng,
                            spec.optimizer.meas_sigma_db).astype(float)
    jsr = att_rssi - ap_rssi
    ref = np.mean([jsr[devices.index(t)] for t in targets])
    norm = jsr - ref

    jam_dbm = operating + jam_gain_db
    ratio = link.sjnr_db(sig_dbm, jam_dbm, env.noise_floor_dbm)
    pkt = link.PACKETS_PER_SECOND * link.packet_success_prob(ratio, rates_mcs)

    row = TargetRow(
        targets=targets,
        attacker_rssi_dbm=dict(zip(devices, att_rssi)),
        ap_rssi_dbm=dict(zip(devices, ap_rssi)),
        jsr_db=dict(zip(devices, jsr)),
        norm_jsr_db=dict(zip(devices, norm)),
        packet_rate=dict(zip(devices, pkt)),
        operating_jam_dbm=operating,
        target_knee_dbm=target_knee,
        first_nontarget_knee_dbm=first_nt,
        margin_db=margin,
    )

    extras = {
        "sweep": {
            "powers_dbm": powers.tolist(),
            "mcs": knee_mcs,
            "rates": {d: rates[:, i].tolist() for i, d in enumerate(devices)},
        },
        "knees_dbm": knees,
        "delivered_gain_db": {t: float(jam_gain_db[devices.index(t)])
                              for t in targets},
    }

    if with_throughput:
        link_rng = np.random.default_rng([spec.seed, _STREAM_LINK, run_idx])
        offered = spec.mode_params.get("offered_load_mbps", 30.0)
        jammed = {}
        baseline = {}
        for i, d in enumerate(devices):
            jammed[d] = simulate_link_throughput(ratio[i], offered, link_rng)
            snr = sig_dbm[i] - env.noise_floor_dbm
            baseline[d] = simulate_link_throughput(snr, offered, link_rng)
        row.throughput_mbps = jammed
        extras["unjammed_throughput_mbps"] = baseline
    return row, extras


def simulate_link_throughput(sjnr_value: float, offered_mbps: float,
                             rng: np.random.Generator,
                             windows: int = LINK_SIM_WINDOWS) -> float:
    """Adaptive-rate link under a stationary SJNR; steady-state goodput."""
    state = link.LinkState(mcs=7, offered_load_mbps=offered_mbps)
    history = []
    for _ in range(windows):
        p = link.packet_success_prob(sjnr_value, state.mcs)
        outcomes = rng.random(link.RATE_WINDOW) < p
        state = link.rate_adapt_step(state.with_window(outcomes))
        p_after = link.packet_success_prob(sjnr_value, state.mcs)
        history.append(link.throughput_mbps(state, p_after))
    return float(np.median(history[-10:]))


# ---------------------------------------------------------------------------
# Scenario operations
# ---------------------------------------------------------------------------


def run_single_target(spec: ScenarioSpec) -> RunResult:
    """Optimize against one target and evaluate the outcome on every device."""
    if len(spec.targets) != 1:
        raise ScenarioError("run_single_target needs exactly one target",
                            "targets")
    env = spec.build_environment()
    run_idx = _run_index(spec, spec.targets[0])
    config, trace, _ = _optimize(env, spec, spec.targets, run_idx)
    with_tp = spec.mode == "throughput"
    row, extras = _evaluate_row(env, spec, config, spec.targets, run_idx,
                                with_throughput=with_tp)
    extras["config"] = config
    extras["_traces"] = [trace]
    return RunResult(spec.name, spec.mode, spec.eval_devices(), [row], extras)


def run_multi_target(spec: ScenarioSpec) -> RunResult:
    """Optimize against two or more targets simultaneously."""
    if len(spec.targets) < 2:
        raise ScenarioError("run_multi_target needs at least two targets",
                            "targets")
    env = spec.build_environment()
    run_idx = _run_index(spec, spec.targets[0])
    config, trace, _ = _optimize(env, spec, spec.targets, run_idx)
    with_tp = spec.mode == "throughput"
    row, extras = _evaluate_row(env, spec, config, spec.targets, run_idx,
                                with_throughput=with_tp)
    extras["config"] = config
    extras["_traces"] = [trace]
    return RunResult(spec.name, spec.mode, spec.eval_devices(), [row], extras)


def run_exclusion(spec: ScenarioSpec) -> RunResult:
    """Jam every non-AP device except the one named in mode_params.exclude."""
    exclude = spec.mode_params["exclude"]
    targets = tuple(d for d in spec.eval_devices() if d != exclude)
    inner = replace(spec, targets=targets, non_targets=None, hidden=())
    result = run_multi_target(inner)
    result.mode = spec.mode
    result.extras["excluded"] = exclude
    return result


def power_sweep(spec: ScenarioSpec) -> RunResult:
    """Per-device packet rate against jamming power for the optimized config."""
    if len(spec.targets) == 1:
        return run_single_target(spec)
    return run_multi_target(spec)


def run_jsr_matrix(spec: ScenarioSpec, threads: int = 1) -> RunResult:
    """One single-target optimization per device; rows stack into the matrix."""
    env = spec.build_environment()
    targets = spec.targets or spec.eval_devices()
    rows = [None] * len(targets)
    all_extras = {"configs": {}, "_traces": [None] * len(targets),
                  "knees_dbm": {}, "delivered_gain_db": {}}

    def build(i: int):
        target = targets[i]
        run_idx = _run_index(spec, target)
        sub = replace(spec, targets=(target,), non_targets=None,
                      hidden=tuple(h for h in spec.hidden if h != target))
        config, trace, _ = _optimize(env, sub, (target,), run_idx)
        row, extras = _evaluate_row(env, sub, config, (target,), run_idx)
        return i, config, trace, row, extras

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(build, range(len(targets))))
    else:
        results = [build(i) for i in range(len(targets))]

    for i, config, trace, row, extras in results:
        rows[i] = row
        all_extras["configs"][targets[i]] = config
        all_extras["_traces"][i] = trace
        all_extras["knees_dbm"][targets[i]] = extras["knees_dbm"]
        all_extras["delivered_gain_db"].update(extras["delivered_gain_db"])
    return RunResult(spec.name, spec.mode, spec.eval_devices(), rows,
                     all_extras)


def hidden_device_eval(spec: ScenarioSpec, threads: int = 1) -> RunResult:
    """Single-target rows with every other device hidden from the oracle.

    Only the target and the access point are visible during optimization;
    the JSR is evaluated at all devices, hidden ones included, both for the
    initial table head (before) and the final configuration (after).
    """
    env = spec.build_environment()
    targets = spec.targets or spec.eval_devices()
    rows = [None] * len(targets)
    before_rows = [None] * len(targets)
    extras = {"configs": {}, "_traces": [None] * len(targets)}

    def build(i: int):
        target = targets[i]
        run_idx = _run_index(spec, target)
        hidden = tuple(d for d in spec.eval_devices() if d != target)
        sub = replace(spec, targets=(target,), non_targets=None, hidden=hidden)
        config, trace, _ = _optimize(env, sub, (target,), run_idx)
        # Pre-optimization reference: an unselected random configuration
        # (the table head would already be best-of-B toward the target),
        # measured at the same jamming power as the optimized result.
        initial = random_config(env.n_elements,
                                [spec.seed, _STREAM_RANDCONF, run_idx])
        row, _ = _evaluate_row(env, sub, config, (target,), run_idx)
        before, _ = _evaluate_row(env, sub, initial, (target,), run_idx,
                                  operating_override=row.operating_jam_dbm)
        return i, config, trace, row, before

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(build, range(len(targets))))
    else:
        results = [build(i) for i in range(len(targets))]

    for i, config, trace, row, before in results:
        rows[i] = row
        before_rows[i] = before
        extras["configs"][targets[i]] = config
        extras["_traces"][i] = trace
    extras["before_norm_jsr_db"] = {
        row.label(): row.norm_jsr_db for row in before_rows
    }
    return RunResult(spec.name, spec.mode, spec.eval_devices(), rows, extras)


def random_config_eval(spec: ScenarioSpec, n_configs: int = 20) -> dict:
    """Attacker RSSI per device under random configurations (null model)."""
    env = spec.build_environment()
    devices = spec.eval_devices()
    rng = np.random.default_rng([spec.seed, _STREAM_RANDCONF])
    eval_rng = np.random.default_rng([spec.seed, _STREAM_EVAL, 0])
    matrix = _gain_matrix(env, devices)
    power = spec.powers.jam_dbm if spec.powers.jam_dbm is not None else 0.0
    rssi = np.empty((n_configs, len(devices)))
    configs = []
    for i in range(n_configs):
        config = RisConfig(rng.integers(0, 2, env.n_elements, dtype=np.uint8))
        configs.append(config)
        gains = np.abs(matrix @ config.coefficients())
        level = power + 20.0 * np.log10(np.maximum(gains, _TINY_GAIN))
        rssi[i] = received_rssi(env, level, eval_rng,
                                spec.optimizer.meas_sigma_db).astype(float)
    return {"devices": devices, "rssi_dbm": rssi, "configs": configs}


def heatmap_scan(spec: ScenarioSpec, grid: Mapping | None = None) -> RunResult:
    """Normalized attacker power on a planar grid around the optimized focus."""
    if len(spec.targets) != 1:
        raise ScenarioError("heatmap mode needs exactly one target", "targets")
    env = spec.build_environment()
    target = spec.targets[0]
    focus = env.devices[target]
    params = dict(spec.mode_params)
    if grid is not None:
        params.update(grid)
    step = float(params.get("step_m", 0.01))
    if "x_min_m" in params:
        x0, x1 = float(params["x_min_m"]), float(params["x_max_m"])
        y0, y1 = float(params["y_min_m"]), float(params["y_max_m"])
    else:
        x_extent = float(params.get("x_extent_m", 0.75))
        y_extent = float(params.get("y_extent_m", 0.50))
        x0, x1 = focus.x - x_extent / 2, focus.x + x_extent / 2
        y0, y1 = focus.y - y_extent / 2, focus.y + y_extent / 2
    if not (x0 <= focus.x <= x1 and y0 <= focus.y <= y1):
        raise ScenarioError("grid excludes the optimization point",
                            "mode_params")

    run_idx = _run_index(spec, target)
    config, trace, _ = _optimize(env, spec, spec.targets, run_idx)
    coeff = config.coefficients()

    xs = x0 + step * np.arange(int(round((x1 - x0) / step)) + 1)
    ys = y0 + step * np.arange(int(round((y1 - y0) / step)) + 1)
    focus_gain = abs(compose_channel(
        config, ris_subchannels(env, focus, device=target)))
    focus_db = 20.0 * math.log10(max(focus_gain, _TINY_GAIN))

    grid_db = np.empty((len(ys), len(xs)))
    for iy, y in enumerate(ys):
        pts = [Position(float(x), float(y), focus.z) for x in xs]
        sub = ris_subchannels_batch(env, pts, device=target)
        gains = np.abs(sub @ coeff)
        grid_db[iy] = 20.0 * np.log10(np.maximum(gains, _TINY_GAIN)) - focus_db

    row, extras = _evaluate_row(env, spec, config, spec.targets, run_idx)
    extras.update({
        "config": config,
        "_traces": [trace],
        "heatmap": {
            "x_m": xs.tolist(),
            "y_m": ys.tolist(),
            "normalized_db": grid_db.tolist(),
            "focus": [focus.x, focus.y, focus.z],
        },
    })
    return RunResult(spec.name, spec.mode, spec.eval_devices(), [row], extras)


def displacement_scan(spec: ScenarioSpec) -> RunResult:
    """Channel magnitude of two co-located receivers versus displacement.

    The target channel is maximized, the mode_params.minimized device is
    minimized; both are then virtually displaced along +x in fixed steps
    while the configuration stays frozen.
    """
    if len(spec.targets) != 1:
        raise ScenarioError("displacement mode needs exactly one target",
                            "targets")
    env = spec.build_environment()
    maximized = spec.targets[0]
    minimized = spec.mode_params["minimized"]
    if minimized not in env.devices or minimized == maximized:
        raise ScenarioError("minimized device must be a distinct roster "
                            "device", "mode_params.minimized")
    step_mm = float(spec.mode_params.get("step_mm", 4.0))
    max_mm = float(spec.mode_params.get("max_mm", 48.0))
    disp_m = np.arange(0.0, max_mm + step_mm / 2, step_mm) / 1000.0

    run_idx = _run_index(spec, maximized)
    config, trace, _ = _optimize(env, spec, spec.targets, run_idx)
    coeff = config.coefficients()

    def curve(device: str) -> np.ndarray:
        base = env.devices[device]
        pts = [Position(base.x + d, base.y, base.z) for d in disp_m]
        sub = ris_subchannels_batch(env, pts, device=device)
        gains = np.abs(sub @ coeff)
        return 20.0 * np.log10(np.maximum(gains, _TINY_GAIN))

    max_curve = curve(maximized)
    min_curve = curve(minimized)

    row, extras = _evaluate_row(env, spec, config, spec.targets, run_idx)
    extras.update({
        "config": config,
        "_traces": [trace],
        "displacement": {
            "displacements_mm": (disp_m * 1000.0).tolist(),
            "maximized_db": max_curve.tolist(),
            "minimized_db": min_curve.tolist(),
            "fixed_maximized_db": float(max_curve[0]),
            "fixed_minimized_db": float(min_curve[0]),
            "expected_null_mm": 1000.0 * 2.4048 * env.wavelength_m
                                / (2.0 * math.pi),
        },
    })
    return RunResult(spec.name, spec.mode, spec.eval_devices(), [row], extras)


def element_sweep(spec: ScenarioSpec) -> RunResult:
    """Target/non-target separation against the number of active elements.

    Inactive elements are frozen at a random configuration.  With the full
    surface active the run is exactly run_single_target's optimization.
    """
    if len(spec.targets) != 1:
        raise ScenarioError("element-sweep mode needs exactly one target",
                            "targets")
    env = spec.build_environment()
    L = env.n_elements
    counts = [int(c) for c in spec.mode_params["counts"]]
    repeats = int(spec.mode_params.get("repeats", 1))
    if counts[-1] > L:
        raise ScenarioError(f"count {counts[-1]} exceeds the surface size {L}",
                            "mode_params.counts")
    if counts[0] < 1:
        raise ScenarioError("counts must be >= 1", "mode_params.counts")
    target = spec.targets[0]
    devices = spec.eval_devices()
    non_targets = [d for d in devices if d != target]

    separations = {c: [] for c in counts}
    configs = {}
    for rep in range(repeats):
        for count in counts:
            if count == L:
                # Full surface: same streams and oracle as run_single_target.
                opt_seed = [spec.seed, _STREAM_OPTIMIZER, rep]
                meas_seed = [spec.seed, _STREAM_MEASURE, rep]
                inner = RssiOracle(
                    env, (target,), spec.visible_non_targets(),
                    spec.powers.device_tx_dbm,
                    np.random.default_rng(meas_seed),
                    sigma_db=spec.optimizer.meas_sigma_db,
                    quantize=spec.optimizer.quantize)
                oracle = inner
                expand = lambda cfg: cfg
            else:
                mask_rng = np.random.default_rng(
                    [spec.seed, _STREAM_MASK, count, rep])
                active = np.sort(mask_rng.choice(L, count, replace=False))
                frozen = mask_rng.integers(0, 2, L, dtype=np.uint8)
                opt_seed = [spec.seed, _STREAM_OPTIMIZER, rep, count]
                meas_seed = [spec.seed, _STREAM_MEASURE, rep, count]
                inner = RssiOracle(
                    env, (target,), spec.visible_non_targets(),
                    spec.powers.device_tx_dbm,
                    np.random.default_rng(meas_seed),
                    sigma_db=spec.optimizer.meas_sigma_db,
                    quantize=spec.optimizer.quantize)
                masked = MaskedOracle(inner, active, frozen)
                oracle = masked
                expand = masked.expand
            best, _ = run_optimizer(
                spec.optimizer.table_size, spec.optimizer.steps, count,
                oracle, opt_seed, weights=spec.optimizer.cost_weights(),
                epsilon=spec.optimizer.epsilon,
                reeval_period=spec.optimizer.reeval_period,
                noise_floor_dbm=env.noise_floor_dbm)
            full = expand(best)
            gains = _composed_gain_db(env, full, devices)
            sep = (gains[devices.index(target)]
                   - max(gains[devices.index(d)] for d in non_targets))
            separations[count].append(float(sep))
            configs[f"{count}:{rep}"] = full

    extras = {
        "element_sweep": {
            "counts": counts,
            "repeats": repeats,
            "separation_db": {str(c): separations[c] for c in counts},
        },
        "configs": configs,
    }
    return RunResult(spec.name, spec.mode, devices, [], extras)


def directional_gain_db(theta_deg: float, gain_dbi: float = 19.0,
                        beamwidth_deg: float = 10.0,
                        front_back_db: float = 25.0) -> float:
    """Parabolic main-lobe pattern; beamwidth_deg is the 3 dB half-angle."""
    attenuation = min(3.0 * (theta_deg / beamwidth_deg) ** 2, front_back_db)
    return gain_dbi - attenuation


def directional_baseline(spec: ScenarioSpec) -> RunResult:
    """Replace the surface channel with a directional-antenna channel.

    The boresight points at the target; each device sees a pattern-weighted
    line-of-sight ray plus the attacker's diffuse multipath at a fixed
    relative level.  Everything downstream (sweeps, knees, rates) is the
    shared pipeline.
    """
    if len(spec.targets) != 1:
        raise ScenarioError("directional-baseline mode needs exactly one "
                            "target", "targets")
    env = spec.build_environment()
    params = spec.mode_params
    gain_dbi = float(params.get("gain_dbi", 19.0))
    beamwidth = float(params.get("beamwidth_deg", 10.0))
    fbr = float(params.get("front_back_db", 25.0))
    diffuse_db = float(params.get("diffuse_db", 0.0))

    devices = spec.eval_devices()
    target = spec.targets[0]
    att = np.array(tuple(env.attacker_position))
    bore = np.array(tuple(env.devices[target])) - att
    bore = bore / np.linalg.norm(bore)

    jam_gains = np.empty(len(devices), dtype=complex)
    for i, d in enumerate(devices):
        vec = np.array(tuple(env.devices[d])) - att
        dist = np.linalg.norm(vec)
        cos_t = float(np.clip(vec @ bore / dist, -1.0, 1.0))
        theta = math.degrees(math.acos(cos_t))
        g_db = directional_gain_db(theta, gain_dbi, beamwidth, fbr)
        pl_amp = math.sqrt(
            (env.wavelength_m / (4.0 * math.pi)) ** 2
            * dist ** (-env.path_loss_exponent))
        los = 10.0 ** (g_db / 20.0) * np.exp(1j * env.kappa * dist)
        diffuse = direct_channel(env, env.attacker_id, env.devices[d])
        unit_diffuse = diffuse / pl_amp
        jam_gains[i] = pl_amp * (los + 10.0 ** (diffuse_db / 20.0)
                                 * unit_diffuse)

    jam_gain_db = 20.0 * np.log10(np.maximum(np.abs(jam_gains), _TINY_GAIN))
    sig_dbm = _ap_signal_dbm(env, spec, devices)
    powers, rates, knees, target_knee, first_nt, margin = _sweep_and_knees(
        env, spec, jam_gain_db, sig_dbm, devices, (target,))
    operating = (spec.powers.jam_dbm if spec.powers.jam_dbm is not None
                 else target_knee + AUTO_POWER_MARGIN_DB)

    eval_rng = np.random.default_rng([spec.seed, _STREAM_EVAL, 0])
    att_rssi = received_rssi(env, operating + jam_gain_db, eval_rng,
                             spec.optimizer.meas_sigma_db).astype(float)
    ap_rssi = received_rssi(env, sig_dbm, eval_rng,
                            spec.optimizer.meas_sigma_db).astype(float)
    jsr = att_rssi - ap_rssi
    norm = jsr - jsr[devices.index(target)]
    jam_dbm = operating + jam_gain_db
    ratio = link.sjnr_db(sig_dbm, jam_dbm, env.noise_floor_dbm)
    pkt = link.PACKETS_PER_SECOND * link.packet_success_prob(
        ratio, link.MONITOR_MCS)

    row = TargetRow(
        targets=(target,),
        attacker_rssi_dbm=dict(zip(devices, att_rssi)),
        ap_rssi_dbm=dict(zip(devices, ap_rssi)),
        jsr_db=dict(zip(devices, jsr)),
        norm_jsr_db=dict(zip(devices, norm)),
        packet_rate=dict(zip(devices, pkt)),
        operating_jam_dbm=operating,
        target_knee_dbm=target_knee,
        first_nontarget_knee_dbm=first_nt,
        margin_db=margin,
    )
    extras = {
        "antenna": {"gain_dbi": gain_dbi, "beamwidth_deg": beamwidth,
                    "front_back_db": fbr, "diffuse_db": diffuse_db},
        "sweep": {
            "powers_dbm": powers.tolist(),
            "mcs": link.MONITOR_MCS,
            "rates": {d: rates[:, i].tolist() for i, d in enumerate(devices)},
        },
        "knees_dbm": knees,
    }
    return RunResult(spec.name, spec.mode, devices, [row], extras)


def perturbation_run(spec: ScenarioSpec,
                     schedule: Sequence[Mapping] | None = None) -> RunResult:
    """Fixed optimized configuration against an evolving environment.

    Schedule events: {"time": t, "fraction": f, "seed": s} re-draws a
    scatterer fraction; {"time": t, "device": id, "position": [x,y,z]}
    relocates a device.  Events apply cumulatively at the start of their
    time step; packet rates are recorded per step.
    """
    if not spec.targets:
        raise ScenarioError("perturbation mode needs a target set", "targets")
    env = spec.build_environment()
    events = sorted((schedule if schedule is not None
                     else spec.mode_params.get("schedule", [])),
                    key=lambda e: e["time"])
    duration = int(spec.mode_params.get(
        "duration", (events[-1]["time"] + 2) if events else 5))

    run_idx = _run_index(spec, spec.targets[0])
    config, trace, _ = _optimize(env, spec, spec.targets, run_idx)
    devices = spec.eval_devices()

    def rates_for(current: Environment) -> np.ndarray:
        jam_gain_db = _composed_gain_db(current, config, devices)
        sig_dbm = np.array([
            spec.powers.ap_dbm + 20.0 * math.log10(abs(
                direct_channel(current, spec.ap_id, current.devices[d])))
            for d in devices
        ])
        jam_dbm = operating + jam_gain_db
        ratio = link.sjnr_db(sig_dbm, jam_dbm, current.noise_floor_dbm)
        return link.PACKETS_PER_SECOND * link.packet_success_prob(
            ratio, link.MONITOR_MCS)

    if spec.powers.jam_dbm is not None:
        operating = float(spec.powers.jam_dbm)
    else:
        jam_gain_db = _composed_gain_db(env, config, devices)
        sig_dbm = _ap_signal_dbm(env, spec, devices)
        _, _, _, target_knee, _, _ = _sweep_and_knees(
            env, spec, jam_gain_db, sig_dbm, devices, spec.targets)
        operating = target_knee + AUTO_POWER_MARGIN_DB

    series = np.empty((duration, len(devices)))
    current = env
    pending = list(events)
    for t in range(duration):
        while pending and pending[0]["time"] <= t:
            event = pending.pop(0)
            if "fraction" in event:
                current = perturb_environment(current, event["fraction"],
                                              event.get("seed", spec.seed))
            elif "device" in event:
                current = move_device(current, event["device"],
                                      event["position"])
            else:
                raise ScenarioError(f"unintelligible schedule event {event}",
                                    "mode_params.schedule")
        series[t] = rates_for(current)

    row, extras = _evaluate_row(env, spec, config, spec.targets, run_idx)
    extras.update({
        "config": config,
        "_traces": [trace],
        "timeseries": {
            "times": list(range(duration)),
            "rates": {d: series[:, i].tolist()
                      for i, d in enumerate(devices)},
            "events": _jsonify(list(events)),
            "operating_jam_dbm": operating,
        },
    })
    return RunResult(spec.name, spec.mode, devices, [row], extras)


def run_scenario(spec: ScenarioSpec, threads: int = 1) -> RunResult:
    """Dispatch a scenario to its mode's operation."""
    if spec.mode == "jsr-matrix":
        # Only the everything-hidden roster is the dedicated hidden-device
        # experiment; partial hidden sets stay with the plain matrix.
        all_hidden = set(spec.eval_devices()) - set(spec.targets)
        if spec.hidden and set(spec.hidden) == all_hidden:
            return hidden_device_eval(spec, threads=threads)
        return run_jsr_matrix(spec, threads=threads)
    if spec.mode == "exclusion":
        return run_exclusion(spec)
    if spec.mode == "heatmap":
        return heatmap_scan(spec)
    if spec.mode == "element-sweep":
        return element_sweep(spec)
    if spec.mode == "displacement":
        return displacement_scan(spec)
    if spec.mode == "directional-baseline":
        return directional_baseline(spec)
    if spec.mode == "perturbation":
        return perturbation_run(spec)
    # packet-rate / throughput
    if len(spec.targets) == 1:
        return run_single_target(spec)
    return run_multi_target(spec)


# ---------------------------------------------------------------------------
# Plain-dict round trip (the CLI's JSON schema)
# ---------------------------------------------------------------------------


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Canonical, fully defaulted form; stable under input key reordering."""
    env = spec.environment
    if isinstance(env, Environment):
        env_doc = {"environment_document": environment_to_dict(env)}
    else:
        devices = env.devices if isinstance(env.devices, Mapping) \
            else dict(env.devices)
        env_doc = {"environment": {
            "frequency_hz": env.frequency_hz,
            "n_elements": env.n_elements,
            "scatter_count": env.scatter_count,
            "path_loss_exponent": env.path_loss_exponent,
            "noise_floor_dbm": env.noise_floor_dbm,
            "rician_k": env.rician_k,
            "pattern_diversity": env.pattern_diversity,
            "attacker_id": env.attacker_id,
            "attacker_position": list(as_position(env.attacker_position)),
            "devices": {d: list(as_position(p))
                        for d, p in sorted(devices.items())},
        }}
    return {
        "name": spec.name,
        "mode": spec.mode,
        "seed": spec.seed,
        "ap_id": spec.ap_id,
        "targets": list(spec.targets),
        "non_targets": list(spec.non_targets),
        "hidden": list(spec.hidden),
        "powers": {
            "jam_dbm": spec.powers.jam_dbm,
            "ap_dbm": spec.powers.ap_dbm,
            "device_tx_dbm": spec.powers.device_tx_dbm,
            "sweep_from_dbm": spec.powers.sweep_from_dbm,
            "sweep_to_dbm": spec.powers.sweep_to_dbm,
            "sweep_step_db": spec.powers.sweep_step_db,
        },
        "optimizer": {
            "table_size": spec.optimizer.table_size,
            "steps": spec.optimizer.steps,
            "reeval_period": spec.optimizer.reeval_period,
            "epsilon": spec.optimizer.epsilon,
            "w_mean": spec.optimizer.w_mean,
            "w_extreme": spec.optimizer.w_extreme,
            "meas_sigma_db": spec.optimizer.meas_sigma_db,
            "quantize": spec.optimizer.quantize,
        },
        "mode_params": _jsonify(dict(spec.mode_params)),
        **env_doc,
    }


def scenario_from_dict(doc: Mapping, base_dir=None) -> ScenarioSpec:
    """Build a validated spec from a plain JSON-style document."""
    from pathlib import Path

    from .channel import environment_from_dict, load_environment

    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be a JSON object")
    known = {"name", "mode", "seed", "ap_id", "targets", "non_targets",
             "hidden", "powers", "optimizer", "mode_params", "environment",
             "environment_file", "environment_document"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ScenarioError(f"unknown field(s) {unknown}", unknown[0])
    if "mode" not in doc:
        raise ScenarioError("required field is missing", "mode")

    if "environment_document" in doc:
        environment = environment_from_dict(doc["environment_document"])
    elif "environment_file" in doc:
        path = Path(doc["environment_file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        environment = load_environment(path)
    else:
        env_doc = doc.get("environment", {})
        environment = _environment_spec_from_dict(env_doc)

    def sub(name, cls, **defaults):
        raw = doc.get(name, {})
        if not isinstance(raw, Mapping):
            raise ScenarioError("must be an object", name)
        allowed = {f for f in cls.__dataclass_fields__}
        bad = sorted(set(raw) - allowed)
        if bad:
            raise ScenarioError(f"unknown field(s) {bad}", f"{name}.{bad[0]}")
        merged = {**defaults, **raw}
        return cls(**merged)

    try:
        return ScenarioSpec(
            environment=environment,
            mode=doc["mode"],
            targets=tuple(doc.get("targets", ())),
            seed=int(doc.get("seed", 1)),
            name=str(doc.get("name", "scenario")),
            ap_id=str(doc.get("ap_id", "D0")),
            non_targets=(tuple(doc["non_targets"])
                         if "non_targets" in doc else None),
            hidden=tuple(doc.get("hidden", ())),
            powers=sub("powers", PowerSettings),
            optimizer=sub("optimizer", OptimizerSettings),
            mode_params=dict(doc.get("mode_params", {})),
        )
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc


def _environment_spec_from_dict(env_doc: Mapping) -> EnvironmentSpec:
    if not env_doc:
        return desk_environment_spec()
    allowed = {"frequency_hz", "n_elements", "scatter_count",
               "path_loss_exponent", "noise_floor_dbm", "rician_k",
               "pattern_diversity", "attacker_id", "attacker_position",
               "devices"}
    bad = sorted(set(env_doc) - allowed)
    if bad:
        raise ScenarioError(f"unknown field(s) {bad}",
                            f"environment.{bad[0]}")
    kwargs = dict(env_doc)
    devices = kwargs.pop("devices", None)
    attacker = kwargs.pop("attacker_position", None)
    if devices is None:
        devices = dict(DESK_DEVICES)
        attacker = attacker if attacker is not None else DESK_ATTACKER
    elif attacker is None:
        raise ScenarioError("attacker_position is required when devices are "
                            "given", "environment.attacker_position")
    try:
        return EnvironmentSpec(
            devices={d: as_position(p) for d, p in devices.items()},
            attacker_position=as_position(attacker),
            **kwargs,
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), "environment") from exc
