"""Seeded, spatially correlated multipath radio environment.

The radio world is a collection of 2-D isotropic plane-wave ensembles
(Clarke's scattering model): one ensemble per reflecting-surface element
for the attacker-side paths, and one ensemble per direct transmitter
(access point, every device, and the attacker itself).  A channel gain at
a position is the coherent sum of the ensemble's plane waves, scaled by a
free-space-anchored path-loss law.  Evaluating the same ensemble serves
both directions of a path, so channel reciprocity holds by construction.

Everything is drawn from a single 64-bit master seed; identical
(seed, spec) inputs reproduce bit-identical environments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.special import j0

SPEED_OF_LIGHT = 299792458.0

# Minimum separation between distinct radiating entities (meters).
MIN_ENTITY_DISTANCE = 1e-6

# Named sub-streams hanging off the master seed.  Other modules use the
# 2x range; keep these disjoint.
_STREAM_ENSEMBLES = 11
_STREAM_PATTERN = 12
_STREAM_CORRELATION = 13
_STREAM_PERTURB = 14

ENV_FORMAT_VERSION = 1


class Position(NamedTuple):
    """A point in meters; z enters path loss only, the scattered field is 2-D."""

    x: float
    y: float
    z: float

    def distance_to(self, other: "Position") -> float:
        return math.dist(self, other)


def as_position(value) -> Position:
    if isinstance(value, Position):
        pos = value
    else:
        coords = tuple(float(v) for v in value)
        if len(coords) != 3:
            raise ValueError(f"position needs 3 coordinates, got {len(coords)}")
        pos = Position(*coords)
    if not all(math.isfinite(c) for c in pos):
        raise ValueError(f"position coordinates must be finite, got {pos}")
    return pos


@dataclass(frozen=True)
class EnvironmentSpec:
    """Declarative description of the radio world to synthesize.

    ``devices`` maps device id to position and must include the access
    point.  The attacker (who carries the reflecting surface) is listed
    separately; its position anchors the surface-path path loss.
    """

    devices: Mapping[str, Position] | Sequence[tuple[str, Position]]
    attacker_position: Position
    frequency_hz: float = 5.56e9
    n_elements: int = 768
    scatter_count: int = 256
    path_loss_exponent: float = 2.0
    noise_floor_dbm: float = -95.0
    rician_k: float = 0.0
    pattern_diversity: float = 0.0
    attacker_id: str = "ATT"


class Environment:
    """Immutable synthesized radio world.

    Do not mutate the arrays; operations that change the world
    (perturbation, moving a device) return a new instance.
    """

    def __init__(
        self,
        *,
        frequency_hz: float,
        path_loss_exponent: float,
        noise_floor_dbm: float,
        master_seed: int,
        n_elements: int,
        scatter_count: int,
        devices: dict[str, Position],
        attacker_id: str,
        attacker_position: Position,
        rician_k: float,
        pattern_delta: float,
        ris_angles: np.ndarray,
        ris_phases: np.ndarray,
        ris_amps: np.ndarray,
        ris_los: np.ndarray,
        direct: dict[str, dict[str, np.ndarray]],
        pattern_weights: dict[str, np.ndarray],
        perturbations: tuple[tuple[float, int], ...] = (),
    ):
        self.frequency_hz = float(frequency_hz)
        self.wavelength_m = SPEED_OF_LIGHT / self.frequency_hz
        self.path_loss_exponent = float(path_loss_exponent)
        self.noise_floor_dbm = float(noise_floor_dbm)
        self.master_seed = int(master_seed)
        self.n_elements = int(n_elements)
        self.scatter_count = int(scatter_count)
        self.devices = dict(devices)
        self.attacker_id = attacker_id
        self.attacker_position = attacker_position
        self.rician_k = float(rician_k)
        self.pattern_delta = float(pattern_delta)
        self.perturbations = tuple(perturbations)

        self._ris_angles = _freeze(ris_angles)
        self._ris_phases = _freeze(ris_phases)
        self._ris_amps = _freeze(ris_amps)
        self._ris_los = _freeze(ris_los)  # (L, 2): angle, phase
        self._direct = {
            key: {name: _freeze(arr) for name, arr in ens.items()}
            for key, ens in direct.items()
        }
        self._pattern = {key: _freeze(arr) for key, arr in pattern_weights.items()}
        self._build_caches()

    # -- derived quantities ------------------------------------------------

    @property
    def kappa(self) -> float:
        """Wavenumber 2*pi/lambda."""
        return 2.0 * math.pi / self.wavelength_m

    def entity_position(self, entity_id: str) -> Position:
        if entity_id == self.attacker_id:
            return self.attacker_position
        try:
            return self.devices[entity_id]
        except KeyError:
            raise KeyError(f"unknown device id {entity_id!r}") from None

    def direct_ids(self) -> list[str]:
        """Direct-transmitter ids in the documented draw order."""
        return sorted(self.devices) + [self.attacker_id]

    def _build_caches(self):
        kap = self.kappa
        self._ris_kx = _freeze(kap * np.cos(self._ris_angles))
        self._ris_ky = _freeze(kap * np.sin(self._ris_angles))
        self._ris_cis = _freeze(self._ris_amps * np.exp(1j * self._ris_phases))
        self._direct_cache = {}
        for key, ens in self._direct.items():
            self._direct_cache[key] = {
                "kx": _freeze(kap * np.cos(ens["angles"])),
                "ky": _freeze(kap * np.sin(ens["angles"])),
                "cis": _freeze(ens["amps"] * np.exp(1j * ens["phases"])),
                "los": ens["los"],
            }

    def _copy_kwargs(self) -> dict:
        return dict(
            frequency_hz=self.frequency_hz,
            path_loss_exponent=self.path_loss_exponent,
            noise_floor_dbm=self.noise_floor_dbm,
            master_seed=self.master_seed,
            n_elements=self.n_elements,
            scatter_count=self.scatter_count,
            devices=self.devices,
            attacker_id=self.attacker_id,
            attacker_position=self.attacker_position,
            rician_k=self.rician_k,
            pattern_delta=self.pattern_delta,
            ris_angles=self._ris_angles,
            ris_phases=self._ris_phases,
            ris_amps=self._ris_amps,
            ris_los=self._ris_los,
            direct=self._direct,
            pattern_weights=self._pattern,
            perturbations=self.perturbations,
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def _validated_devices(spec: EnvironmentSpec) -> dict[str, Position]:
    if isinstance(spec.devices, Mapping):
        items = list(spec.devices.items())
    else:
        items = [(str(k), v) for k, v in spec.devices]
    seen = set()
    devices = {}
    for dev_id, pos in items:
        if dev_id in seen:
            raise ValueError(f"duplicate device id {dev_id!r}")
        seen.add(dev_id)
        devices[dev_id] = as_position(pos)
    if spec.attacker_id in devices:
        raise ValueError(
            f"attacker id {spec.attacker_id!r} collides with a device id"
        )
    if not devices:
        raise ValueError("environment needs at least one device")
    return devices


def _check_entity_distances(devices: dict[str, Position], attacker: Position,
                            attacker_id: str):
    entities = list(devices.items()) + [(attacker_id, attacker)]
    for i, (id_a, pos_a) in enumerate(entities):
        for id_b, pos_b in entities[i + 1:]:
            if pos_a.distance_to(pos_b) <= MIN_ENTITY_DISTANCE:
                raise ValueError(
                    f"entities {id_a!r} and {id_b!r} are closer than "
                    f"{MIN_ENTITY_DISTANCE} m"
                )


def _draw_ensemble_block(rng: np.random.Generator, shape) -> tuple[np.ndarray, ...]:
    angles = rng.uniform(0.0, 2.0 * math.pi, shape)
    phases = rng.uniform(0.0, 2.0 * math.pi, shape)
    return angles, phases


def synthesize_environment(spec: EnvironmentSpec, seed: int) -> Environment:
    """Deterministically draw every plane-wave ensemble for the given spec.

    Draw order is fixed and documented: the L surface-element ensembles as
    one block, then one ensemble per direct transmitter in sorted-id order
    with the attacker last.  A line-of-sight (angle, phase) pair is drawn
    per ensemble unconditionally so that toggling the Rician K factor never
    shifts any other draw.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError("master seed must be an unsigned 64-bit integer")
    if spec.scatter_count < 16:
        raise ValueError(
            f"scatter_count must be >= 16 for reliable correlation statistics, "
            f"got {spec.scatter_count}"
        )
    if spec.n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    if spec.frequency_hz <= 0:
        raise ValueError("frequency_hz must be positive")
    if not 0.0 <= spec.rician_k:
        raise ValueError("rician_k must be >= 0")
    if spec.pattern_diversity < 0:
        raise ValueError("pattern_diversity must be >= 0")

    devices = _validated_devices(spec)
    attacker_pos = as_position(spec.attacker_position)
    _check_entity_distances(devices, attacker_pos, spec.attacker_id)

    L, M = spec.n_elements, spec.scatter_count
    rng = np.random.default_rng([seed, _STREAM_ENSEMBLES])

    ris_angles, ris_phases = _draw_ensemble_block(rng, (L, M))
    ris_amps = np.ones((L, M))
    ris_los = np.column_stack(_draw_ensemble_block(rng, (L,)))

    direct = {}
    for dev_id in sorted(devices) + [spec.attacker_id]:
        angles, phases = _draw_ensemble_block(rng, (M,))
        los = np.array(_draw_ensemble_block(rng, ()))
        direct[dev_id] = {
            "angles": angles,
            "phases": phases,
            "amps": np.ones(M),
            "los": los,
        }

    pattern_weights = {}
    if spec.pattern_diversity > 0:
        prng = np.random.default_rng([seed, _STREAM_PATTERN])
        delta = spec.pattern_diversity
        norm = math.sqrt(1.0 + delta ** 2)
        for dev_id in sorted(devices):
            g = prng.normal(0.0, math.sqrt(0.5), (L, M)) \
                + 1j * prng.normal(0.0, math.sqrt(0.5), (L, M))
            pattern_weights[dev_id] = (1.0 + delta * g) / norm

    return Environment(
        frequency_hz=spec.frequency_hz,
        path_loss_exponent=spec.path_loss_exponent,
        noise_floor_dbm=spec.noise_floor_dbm,
        master_seed=seed,
        n_elements=L,
        scatter_count=M,
        devices=devices,
        attacker_id=spec.attacker_id,
        attacker_position=attacker_pos,
        rician_k=spec.rician_k,
        pattern_delta=spec.pattern_diversity,
        ris_angles=ris_angles,
        ris_phases=ris_phases,
        ris_amps=ris_amps,
        ris_los=ris_los,
        direct=direct,
        pattern_weights=pattern_weights,
    )


def draw_counter(env: Environment) -> int:
    """Scalar draws consumed by synthesis on the ensembles stream."""
    per_ensemble = 2 * env.scatter_count + 2
    return (env.n_elements + len(env.devices) + 1) * per_ensemble


# ---------------------------------------------------------------------------
# Path loss and field evaluation
# ---------------------------------------------------------------------------


def path_loss_gain(env: Environment, distance_m: float) -> float:
    """Linear power gain: free-space reference at 1 m, configurable exponent."""
    if distance_m <= MIN_ENTITY_DISTANCE:
        raise ValueError(
            f"distance {distance_m} m is below the minimum of "
            f"{MIN_ENTITY_DISTANCE} m"
        )
    ref = (env.wavelength_m / (4.0 * math.pi)) ** 2
    return ref * distance_m ** (-env.path_loss_exponent)


def path_loss_db(env: Environment, distance_m: float) -> float:
    return 10.0 * math.log10(path_loss_gain(env, distance_m))


def _diffuse_field(kx, ky, cis, x, y, weights=None):
    # kx, ky, cis: (..., M) arrays; returns the unit-mean-power scattered sum.
    phase = kx * x + ky * y
    terms = cis * np.exp(1j * phase)
    if weights is not None:
        terms = terms * weights
    return terms.sum(axis=-1) / math.sqrt(terms.shape[-1])


def _combine_rician(env: Environment, diffuse, los_angle, los_phase, x, y):
    if env.rician_k == 0.0:
        return diffuse
    k = env.rician_k
    kap = env.kappa
    los = np.exp(1j * (kap * (np.cos(los_angle) * x + np.sin(los_angle) * y)
                       + los_phase))
    return math.sqrt(k / (k + 1.0)) * los + math.sqrt(1.0 / (k + 1.0)) * diffuse


def ris_subchannels(env: Environment, position, device: str | None = None) -> np.ndarray:
    """Complex gains of all L surface-element paths at a position.

    Path loss is anchored at the attacker position (the surface sits next
    to the attacker's antenna).  ``device`` applies that device's optional
    pattern-diversity weights; positions are evaluated continuously, so a
    registered device may be evaluated anywhere.
    """
    pos = as_position(position)
    d = env.attacker_position.distance_to(pos)
    amp = math.sqrt(path_loss_gain(env, d))
    weights = env._pattern.get(device) if device is not None else None
    diffuse = _diffuse_field(env._ris_kx, env._ris_ky, env._ris_cis,
                             pos.x, pos.y, weights)
    gains = _combine_rician(env, diffuse, env._ris_los[:, 0],
                            env._ris_los[:, 1], pos.x, pos.y)
    return amp * gains


def ris_subchannel(env: Environment, element: int, position,
                   device: str | None = None) -> complex:
    """Complex gain of the path via one surface element to a position."""
    if not 0 <= element < env.n_elements:
        raise IndexError(
            f"element index {element} out of range [0, {env.n_elements})"
        )
    pos = as_position(position)
    d = env.attacker_position.distance_to(pos)
    amp = math.sqrt(path_loss_gain(env, d))
    weights = None
    if device is not None and device in env._pattern:
        weights = env._pattern[device][element]
    diffuse = _diffuse_field(env._ris_kx[element], env._ris_ky[element],
                             env._ris_cis[element], pos.x, pos.y, weights)
    gain = _combine_rician(env, diffuse, env._ris_los[element, 0],
                           env._ris_los[element, 1], pos.x, pos.y)
    return complex(amp * gain)


def ris_subchannels_batch(env: Environment, positions, device: str | None = None,
                          chunk: int = 16) -> np.ndarray:
    """Vectorized ris_subchannels over many positions; returns (P, L)."""
    pts = np.asarray([tuple(as_position(p)) for p in positions], dtype=float)
    L, M = env.n_elements, env.scatter_count
    kx = env._ris_kx.reshape(-1)
    ky = env._ris_ky.reshape(-1)
    cis = env._ris_cis.reshape(-1)
    if device is not None and device in env._pattern:
        cis = cis * env._pattern[device].reshape(-1)
    att = np.array(tuple(env.attacker_position))
    dists = np.linalg.norm(pts - att, axis=1)
    if np.any(dists <= MIN_ENTITY_DISTANCE):
        raise ValueError("a scan position coincides with the attacker position")
    ref = (env.wavelength_m / (4.0 * math.pi)) ** 2
    amps = np.sqrt(ref * dists ** (-env.path_loss_exponent))

    out = np.empty((len(pts), L), dtype=complex)
    for start in range(0, len(pts), chunk):
        sl = slice(start, start + chunk)
        phase = np.outer(pts[sl, 0], kx) + np.outer(pts[sl, 1], ky)
        terms = (cis[None, :] * np.exp(1j * phase)).reshape(-1, L, M)
        out[sl] = terms.sum(axis=-1) / math.sqrt(M)
    if env.rician_k > 0:
        k = env.rician_k
        kap = env.kappa
        los_phase = (kap * (np.outer(pts[:, 0], np.cos(env._ris_los[:, 0]))
                            + np.outer(pts[:, 1], np.sin(env._ris_los[:, 0])))
                     + env._ris_los[None, :, 1])
        out = (math.sqrt(k / (k + 1.0)) * np.exp(1j * los_phase)
               + math.sqrt(1.0 / (k + 1.0)) * out)
    return amps[:, None] * out


def direct_channel(env: Environment, source: str, position) -> complex:
    """Complex gain from a registered transmitter's ensemble to a position."""
    if source != env.attacker_id and source not in env.devices:
        raise KeyError(f"unknown source id {source!r}")
    pos = as_position(position)
    src_pos = env.entity_position(source)
    d = src_pos.distance_to(pos)
    if d <= MIN_ENTITY_DISTANCE:
        raise ValueError(
            f"evaluation position coincides with source {source!r} "
            f"(distance {d} m below minimum)"
        )
    amp = math.sqrt(path_loss_gain(env, d))
    ens = env._direct_cache[source]
    diffuse = _diffuse_field(ens["kx"], ens["ky"], ens["cis"], pos.x, pos.y)
    gain = _combine_rician(env, diffuse, ens["los"][0], ens["los"][1],
                           pos.x, pos.y)
    return complex(amp * gain)


def received_rssi(env: Environment, power_at_antenna_dbm, rng=None,
                  sigma_db: float = 0.5):
    """Measured RSSI: Gaussian measurement noise, floor clamp, 1 dB rounding.

    Accepts scalars or arrays; returns int or an int array.
    """
    power = np.asarray(power_at_antenna_dbm, dtype=float)
    if not np.all(np.isfinite(power)):
        raise ValueError("power_at_antenna_dbm must be finite")
    if sigma_db > 0:
        if rng is None:
            raise ValueError("rng is required when sigma_db > 0")
        power = power + rng.normal(0.0, sigma_db, power.shape)
    power = np.maximum(power, env.noise_floor_dbm)
    quantized = np.rint(power).astype(int)
    if quantized.ndim == 0:
        return int(quantized)
    return quantized


def expected_spatial_correlation(displacements_m, wavelength_m: float) -> np.ndarray:
    """Clarke-model reference: J0(2*pi*d/lambda)."""
    d = np.asarray(displacements_m, dtype=float)
    return j0(2.0 * math.pi * d / wavelength_m)


def first_correlation_null_m(wavelength_m: float) -> float:
    """Distance of the first zero of the correlation function."""
    return 2.4048 * wavelength_m / (2.0 * math.pi)


def spatial_correlation(env: Environment, base, displacements,
                        realizations: int) -> np.ndarray:
    """Empirical complex field correlation between a base point and offsets.

    Fresh ensembles (same M as the environment) are drawn from a dedicated
    sub-stream of the master seed; the estimate is the normalized cross
    moment across realizations.  Displacements are applied along +x; the
    model is isotropic so the direction is immaterial.
    """
    if realizations < 100:
        raise ValueError("realizations must be >= 100")
    base_pos = as_position(base)
    disp = np.asarray(list(displacements), dtype=float)
    kap = env.kappa
    M = env.scatter_count
    rng = np.random.default_rng([env.master_seed, _STREAM_CORRELATION])

    xs = base_pos.x + disp                      # (D,)
    num = np.zeros(len(disp), dtype=complex)
    den_d = np.zeros(len(disp))
    den_0 = 0.0
    chunk = max(1, min(realizations, 200))
    remaining = realizations
    while remaining > 0:
        r = min(chunk, remaining)
        remaining -= r
        angles = rng.uniform(0.0, 2.0 * math.pi, (r, M))
        phases = rng.uniform(0.0, 2.0 * math.pi, (r, M))
        kx = kap * np.cos(angles)               # (r, M)
        ky = kap * np.sin(angles)
        base_term = np.exp(1j * (kx * base_pos.x + ky * base_pos.y + phases))
        f0 = base_term.sum(axis=1) / math.sqrt(M)           # (r,)
        # (r, M, D) phase tensor for the displaced points
        ph = kx[:, :, None] * xs[None, None, :] \
            + (ky * base_pos.y + phases)[:, :, None]
        fd = np.exp(1j * ph).sum(axis=1) / math.sqrt(M)     # (r, D)
        num += (np.conj(f0)[:, None] * fd).sum(axis=0)
        den_0 += float((np.abs(f0) ** 2).sum())
        den_d += (np.abs(fd) ** 2).sum(axis=0)
    return num / np.sqrt(den_0 * den_d)


# ---------------------------------------------------------------------------
# Perturbation and relocation
# ---------------------------------------------------------------------------


def perturb_environment(env: Environment, fraction: float, seed: int) -> Environment:
    """Re-draw angle and phase of ceil(fraction*M) scatterers per ensemble.

    fraction 0 returns a bit-identical world; fraction 1 fully decorrelates
    every ensemble.  Deterministic given the seed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    M = env.scatter_count
    k = math.ceil(fraction * M)
    kwargs = env._copy_kwargs()
    kwargs["perturbations"] = env.perturbations + ((float(fraction), int(seed)),)
    if k == 0:
        return Environment(**kwargs)

    rng = np.random.default_rng([int(seed), _STREAM_PERTURB])
    L = env.n_elements

    ris_angles = np.array(env._ris_angles)
    ris_phases = np.array(env._ris_phases)
    # Per-row index choice without replacement, vectorized across rows.
    idx = np.argpartition(rng.random((L, M)), k - 1, axis=1)[:, :k]
    rows = np.arange(L)[:, None]
    ris_angles[rows, idx] = rng.uniform(0.0, 2.0 * math.pi, (L, k))
    ris_phases[rows, idx] = rng.uniform(0.0, 2.0 * math.pi, (L, k))
    kwargs["ris_angles"] = ris_angles
    kwargs["ris_phases"] = ris_phases

    direct = {}
    for dev_id in env.direct_ids():
        ens = env._direct[dev_id]
        angles = np.array(ens["angles"])
        phases = np.array(ens["phases"])
        sel = rng.choice(M, size=k, replace=False)
        angles[sel] = rng.uniform(0.0, 2.0 * math.pi, k)
        phases[sel] = rng.uniform(0.0, 2.0 * math.pi, k)
        direct[dev_id] = {
            "angles": angles,
            "phases": phases,
            "amps": ens["amps"],
            "los": ens["los"],
        }
    kwargs["direct"] = direct
    return Environment(**kwargs)


def move_device(env: Environment, device_id: str, position) -> Environment:
    """Return a world with one device relocated; all ensembles are kept."""
    if device_id not in env.devices:
        raise KeyError(f"unknown device id {device_id!r}")
    new_pos = as_position(position)
    devices = dict(env.devices)
    devices[device_id] = new_pos
    _check_entity_distances(devices, env.attacker_position, env.attacker_id)
    kwargs = env._copy_kwargs()
    kwargs["devices"] = devices
    return Environment(**kwargs)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def environment_to_dict(env: Environment) -> dict:
    devices = [
        {"id": dev_id, "x": pos.x, "y": pos.y, "z": pos.z, "role": "device"}
        for dev_id, pos in sorted(env.devices.items())
    ]
    devices.append({
        "id": env.attacker_id,
        "x": env.attacker_position.x,
        "y": env.attacker_position.y,
        "z": env.attacker_position.z,
        "role": "attacker",
    })
    pattern = None
    if env.pattern_delta > 0:
        pattern = {"delta": env.pattern_delta}
    return {
        "version": ENV_FORMAT_VERSION,
        "frequency_hz": env.frequency_hz,
        "seed": env.master_seed,
        "M": env.scatter_count,
        "path_loss_exponent": env.path_loss_exponent,
        "noise_floor_dbm": env.noise_floor_dbm,
        "devices": devices,
        "ensembles": {
            "ris_elements": env.n_elements,
            "seed": env.master_seed,
            "draw_counter": draw_counter(env),
            "rician_k": env.rician_k,
            "perturbations": [[f, s] for f, s in env.perturbations],
        },
        "pattern_diversity": pattern,
    }


def save_environment(env: Environment, path) -> None:
    with open(path, "w") as fh:
        json.dump(environment_to_dict(env), fh, sort_keys=True, indent=1)
        fh.write("\n")


def environment_from_dict(doc: dict) -> Environment:
    if doc.get("version") != ENV_FORMAT_VERSION:
        raise ValueError(f"unsupported environment format version "
                         f"{doc.get('version')!r}")
    devices = {}
    attacker_pos = None
    attacker_id = None
    for entry in doc["devices"]:
        pos = Position(entry["x"], entry["y"], entry["z"])
        if entry.get("role") == "attacker":
            attacker_pos = pos
            attacker_id = entry["id"]
        else:
            if entry["id"] in devices:
                raise ValueError(f"duplicate device id {entry['id']!r}")
            devices[entry["id"]] = pos
    if attacker_pos is None:
        raise ValueError("environment document lacks an attacker entry")
    ens = doc["ensembles"]
    pattern = doc.get("pattern_diversity") or {}
    spec = EnvironmentSpec(
        devices=devices,
        attacker_position=attacker_pos,
        frequency_hz=doc["frequency_hz"],
        n_elements=ens["ris_elements"],
        scatter_count=doc["M"],
        path_loss_exponent=doc["path_loss_exponent"],
        noise_floor_dbm=doc["noise_floor_dbm"],
        rician_k=ens.get("rician_k", 0.0),
        pattern_diversity=pattern.get("delta", 0.0),
        attacker_id=attacker_id,
    )
    env = synthesize_environment(spec, doc["seed"])
    if ens.get("draw_counter") not in (None, draw_counter(env)):
        raise ValueError("draw_counter mismatch: document was produced by an "
                         "incompatible synthesis procedure")
    for frac, seed in ens.get("perturbations", []):
        env = perturb_environment(env, frac, seed)
    return env


def load_environment(path) -> Environment:
    with open(path) as fh:
        return environment_from_dict(json.load(fh))


def environments_equal(a: Environment, b: Environment) -> bool:
    """Exact structural equality; used by tests and the determinism contract."""
    if (a.frequency_hz, a.master_seed, a.n_elements, a.scatter_count,
            a.path_loss_exponent, a.noise_floor_dbm, a.rician_k,
            a.pattern_delta, a.perturbations) != \
       (b.frequency_hz, b.master_seed, b.n_elements, b.scatter_count,
            b.path_loss_exponent, b.noise_floor_dbm, b.rician_k,
            b.pattern_delta, b.perturbations):
        return False
    if a.devices != b.devices or a.attacker_id != b.attacker_id \
            or a.attacker_position != b.attacker_position:
        return False
    if not (np.array_equal(a._ris_angles, b._ris_angles)
            and np.array_equal(a._ris_phases, b._ris_phases)
            and np.array_equal(a._ris_amps, b._ris_amps)
            and np.array_equal(a._ris_los, b._ris_los)):
        return False
    if a._direct.keys() != b._direct.keys():
        return False
    for key in a._direct:
        for name in ("angles", "phases", "amps", "los"):
            if not np.array_equal(a._direct[key][name], b._direct[key][name]):
                return False
    if a._pattern.keys() != b._pattern.keys():
        return False
    for key in a._pattern:
        if not np.array_equal(a._pattern[key], b._pattern[key]):
            return False
    return True
