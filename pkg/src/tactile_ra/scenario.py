"""Problem instances: topology, users, service chains, channels, constants.

One Scenario is one frame: channel power gains are drawn once and stay
fixed.  All generation is a pure function of (config, seed).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

MBS_INDEX = 0            # macro BS is always index 0; SBSs are 1..J
MIN_DISTANCE_KM = 0.035  # near-field clamp for the path-loss law
CELL_DISK_FACTOR = 0.55  # users/teleoperators stay in the inner cell disk
RING_FACTOR = 0.7        # SBS ring radius as a share of the coverage radius


class ConfigError(ValueError):
    """Invalid configuration; .violations lists every failed invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


def channel_gain(ref_gain: float, distance_km: float, pathloss_exponent: float,
                 fade: float) -> float:
    """Channel power gain: fade * ref_gain * d^-alpha, d clamped to near field."""
    d = max(distance_km, MIN_DISTANCE_KM)
    return fade * ref_gain * d ** (-pathloss_exponent)


@dataclass(frozen=True)
class NfSpec:
    """One network function of a chain; beta is per-BS (MBS first)."""
    nf_id: int
    processing_coefficient_per_bs: tuple[float, ...]

    def validate(self, num_bs: int, ctx: str) -> list[str]:
        errs = []
        if len(self.processing_coefficient_per_bs) != num_bs:
            errs.append(f"{ctx}: processing_coefficient_per_bs has "
                        f"{len(self.processing_coefficient_per_bs)} entries, expected {num_bs}")
        if any(b <= 0 for b in self.processing_coefficient_per_bs):
            errs.append(f"{ctx}: processing coefficients must be > 0")
        return errs


@dataclass(frozen=True)
class ServiceSpec:
    """A network service: a fixed ordered chain of NFs plus its QoS budget."""
    service_id: int
    e2e_delay_max: float          # seconds
    payload_bits: float           # bits per request
    chain: tuple[NfSpec, ...]

    def validate(self, num_bs: int) -> list[str]:
        errs = []
        ctx = f"services[{self.service_id}]"
        if self.e2e_delay_max <= 0:
            errs.append(f"{ctx}: e2e_delay_max must be > 0")
        if self.payload_bits <= 0:
            errs.append(f"{ctx}: payload_bits must be > 0")
        if len(self.chain) < 1:
            errs.append(f"{ctx}: chain must contain at least one NF")
        for i, nf in enumerate(self.chain):
            errs += nf.validate(num_bs, f"{ctx}.chain[{i}]")
        return errs


@dataclass(frozen=True)
class ScenarioConfig:
    num_sbs: int                        # J (SBS count; total BSs = J+1)
    coverage_area: float                # km^2
    num_ul_subcarriers: int             # K
    num_dl_subcarriers: int             # L
    ul_bandwidth: float                 # Hz
    dl_bandwidth: float                 # Hz
    noise_psd: float                    # dBm/Hz
    pathloss_exponent: float
    pathloss_ref_gain: float            # linear power gain at 1 km
    qos_exponent_ul: float
    qos_exponent_dl: float
    violation_prob_ul: float
    violation_prob_dl: float
    nonempty_buffer_prob_ul: float
    nonempty_buffer_prob_dl: float
    max_power_mbs: float                # dBm
    max_power_sbs: float                # dBm
    max_power_user: float               # dBm
    cost_weight_power: float            # $/W
    cost_weight_exec: float             # $/ms
    services: tuple[ServiceSpec, ...]
    users_per_bs_per_service: int
    backhaul_capacity: float            # bit/s, every inter-BS link
    processing_rate: float              # bit/s, every BS server
    rng_seed: int = 0

    @property
    def num_bs(self) -> int:
        return self.num_sbs + 1

    def validate(self) -> list[str]:
        errs = []
        if self.num_sbs < 1:
            errs.append("num_sbs must be >= 1")
        if self.num_ul_subcarriers < 1:
            errs.append("num_ul_subcarriers must be >= 1")
        if self.num_dl_subcarriers < 1:
            errs.append("num_dl_subcarriers must be >= 1")
        for name in ("coverage_area", "ul_bandwidth", "dl_bandwidth",
                     "pathloss_ref_gain", "backhaul_capacity", "processing_rate",
                     "cost_weight_power", "cost_weight_exec"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be > 0")
        for name in ("qos_exponent_ul", "qos_exponent_dl"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be > 0")
        for name in ("violation_prob_ul", "violation_prob_dl"):
            if not (0.0 < getattr(self, name) < 1.0):
                errs.append(f"{name} must lie in (0, 1)")
        for name in ("nonempty_buffer_prob_ul", "nonempty_buffer_prob_dl"):
            if not (0.0 < getattr(self, name) <= 1.0):
                errs.append(f"{name} must lie in (0, 1]")
        if self.users_per_bs_per_service < 1:
            errs.append("users_per_bs_per_service must be >= 1")
        if len(self.services) < 1:
            errs.append("services must be non-empty")
        for svc in self.services:
            errs += svc.validate(self.num_bs)
        return errs


@dataclass(frozen=True)
class User:
    user_id: int
    bs_id: int
    service_id: int
    position: tuple[float, float]    # km, MBS at origin


@dataclass(frozen=True)
class Teleoperator:
    teleop_id: int
    bs_id: int
    position: tuple[float, float]


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable problem instance; safe to share across solver runs."""
    config: ScenarioConfig
    bs_positions: np.ndarray          # (J+1, 2) km, row 0 = MBS
    users: tuple[User, ...]
    teleoperators: tuple[Teleoperator, ...]
    pairing: tuple[int, ...]          # user index -> teleoperator index, -1 unpaired
    channel_ul: np.ndarray            # (U, J+1, K) power gains
    channel_dl: np.ndarray            # (O, J+1, L) power gains
    backhaul: np.ndarray              # (J+1, J+1) bit/s, diagonal unused
    processing: np.ndarray            # (J+1,) bit/s

    # -- derived quantities ------------------------------------------------
    @property
    def num_bs(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_teleops(self) -> int:
        return len(self.teleoperators)

    @property
    def subcarrier_bw_ul(self) -> float:
        return self.config.ul_bandwidth / self.config.num_ul_subcarriers

    @property
    def subcarrier_bw_dl(self) -> float:
        return self.config.dl_bandwidth / self.config.num_dl_subcarriers

    @property
    def noise_ul(self) -> float:
        """Noise power per UL subcarrier (W): PSD x subcarrier bandwidth."""
        return dbm_to_watts(self.config.noise_psd) * self.subcarrier_bw_ul

    @property
    def noise_dl(self) -> float:
        return dbm_to_watts(self.config.noise_psd) * self.subcarrier_bw_dl

    def service_of(self, u: int) -> ServiceSpec:
        return self.config.services[self.users[u].service_id]

    def max_power_user_w(self, u: int) -> float:
        return dbm_to_watts(self.config.max_power_user)

    def max_power_bs_w(self, j: int) -> float:
        dbm = self.config.max_power_mbs if j == MBS_INDEX else self.config.max_power_sbs
        return dbm_to_watts(dbm)

    def users_at(self, j: int) -> list[int]:
        return [u.user_id for u in self.users if u.bs_id == j]

    def teleops_at(self, j: int) -> list[int]:
        return [o.teleop_id for o in self.teleoperators if o.bs_id == j]

    def paired_teleop(self, u: int) -> int:
        return self.pairing[u]

    def paired_user(self, o: int) -> int:
        for u, t in enumerate(self.pairing):
            if t == o:
                return u
        return -1

    def validate(self) -> list[str]:
        errs = []
        cfg = self.config
        if self.channel_ul.shape != (self.num_users, self.num_bs, cfg.num_ul_subcarriers):
            errs.append("channel_ul shape mismatch")
        if self.channel_dl.shape != (self.num_teleops, self.num_bs, cfg.num_dl_subcarriers):
            errs.append("channel_dl shape mismatch")
        if np.any(self.channel_ul < 0) or np.any(self.channel_dl < 0):
            errs.append("channel gains must be >= 0")
        if len(self.pairing) != self.num_users:
            errs.append("pairing must have one entry per user")
        paired = [t for t in self.pairing if t >= 0]
        if len(paired) != len(set(paired)):
            errs.append("pairing must be injective (teleoperator paired at most once)")
        if any(t >= self.num_teleops for t in paired):
            errs.append("pairing references unknown teleoperator")
        off = ~np.eye(self.num_bs, dtype=bool)
        if np.any(self.backhaul[off] <= 0):
            errs.append("backhaul capacities must be > 0 off-diagonal")
        if not np.allclose(self.backhaul, self.backhaul.T):
            errs.append("backhaul matrix must be symmetric")
        if np.any(self.processing <= 0):
            errs.append("processing rates must be > 0")
        for u in self.users:
            if not (0 <= u.bs_id < self.num_bs):
                errs.append(f"user {u.user_id} attached to unknown BS {u.bs_id}")
            if u.service_id >= len(cfg.services):
                errs.append(f"user {u.user_id} requests unknown service {u.service_id}")
        return errs


# ---------------------------------------------------------------------------
# generation

def _cell_radius(cfg: ScenarioConfig) -> float:
    """Inner serving-disk radius: an equal area share, shrunk so that no
    disk reaches a neighbouring BS (keeps serving links dominant over
    cross-cell ones, i.e. a noise-limited regime)."""
    r_cov = math.sqrt(cfg.coverage_area / math.pi)
    ring = RING_FACTOR * r_cov
    r = CELL_DISK_FACTOR * math.sqrt(cfg.coverage_area / (cfg.num_bs * math.pi))
    r = min(r, 0.35 * ring)
    if cfg.num_sbs >= 2:
        adjacent = 2.0 * ring * math.sin(math.pi / cfg.num_sbs)
        r = min(r, 0.35 * adjacent)
    return r


def _bs_positions(cfg: ScenarioConfig) -> np.ndarray:
    """MBS at the origin, SBSs equidistant on a ring around it."""
    r_cov = math.sqrt(cfg.coverage_area / math.pi)
    ring = RING_FACTOR * r_cov
    pos = np.zeros((cfg.num_bs, 2))
    for i in range(cfg.num_sbs):
        ang = 2.0 * math.pi * i / cfg.num_sbs
        pos[i + 1] = (ring * math.cos(ang), ring * math.sin(ang))
    return pos


def _draw_in_disk(rng: np.random.Generator, center, radius: float):
    r = radius * math.sqrt(rng.uniform())
    ang = rng.uniform(0.0, 2.0 * math.pi)
    return (center[0] + r * math.cos(ang), center[1] + r * math.sin(ang))


def generate(config: ScenarioConfig, seed: int | None = None) -> Scenario:
    """Build a Scenario from a config; deterministic given (config, seed).

    seed defaults to config.rng_seed.  Users are dropped uniformly in the
    inner disk of their serving SBS (1..J); each user gets exactly one
    teleoperator at a uniformly chosen BS.  Gains are
    fade * ref_gain * d^-alpha with unit-mean exponential fades (squared
    Rayleigh), drawn user-major, then BS, then subcarrier.
    """
    violations = config.validate()
    if violations:
        raise ConfigError(violations)
    if seed is None:
        seed = config.rng_seed
    rng = np.random.default_rng(seed)

    bs_pos = _bs_positions(config)
    r_cell = _cell_radius(config)

    users = []
    uid = 0
    for j in range(1, config.num_bs):           # tactile users live at SBSs
        for s in range(len(config.services)):
            for _ in range(config.users_per_bs_per_service):
                users.append(User(uid, j, s, _draw_in_disk(rng, bs_pos[j], r_cell)))
                uid += 1

    teleops = []
    pairing = []
    for u in users:
        bs = int(rng.integers(0, config.num_bs))
        teleops.append(Teleoperator(u.user_id, bs, _draw_in_disk(rng, bs_pos[bs], r_cell)))
        pairing.append(u.user_id)

    nU, nO, nB = len(users), len(teleops), config.num_bs
    K, L = config.num_ul_subcarriers, config.num_dl_subcarriers

    dist_u = np.zeros((nU, nB))
    for u in users:
        dist_u[u.user_id] = np.hypot(bs_pos[:, 0] - u.position[0],
                                     bs_pos[:, 1] - u.position[1])
    dist_o = np.zeros((nO, nB))
    for o in teleops:
        dist_o[o.teleop_id] = np.hypot(bs_pos[:, 0] - o.position[0],
                                       bs_pos[:, 1] - o.position[1])

    d_u = np.maximum(dist_u, MIN_DISTANCE_KM)
    d_o = np.maximum(dist_o, MIN_DISTANCE_KM)
    alpha, g0 = config.pathloss_exponent, config.pathloss_ref_gain
    fades_ul = rng.exponential(1.0, size=(nU, nB, K))
    fades_dl = rng.exponential(1.0, size=(nO, nB, L))
    channel_ul = fades_ul * (g0 * d_u ** (-alpha))[:, :, None]
    channel_dl = fades_dl * (g0 * d_o ** (-alpha))[:, :, None]

    backhaul = np.full((nB, nB), config.backhaul_capacity)
    np.fill_diagonal(backhaul, 0.0)
    processing = np.full(nB, config.processing_rate)

    scn = Scenario(config=config, bs_positions=bs_pos, users=tuple(users),
                   teleoperators=tuple(teleops), pairing=tuple(pairing),
                   channel_ul=channel_ul, channel_dl=channel_dl,
                   backhaul=backhaul, processing=processing)
    errs = scn.validate()
    if errs:                                     # defensive; should not happen
        raise ConfigError(errs)
    return scn


# ---------------------------------------------------------------------------
# defaults (numerical-results parameter set)

def default_services(num_bs: int, num_services: int = 1, chain_length: int = 2,
                     e2e_delay_ms: float = 1.0, payload_bits: float = 1000.0
                     ) -> tuple[ServiceSpec, ...]:
    """Standard service set: fixed chains with a repeating beta pattern."""
    services = []
    for s in range(num_services):
        chain = []
        for f in range(chain_length):
            beta = tuple(0.8 + 0.4 * ((f + s + n) % 3) for n in range(num_bs))
            chain.append(NfSpec(f, beta))
        services.append(ServiceSpec(s, e2e_delay_ms * 1e-3, payload_bits, tuple(chain)))
    return tuple(services)


def default_config(num_sbs: int = 4, users_per_bs: int = 5,
                   num_ul_subcarriers: int = 8, num_dl_subcarriers: int = 16,
                   e2e_delay_ms: float = 1.0, num_services: int = 1,
                   chain_length: int = 2, payload_bits: float = 1000.0,
                   rng_seed: int = 0) -> ScenarioConfig:
    """Reference parameter set used throughout the experiments."""
    return ScenarioConfig(
        num_sbs=num_sbs,
        coverage_area=10.0,
        num_ul_subcarriers=num_ul_subcarriers,
        num_dl_subcarriers=num_dl_subcarriers,
        ul_bandwidth=5e6,
        dl_bandwidth=5e6,
        noise_psd=-174.0,
        pathloss_exponent=3.0,
        pathloss_ref_gain=1e-13,     # -130 dB at 1 km
        qos_exponent_ul=11.0,
        qos_exponent_dl=11.0,
        violation_prob_ul=1e-3,
        violation_prob_dl=1e-3,
        nonempty_buffer_prob_ul=1.0,
        nonempty_buffer_prob_dl=1.0,
        max_power_mbs=46.0,
        max_power_sbs=43.0,
        max_power_user=23.0,
        cost_weight_power=1.0,
        cost_weight_exec=1.0,
        services=default_services(num_sbs + 1, num_services, chain_length,
                                  e2e_delay_ms, payload_bits),
        users_per_bs_per_service=users_per_bs,
        backhaul_capacity=1e9,
        processing_rate=1e9,
        rng_seed=rng_seed,
    )


# ---------------------------------------------------------------------------
# persistence (JSON; unknown keys rejected)

_CONFIG_FIELDS = {f: t for f, t in ScenarioConfig.__annotations__.items()}
_SERVICE_FIELDS = set(ServiceSpec.__annotations__)
_NF_FIELDS = set(NfSpec.__annotations__)


def config_to_dict(config: ScenarioConfig) -> dict:
    return asdict(config)


def config_from_dict(data: dict) -> ScenarioConfig:
    errs = []
    unknown = set(data) - set(_CONFIG_FIELDS)
    for k in sorted(unknown):
        errs.append(f"unknown key: {k}")
    missing = set(_CONFIG_FIELDS) - set(data) - {"rng_seed"}
    for k in sorted(missing):
        errs.append(f"missing key: {k}")
    services = []
    for i, svc in enumerate(data.get("services", ())):
        if not isinstance(svc, dict):
            errs.append(f"services[{i}]: expected object")
            continue
        for k in sorted(set(svc) - _SERVICE_FIELDS):
            errs.append(f"services[{i}]: unknown key: {k}")
        chain = []
        for q, nf in enumerate(svc.get("chain", ())):
            if not isinstance(nf, dict):
                errs.append(f"services[{i}].chain[{q}]: expected object")
                continue
            for k in sorted(set(nf) - _NF_FIELDS):
                errs.append(f"services[{i}].chain[{q}]: unknown key: {k}")
            try:
                chain.append(NfSpec(int(nf["nf_id"]),
                                    tuple(float(b) for b in nf["processing_coefficient_per_bs"])))
            except (KeyError, TypeError, ValueError) as exc:
                errs.append(f"services[{i}].chain[{q}]: {exc}")
        try:
            services.append(ServiceSpec(int(svc["service_id"]),
                                        float(svc["e2e_delay_max"]),
                                        float(svc["payload_bits"]), tuple(chain)))
        except (KeyError, TypeError, ValueError) as exc:
            errs.append(f"services[{i}]: {exc}")
    if errs:
        raise ConfigError(errs)

    kwargs = {k: v for k, v in data.items() if k != "services"}
    kwargs["services"] = tuple(services)
    for name in ("num_sbs", "num_ul_subcarriers", "num_dl_subcarriers",
                 "users_per_bs_per_service", "rng_seed"):
        if name in kwargs:
            kwargs[name] = int(kwargs[name])
    cfg = ScenarioConfig(**kwargs)
    violations = cfg.validate()
    if violations:
        raise ConfigError(violations)
    return cfg


def save_config(config: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n")


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{p}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"])
    if not isinstance(data, dict):
        raise ConfigError([f"{p}: top-level value must be an object"])
    return config_from_dict(data)


def save_scenario(scn: Scenario, path) -> None:
    """Dump a generated instance: config plus all arrays (row-major:
    user/teleoperator, then BS, then subcarrier)."""
    doc = {
        "config": config_to_dict(scn.config),
        "bs_positions": scn.bs_positions.tolist(),
        "users": [asdict(u) for u in scn.users],
        "teleoperators": [asdict(o) for o in scn.teleoperators],
        "pairing": list(scn.pairing),
        "channel_ul": scn.channel_ul.tolist(),
        "channel_dl": scn.channel_dl.tolist(),
        "backhaul": scn.backhaul.tolist(),
        "processing": scn.processing.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
