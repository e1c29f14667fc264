"""Domain types and the analytic latency / energy / transition model.

All public costs are integers: latency in picoseconds (ps), energy in
femtojoules (fJ), power in nanowatts (nW), frequency in kHz and voltage in
millivolts (mV).  A voltage of ``0`` denotes a power-gated domain.

Conversions used throughout::

    latency [ps]  = cycles * 1e9 / f [kHz]
    energy  [fJ]  = power [nW] * time [ps] / 1e6
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

GATED = 0
PS_PER_SECOND = 10**12
NW_PS_PER_FJ = 10**6


def div_round_half_up(num: int, den: int) -> int:
    """Round ``num / den`` to the nearest integer, halves away from -inf."""
    if den <= 0:
        raise ValueError("denominator must be positive")
    return (2 * num + den) // (2 * den)


def round_half_up(x: Fraction | int) -> int:
    x = Fraction(x)
    return div_round_half_up(x.numerator, x.denominator)


def ceil_div(num: int, den: int) -> int:
    return -(-num // den)


def leakage_energy(power_nw: int, time_ps: Fraction | int) -> int:
    """Energy in fJ dissipated by ``power_nw`` over ``time_ps``, rounded half-up."""
    return round_half_up(Fraction(power_nw) * Fraction(time_ps) / NW_PS_PER_FJ)


# ---------------------------------------------------------------------------
# Voltages and rails
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VoltageMenu:
    """Uniformly discretized candidate voltages ``v_min, v_min + step, ... <= v_max``."""

    v_min: int = 900
    v_max: int = 1300
    v_step: int = 50

    def __post_init__(self) -> None:
        if self.v_min <= 0 or self.v_step <= 0 or self.v_max < self.v_min:
            raise ValueError("voltage menu requires 0 < v_min <= v_max and v_step > 0")
        if (self.v_max - self.v_min) % self.v_step:
            raise ValueError("voltage menu: v_max - v_min must be a multiple of v_step")

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(range(self.v_min, self.v_max + 1, self.v_step))

    def __len__(self) -> int:
        return (self.v_max - self.v_min) // self.v_step + 1

    def __iter__(self) -> Iterator[int]:
        return iter(self.levels)

    def __contains__(self, v: object) -> bool:
        return (
            isinstance(v, int)
            and self.v_min <= v <= self.v_max
            and (v - self.v_min) % self.v_step == 0
        )

    def index(self, v: int) -> int:
        if v not in self:
            raise ValueError(f"{v} mV is not in the voltage menu")
        return (v - self.v_min) // self.v_step


@dataclass(frozen=True, order=True)
class RailSet:
    """Sorted, distinct subset of the voltage menu shared by all domains."""

    rails: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.rails:
            raise ValueError("rail set must contain at least one rail")
        if any(b <= a for a, b in zip(self.rails, self.rails[1:])):
            raise ValueError("rail set must be strictly ascending")
        if self.rails[0] <= 0:
            raise ValueError("rails must be positive voltages (0 is reserved for gated)")

    @classmethod
    def of(cls, levels: Iterable[int], n_max: int | None = None) -> "RailSet":
        rails = tuple(sorted(set(levels)))
        if n_max is not None and len(rails) > n_max:
            raise ValueError(f"rail set of size {len(rails)} exceeds N_max={n_max}")
        return cls(rails)

    def __len__(self) -> int:
        return len(self.rails)

    def __iter__(self) -> Iterator[int]:
        return iter(self.rails)

    def __contains__(self, v: object) -> bool:
        return v in self.rails

    @property
    def highest(self) -> int:
        return self.rails[-1]

    def __str__(self) -> str:
        return "{" + ",".join(f"{v / 1000:g}V" for v in self.rails) + "}"


# ---------------------------------------------------------------------------
# Workload description
# ---------------------------------------------------------------------------


class DomainKind(str, enum.Enum):
    DVFS = "dvfs"
    GATED_BANK = "gated_bank"


@dataclass(frozen=True)
class DomainSpec:
    """One power-managed unit.

    A ``gated_bank`` domain has no clock of its own: it is supplied by the rail
    of its ``supply`` dvfs domain and may be gated during idle windows.
    ``vf_table`` / ``leak_table`` optionally override the first-order scaling
    with characterized ``(mV, kHz)`` / ``(mV, nW)`` points.
    """

    id: int
    kind: DomainKind
    nominal_freq: int = 0
    capacitance_scale: Fraction = Fraction(1)
    leak_power_nominal: int = 0
    wake_energy: int = 0
    wake_latency: int = 0
    name: str = ""
    supply: int | None = None
    vf_table: tuple[tuple[int, int], ...] = ()
    leak_table: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "capacitance_scale", Fraction(self.capacitance_scale))
        if self.id < 0:
            raise ValueError("domain id must be non-negative")
        if self.kind is DomainKind.DVFS and self.nominal_freq <= 0:
            raise ValueError(f"domain {self.id}: dvfs domains need nominal_freq > 0")
        if self.kind is DomainKind.GATED_BANK and self.supply is None:
            raise ValueError(f"domain {self.id}: gated_bank domains need a supply domain")
        if self.capacitance_scale < 0:
            raise ValueError(f"domain {self.id}: capacitance_scale must be non-negative")
        for label, value in (
            ("leak_power_nominal", self.leak_power_nominal),
            ("wake_energy", self.wake_energy),
            ("wake_latency", self.wake_latency),
        ):
            if value < 0:
                raise ValueError(f"domain {self.id}: {label} must be non-negative")

    @property
    def is_dvfs(self) -> bool:
        return self.kind is DomainKind.DVFS


class IdleWindow(NamedTuple):
    domain: int
    start: Fraction
    end: Fraction

    @property
    def width(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class LayerProfile:
    layer_id: int
    cycles: tuple[int, ...]
    dynamic_energy_nominal: tuple[int, ...]
    active_fraction: tuple[Fraction, ...]
    bank_idle_windows: tuple[IdleWindow, ...] = ()
    name: str = ""
    layer_type: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "cycles", tuple(self.cycles))
        object.__setattr__(self, "dynamic_energy_nominal", tuple(self.dynamic_energy_nominal))
        object.__setattr__(self, "active_fraction", tuple(Fraction(a) for a in self.active_fraction))
        windows = tuple(
            IdleWindow(int(w[0]), Fraction(w[1]), Fraction(w[2])) for w in self.bank_idle_windows
        )
        object.__setattr__(self, "bank_idle_windows", windows)
        n = len(self.cycles)
        if len(self.dynamic_energy_nominal) != n or len(self.active_fraction) != n:
            raise ValueError(f"layer {self.layer_id}: per-domain lists differ in length")
        if any(c < 0 for c in self.cycles):
            raise ValueError(f"layer {self.layer_id}: cycles must be >= 0")
        if any(e < 0 for e in self.dynamic_energy_nominal):
            raise ValueError(f"layer {self.layer_id}: dynamic_energy_nominal must be >= 0")
        if any(not 0 <= a <= 1 for a in self.active_fraction):
            raise ValueError(f"layer {self.layer_id}: active_fraction must lie in [0, 1]")
        for d in range(n):
            if (self.cycles[d] > 0 or self.dynamic_energy_nominal[d] > 0) and self.active_fraction[d] == 0:
                raise ValueError(
                    f"layer {self.layer_id}: domain {d} has work but active_fraction = 0"
                )
        per_domain: dict[int, list[IdleWindow]] = {}
        for w in windows:
            if not 0 <= w.start < w.end <= 1:
                raise ValueError(f"layer {self.layer_id}: idle window {w} not within [0, 1]")
            if not 0 <= w.domain < n:
                raise ValueError(f"layer {self.layer_id}: idle window references unknown domain {w.domain}")
            per_domain.setdefault(w.domain, []).append(w)
        for ws in per_domain.values():
            ws.sort()
            if any(b.start < a.end for a, b in zip(ws, ws[1:])):
                raise ValueError(f"layer {self.layer_id}: idle windows overlap")

    def is_active(self, domain_id: int) -> bool:
        return self.active_fraction[domain_id] > 0

    def idle_windows(self, domain_id: int) -> tuple[IdleWindow, ...]:
        """Idle windows of a bank; a bank unused by the layer is idle throughout."""
        ws = tuple(sorted(w for w in self.bank_idle_windows if w.domain == domain_id))
        if not ws and not self.is_active(domain_id):
            return (IdleWindow(domain_id, Fraction(0), Fraction(1)),)
        return ws


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    domains: tuple[DomainSpec, ...]
    layers: tuple[LayerProfile, ...]
    v_nom: int = 1200

    def __post_init__(self) -> None:
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("workload must contain at least one layer (L >= 1)")
        if not self.domains:
            raise ValueError("workload must declare at least one domain")
        if self.v_nom <= 0:
            raise ValueError("v_nom must be a positive voltage")
        for pos, d in enumerate(self.domains):
            if d.id != pos:
                raise ValueError("domain ids must be 0..K-1 in declaration order")
            if d.kind is DomainKind.GATED_BANK:
                if not (0 <= d.supply < len(self.domains)) or not self.domains[d.supply].is_dvfs:
                    raise ValueError(f"domain {d.id}: supply must reference a dvfs domain")
        for pos, layer in enumerate(self.layers, start=1):
            if layer.layer_id != pos:
                raise ValueError("layer ids must be 1..L in order")
            if len(layer.cycles) != len(self.domains):
                raise ValueError(f"layer {layer.layer_id}: references undeclared domains")
            for d in self.domains:
                if d.kind is DomainKind.GATED_BANK:
                    if layer.cycles[d.id]:
                        raise ValueError(f"layer {layer.layer_id}: gated_bank domain {d.id} cannot carry cycles")
                    if layer.is_active(d.id) and not layer.is_active(d.supply):
                        raise ValueError(
                            f"layer {layer.layer_id}: bank {d.id} is active but its supply domain is idle"
                        )
            for w in layer.bank_idle_windows:
                if self.domains[w.domain].kind is not DomainKind.GATED_BANK:
                    raise ValueError(f"layer {layer.layer_id}: idle windows are only valid for gated_bank domains")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_domains(self) -> int:
        return len(self.domains)


# ---------------------------------------------------------------------------
# Voltage scaling
# ---------------------------------------------------------------------------


def _table_lookup(table: tuple[tuple[int, int], ...], v: int, what: str) -> int:
    for tv, value in table:
        if tv == v:
            return value
    raise ValueError(f"{what} table has no entry for {v} mV")


def scale_frequency(domain: DomainSpec, v: int, v_nom: int) -> int:
    """Clock frequency (kHz) of ``domain`` at ``v``: linear in voltage, floored."""
    if v == GATED:
        raise ValueError("frequency undefined for gated domain")
    if domain.vf_table:
        return _table_lookup(domain.vf_table, v, "V-f")
    return domain.nominal_freq * v // v_nom


def scale_dynamic_energy(e_nominal: int, v: int, v_nom: int) -> int:
    """CV^2 scaling of a nominal dynamic energy, rounded half-up."""
    return div_round_half_up(e_nominal * v * v, v_nom * v_nom)


def leak_power(domain: DomainSpec, v: int, v_nom: int) -> int:
    """Leakage power (nW); linear in voltage unless a table is given."""
    if v == GATED:
        return 0
    if domain.leak_table:
        return _table_lookup(domain.leak_table, v, "V-leak")
    return div_round_half_up(domain.leak_power_nominal * v, v_nom)


# ---------------------------------------------------------------------------
# Bank gating
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GatingPlan:
    gated_windows: tuple[IdleWindow, ...] = ()
    leakage_saved: int = 0
    wake_events: int = 0
    wake_energy: int = 0

    @property
    def net_saved(self) -> int:
        return self.leakage_saved - self.wake_energy


def plan_bank_gating(layer: LayerProfile, domain: DomainSpec, t_op: int, leak_nw: int) -> GatingPlan:
    """Break-even gating of a bank's idle windows within one layer.

    A window lasting ``w * t_op`` is gated when the leakage it would burn
    exceeds one wake-up (``leak * w * t_op > wake_energy``) and the bank can be
    woken again before the window closes (``w * t_op > wake_latency``).
    """
    if domain.kind is not DomainKind.GATED_BANK:
        raise ValueError("bank gating applies to gated_bank domains only")
    kept = []
    saved = 0
    for w in layer.idle_windows(domain.id):
        duration = w.width * t_op
        if duration <= domain.wake_latency:
            continue
        if leak_nw * duration <= domain.wake_energy * NW_PS_PER_FJ:
            continue
        kept.append(w)
        saved += leakage_energy(leak_nw, duration)
    return GatingPlan(
        gated_windows=tuple(kept),
        leakage_saved=saved,
        wake_events=len(kept),
        wake_energy=len(kept) * domain.wake_energy,
    )


# ---------------------------------------------------------------------------
# Per-layer cost
# ---------------------------------------------------------------------------


class OpCost(NamedTuple):
    t_op: int
    e_op: int
    leak: int
    e_dynamic: int
    e_static: int
    wake_events: int


@dataclass(frozen=True)
class PowerState:
    """One layer's per-domain assignment (mV, 0 = gated) with its derived costs.

    ``window_gating[d]`` marks bank domains that gate their idle windows
    during the layer according to :func:`plan_bank_gating`.
    """

    assignment: tuple[int, ...]
    window_gating: tuple[bool, ...]
    t_op: int
    e_op: int
    leak: int
    e_dynamic: int = 0
    e_static: int = 0
    wake_events: int = 0

    @property
    def voltage_set(self) -> frozenset[int]:
        return frozenset(v for v in self.assignment if v != GATED)


def _layer_latency(layer: LayerProfile, assignment: Sequence[int], workload: WorkloadProfile) -> int:
    t_op = 0
    for d in workload.domains:
        if not d.is_dvfs:
            continue
        cycles = layer.cycles[d.id]
        v = assignment[d.id]
        if v == GATED:
            if cycles > 0:
                raise ValueError(f"infeasible state: domain {d.id} gated with {cycles} cycles of work")
            continue
        if cycles == 0:
            continue
        f = scale_frequency(d, v, workload.v_nom)
        if f <= 0:
            raise ValueError(f"infeasible state: domain {d.id} has no clock at {v} mV")
        t_op = max(t_op, ceil_div(cycles * 10**9, f))
    return t_op


def evaluate_state(
    layer: LayerProfile,
    assignment: Sequence[int],
    workload: WorkloadProfile,
    window_gating: Sequence[bool] | None = None,
) -> OpCost:
    """Latency, energy and leakage power of running ``layer`` under ``assignment``.

    Latency is the bottleneck over active dvfs domains.  Every powered domain
    leaks for the whole layer, except bank windows gated by the layer's plan,
    which pay one wake-up each instead.
    """
    if len(assignment) != workload.num_domains:
        raise ValueError("assignment length does not match the domain list")
    if window_gating is None:
        window_gating = (False,) * workload.num_domains
    t_op = _layer_latency(layer, assignment, workload)
    v_nom = workload.v_nom
    e_dyn = 0
    e_static = 0
    leak_total = 0
    wakes = 0
    for d in workload.domains:
        v = assignment[d.id]
        if v == GATED:
            continue
        e_dyn += scale_dynamic_energy(layer.dynamic_energy_nominal[d.id], v, v_nom)
        p = leak_power(d, v, v_nom)
        leak_total += p
        e_static += leakage_energy(p, t_op)
        if window_gating[d.id] and d.kind is DomainKind.GATED_BANK:
            plan = plan_bank_gating(layer, d, t_op, p)
            e_static -= plan.net_saved
            wakes += plan.wake_events
    return OpCost(t_op, e_dyn + e_static, leak_total, e_dyn, e_static, wakes)


def make_state(
    layer: LayerProfile,
    assignment: Sequence[int],
    workload: WorkloadProfile,
    window_gating: Sequence[bool] | None = None,
) -> PowerState:
    gating = tuple(bool(g) for g in (window_gating or (False,) * workload.num_domains))
    cost = evaluate_state(layer, assignment, workload, gating)
    return PowerState(
        assignment=tuple(assignment),
        window_gating=gating,
        t_op=cost.t_op,
        e_op=cost.e_op,
        leak=cost.leak,
        e_dynamic=cost.e_dynamic,
        e_static=cost.e_static,
        wake_events=cost.wake_events,
    )


# ---------------------------------------------------------------------------
# Transitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionModel:
    """Rail-switch and wake-up overheads charged between consecutive layers.

    ``base_switch_energy`` is the energy of a full-swing switch
    (``v_high^2 - v_low^2``) for a domain with capacitance scale 1;
    ``wake_latency`` is the default wake-up latency given to banks.
    """

    dvfs_switch_latency: int = 15_000
    wake_latency: int = 5_000
    base_switch_energy: int = 1_000_000
    v_low: int = 900
    v_high: int = 1300

    def __post_init__(self) -> None:
        if min(self.dvfs_switch_latency, self.wake_latency, self.base_switch_energy) < 0:
            raise ValueError("transition costs must be non-negative")
        if not 0 < self.v_low < self.v_high:
            raise ValueError("transition model needs 0 < v_low < v_high")

    def switch_energy(self, domain: DomainSpec, va: int, vb: int) -> int:
        lo, hi = sorted((va, vb))
        cs = domain.capacitance_scale
        return div_round_half_up(
            self.base_switch_energy * cs.numerator * (hi * hi - lo * lo),
            cs.denominator * (self.v_high**2 - self.v_low**2),
        )

    def domain_cost(self, domain: DomainSpec, va: int, vb: int) -> tuple[int, int]:
        """(latency, energy) of one domain moving from ``va`` to ``vb``."""
        if va == vb or vb == GATED:
            return 0, 0
        if va == GATED:
            return domain.wake_latency, domain.wake_energy
        return self.dvfs_switch_latency, self.switch_energy(domain, va, vb)

    def with_switch_energy(self, base_switch_energy: int) -> "TransitionModel":
        return replace(self, base_switch_energy=base_switch_energy)


class TransitionCost(NamedTuple):
    t_trans: int
    e_trans: int


def transition_cost(
    prev: PowerState | Sequence[int],
    nxt: PowerState | Sequence[int],
    domains: Sequence[DomainSpec],
    tm: TransitionModel,
) -> TransitionCost:
    """Domains switch concurrently: latency is the slowest domain, energy adds up."""
    a = prev.assignment if isinstance(prev, PowerState) else tuple(prev)
    b = nxt.assignment if isinstance(nxt, PowerState) else tuple(nxt)
    if len(a) != len(b) or len(a) != len(domains):
        raise ValueError("states must cover the same domain list")
    t = e = 0
    for d, va, vb in zip(domains, a, b):
        dt, de = tm.domain_cost(d, va, vb)
        t = max(t, dt)
        e += de
    return TransitionCost(t, e)


def rail_switches(prev: Sequence[int], nxt: Sequence[int]) -> int:
    """Number of powered domains that change rail between two assignments."""
    return sum(1 for va, vb in zip(prev, nxt) if va != vb and va != GATED and vb != GATED)


# ---------------------------------------------------------------------------
# Deadline and idle interval
# ---------------------------------------------------------------------------


class DutyModel(str, enum.Enum):
    ALWAYS_ACTIVE = "always_active"
    POWER_DOWN = "power_down"


@dataclass(frozen=True)
class DeadlineSpec:
    """Periodic deadline ``t_max = 1 / target_rate`` and the idle-interval model.

    With ``power_down`` both duty decisions are available: stay active
    (``z = 1``, idle power over the slack) or power down (``z = 0``, one flat
    wake charge, which needs ``duty_wake_latency`` of slack).
    """

    target_rate: Fraction
    idle_power: int = 0
    duty_model: DutyModel = DutyModel.ALWAYS_ACTIVE
    duty_wake_energy: int = 0
    duty_wake_latency: int = 0
    t_max: int = field(init=False)

    def __post_init__(self) -> None:
        rate = Fraction(self.target_rate)
        if rate <= 0:
            raise ValueError("target rate must be positive")
        object.__setattr__(self, "target_rate", rate)
        object.__setattr__(self, "duty_model", DutyModel(self.duty_model))
        t_max = (PS_PER_SECOND * rate.denominator) // rate.numerator
        if t_max <= 0:
            raise ValueError("target rate too high: t_max must be > 0")
        object.__setattr__(self, "t_max", t_max)
        if min(self.idle_power, self.duty_wake_energy, self.duty_wake_latency) < 0:
            raise ValueError("idle parameters must be non-negative")

    @classmethod
    def from_t_max(cls, t_max: int, **kwargs) -> "DeadlineSpec":
        return cls(Fraction(PS_PER_SECOND, t_max), **kwargs)

    @property
    def z_options(self) -> tuple[int, ...]:
        if self.duty_model is DutyModel.POWER_DOWN:
            return (1, 0)
        return (1,)

    def duty_feasible(self, t_infer: int, z: int) -> bool:
        if t_infer > self.t_max:
            return False
        slack = self.t_max - t_infer
        return z == 1 or slack == 0 or slack >= self.duty_wake_latency


def idle_energy(deadline: DeadlineSpec, t_infer: int, z: int = 1) -> int:
    """Energy of the idle interval between the end of inference and ``t_max``."""
    if t_infer > deadline.t_max:
        raise ValueError("deadline violated")
    slack = deadline.t_max - t_infer
    if slack == 0:
        return 0
    if z == 1:
        return leakage_energy(deadline.idle_power, slack)
    if deadline.duty_model is not DutyModel.POWER_DOWN:
        raise ValueError("power-down requested but the duty model is always_active")
    if slack < deadline.duty_wake_latency:
        raise ValueError("power-down infeasible: wake latency exceeds the slack")
    return deadline.duty_wake_energy
