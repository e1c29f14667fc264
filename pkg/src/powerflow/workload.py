"""Profile documents, synthetic instances, schedule tables and CSV output.

Profiles and schedules are UTF-8 JSON with integer units (mV, kHz, fJ, nW,
ps).  Rationals (capacitance scales, activity fractions, window bounds) are
written as strings such as ``"3/4"`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import ProfileError
from .model import (
    GATED,
    DeadlineSpec,
    DomainKind,
    DomainSpec,
    DutyModel,
    LayerProfile,
    RailSet,
    TransitionModel,
    VoltageMenu,
    WorkloadProfile,
    make_state,
)
from .solver import Schedule, build_schedule, weighted_optimum, time_dominant_lambda
from .statespace import LayeredStateGraph, build_graph

SCHEMA_VERSION = "1.0"
SCHEDULE_SCHEMA_VERSION = "1.0"
SUPPORTED_SCHEMAS = ("1.0",)


@dataclass(frozen=True)
class IdleSpec:
    idle_power: int = 0
    duty_model: DutyModel = DutyModel.ALWAYS_ACTIVE
    duty_wake_energy: int = 0
    duty_wake_latency: int = 0


@dataclass(frozen=True)
class ProfileDocument:
    workload: WorkloadProfile
    transition_model: TransitionModel = field(default_factory=TransitionModel)
    menu: VoltageMenu = field(default_factory=VoltageMenu)
    idle: IdleSpec = field(default_factory=IdleSpec)
    schema_version: str = SCHEMA_VERSION
    synthetic: bool = True
    notes: str = ""

    def deadline(self, rate: Fraction | int | str) -> DeadlineSpec:
        return DeadlineSpec(
            Fraction(rate),
            idle_power=self.idle.idle_power,
            duty_model=self.idle.duty_model,
            duty_wake_energy=self.idle.duty_wake_energy,
            duty_wake_latency=self.idle.duty_wake_latency,
        )

    def deadline_from_t_max(self, t_max: int) -> DeadlineSpec:
        return self.deadline(Fraction(10**12, t_max))


# ---------------------------------------------------------------------------
# Strict parsing
# ---------------------------------------------------------------------------


class _Reader:
    """Typed field access that reports the offending path on failure."""

    def __init__(self, obj: Any, path: str):
        if not isinstance(obj, dict):
            raise ProfileError(f"{path}: expected an object")
        self.obj = obj
        self.path = path
        self.seen: set[str] = set()

    def _get(self, key: str, default: Any, required: bool) -> Any:
        self.seen.add(key)
        if key not in self.obj:
            if required:
                raise ProfileError(f"{self.path}.{key}: missing required field")
            return default
        return self.obj[key]

    def int(self, key: str, default: int | None = None, required: bool = False, minimum: int = 0) -> int:
        value = self._get(key, default, required and default is None)
        if value is None:
            raise ProfileError(f"{self.path}.{key}: missing required field")
        if isinstance(value, bool) or not isinstance(value, int):
            raise ProfileError(f"{self.path}.{key}: expected an integer, got {value!r}")
        if value < minimum:
            raise ProfileError(f"{self.path}.{key}: must be >= {minimum}, got {value}")
        return value

    def str(self, key: str, default: str | None = None, required: bool = False) -> str:
        value = self._get(key, default, required)
        if not isinstance(value, str):
            raise ProfileError(f"{self.path}.{key}: expected a string")
        return value

    def bool(self, key: str, default: bool) -> bool:
        value = self._get(key, default, False)
        if not isinstance(value, bool):
            raise ProfileError(f"{self.path}.{key}: expected true or false")
        return value

    def list(self, key: str, required: bool = False) -> list:
        value = self._get(key, [], required)
        if not isinstance(value, list):
            raise ProfileError(f"{self.path}.{key}: expected a list")
        return value

    def obj_(self, key: str) -> "_Reader":
        return _Reader(self._get(key, {}, False), f"{self.path}.{key}")

    def any(self, key: str, default: Any = None) -> Any:
        return self._get(key, default, False)

    def finish(self) -> None:
        extra = sorted(set(self.obj) - self.seen)
        if extra:
            raise ProfileError(f"{self.path}: unknown field(s) {', '.join(extra)}")


def _fraction(value: Any, path: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ProfileError(f"{path}: expected an integer or a rational string like \"3/4\"")
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ProfileError(f"{path}: invalid rational {value!r}") from exc


def _int_list(values: Any, path: str) -> tuple[int, ...]:
    if not isinstance(values, list):
        raise ProfileError(f"{path}: expected a list")
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ProfileError(f"{path}[{k}]: expected a non-negative integer")
    return tuple(values)


def _table(values: Any, path: str) -> tuple[tuple[int, int], ...]:
    if not isinstance(values, list):
        raise ProfileError(f"{path}: expected a list of [mV, value] pairs")
    out = []
    for k, pair in enumerate(values):
        pair = _int_list(pair, f"{path}[{k}]")
        if len(pair) != 2:
            raise ProfileError(f"{path}[{k}]: expected a [mV, value] pair")
        out.append((pair[0], pair[1]))
    return tuple(out)


def _parse_domain(obj: Any, path: str, tm: TransitionModel) -> DomainSpec:
    r = _Reader(obj, path)
    kind = r.str("kind", required=True)
    if kind not in {k.value for k in DomainKind}:
        raise ProfileError(f"{path}.kind: unknown domain kind {kind!r}")
    is_bank = kind == DomainKind.GATED_BANK.value
    supply = r.any("supply")
    if supply is not None and (isinstance(supply, bool) or not isinstance(supply, int)):
        raise ProfileError(f"{path}.supply: expected a domain id")
    spec = dict(
        id=r.int("id", required=True),
        kind=DomainKind(kind),
        name=r.str("name", ""),
        nominal_freq=r.int("nominal_freq", 0),
        capacitance_scale=_fraction(r.any("capacitance_scale", 1), f"{path}.capacitance_scale"),
        leak_power_nominal=r.int("leak_power_nominal", 0),
        wake_energy=r.int("wake_energy", 0),
        wake_latency=r.int("wake_latency", tm.wake_latency if is_bank else 0),
        supply=supply,
        vf_table=_table(r.any("vf_table", []), f"{path}.vf_table"),
        leak_table=_table(r.any("leak_table", []), f"{path}.leak_table"),
    )
    r.finish()
    try:
        return DomainSpec(**spec)
    except ValueError as exc:
        raise ProfileError(f"{path}: {exc}") from exc


def _parse_layer(obj: Any, path: str) -> LayerProfile:
    r = _Reader(obj, path)
    fractions = r.list("active_fraction", required=True)
    windows = []
    for k, w in enumerate(r.list("bank_idle_windows")):
        wp = f"{path}.bank_idle_windows[{k}]"
        if not isinstance(w, list) or len(w) != 3 or isinstance(w[0], bool) or not isinstance(w[0], int):
            raise ProfileError(f"{wp}: expected [domain_id, start, end]")
        windows.append((w[0], _fraction(w[1], f"{wp}[1]"), _fraction(w[2], f"{wp}[2]")))
    spec = dict(
        layer_id=r.int("layer_id", required=True, minimum=1),
        name=r.str("name", ""),
        layer_type=r.str("layer_type", ""),
        cycles=_int_list(r.any("cycles"), f"{path}.cycles"),
        dynamic_energy_nominal=_int_list(r.any("dynamic_energy_nominal"), f"{path}.dynamic_energy_nominal"),
        active_fraction=tuple(_fraction(a, f"{path}.active_fraction[{k}]") for k, a in enumerate(fractions)),
        bank_idle_windows=tuple(windows),
    )
    r.finish()
    try:
        return LayerProfile(**spec)
    except ValueError as exc:
        raise ProfileError(f"{path}: {exc}") from exc


def profile_from_dict(data: Any) -> ProfileDocument:
    """Validate a decoded profile; every failure names the field and the broken rule."""
    root = _Reader(data, "profile")
    version = root.str("schema_version", required=True)
    if version not in SUPPORTED_SCHEMAS:
        raise ProfileError(f"profile.schema_version: unsupported version {version!r}")

    t = root.obj_("transition_model")
    try:
        tm = TransitionModel(
            dvfs_switch_latency=t.int("dvfs_switch_latency", 15_000),
            wake_latency=t.int("wake_latency", 5_000),
            base_switch_energy=t.int("base_switch_energy", 1_000_000),
            v_low=t.int("v_low", 900),
            v_high=t.int("v_high", 1300),
        )
    except ValueError as exc:
        raise ProfileError(f"profile.transition_model: {exc}") from exc
    t.finish()

    m = root.obj_("menu")
    try:
        menu = VoltageMenu(m.int("v_min", 900, minimum=1), m.int("v_max", 1300, minimum=1), m.int("v_step", 50, minimum=1))
    except ValueError as exc:
        raise ProfileError(f"profile.menu: {exc}") from exc
    m.finish()

    i = root.obj_("idle")
    duty = i.str("duty_model", DutyModel.ALWAYS_ACTIVE.value)
    if duty not in {d.value for d in DutyModel}:
        raise ProfileError(f"profile.idle.duty_model: unknown duty model {duty!r}")
    idle = IdleSpec(
        idle_power=i.int("idle_power", 0),
        duty_model=DutyModel(duty),
        duty_wake_energy=i.int("duty_wake_energy", 0),
        duty_wake_latency=i.int("duty_wake_latency", 0),
    )
    i.finish()

    w = root.obj_("workload")
    name = w.str("name", required=True)
    v_nom = w.int("v_nom", required=True, minimum=1)
    if v_nom not in menu:
        raise ProfileError(f"profile.workload.v_nom: {v_nom} mV is not a menu level")
    domains = [_parse_domain(d, f"profile.workload.domains[{k}]", tm) for k, d in enumerate(w.list("domains", True))]
    layer_objs = w.list("layers", True)
    if not layer_objs:
        raise ProfileError("profile.workload.layers: workload must contain at least one layer (L >= 1)")
    layers = [_parse_layer(x, f"profile.workload.layers[{k}]") for k, x in enumerate(layer_objs)]
    w.finish()
    for d in domains:
        for label, table in (("vf_table", d.vf_table), ("leak_table", d.leak_table)):
            if table and {v for v, _ in table} != set(menu.levels):
                raise ProfileError(f"profile.workload.domains[{d.id}].{label}: must list every menu level exactly")
    try:
        workload = WorkloadProfile(name, tuple(domains), tuple(layers), v_nom)
    except ValueError as exc:
        raise ProfileError(f"profile.workload: {exc}") from exc

    doc = ProfileDocument(
        workload=workload,
        transition_model=tm,
        menu=menu,
        idle=idle,
        schema_version=version,
        synthetic=root.bool("synthetic", True),
        notes=root.str("notes", ""),
    )
    root.finish()
    return doc


def parse_profile(text: str, source: str = "<string>") -> ProfileDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"{source}:{exc.lineno}:{exc.colno}: JSON parse error: {exc.msg}") from exc
    try:
        return profile_from_dict(data)
    except ProfileError as exc:
        raise ProfileError(f"{source}: {exc}") from exc


def load_profile(path: str | Path) -> ProfileDocument:
    """Load and validate a profile file (strict: unknown fields are rejected)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProfileError(f"{path}: cannot read profile: {exc.strerror}") from exc
    return parse_profile(text, str(path))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _frac_str(x: Fraction) -> str:
    return str(Fraction(x))


def profile_to_dict(doc: ProfileDocument) -> dict:
    w = doc.workload
    tm = doc.transition_model
    domains = []
    for d in w.domains:
        out: dict[str, Any] = {"id": d.id, "name": d.name, "kind": d.kind.value}
        if d.is_dvfs:
            out["nominal_freq"] = d.nominal_freq
        else:
            out["supply"] = d.supply
        out["capacitance_scale"] = _frac_str(d.capacitance_scale)
        out["leak_power_nominal"] = d.leak_power_nominal
        out["wake_energy"] = d.wake_energy
        out["wake_latency"] = d.wake_latency
        if d.vf_table:
            out["vf_table"] = [list(p) for p in d.vf_table]
        if d.leak_table:
            out["leak_table"] = [list(p) for p in d.leak_table]
        domains.append(out)
    layers = []
    for layer in w.layers:
        layers.append(
            {
                "layer_id": layer.layer_id,
                "name": layer.name,
                "layer_type": layer.layer_type,
                "cycles": list(layer.cycles),
                "dynamic_energy_nominal": list(layer.dynamic_energy_nominal),
                "active_fraction": [_frac_str(a) for a in layer.active_fraction],
                "bank_idle_windows": [
                    [win.domain, _frac_str(win.start), _frac_str(win.end)] for win in layer.bank_idle_windows
                ],
            }
        )
    return {
        "schema_version": doc.schema_version,
        "synthetic": doc.synthetic,
        "notes": doc.notes,
        "menu": {"v_min": doc.menu.v_min, "v_max": doc.menu.v_max, "v_step": doc.menu.v_step},
        "transition_model": {
            "dvfs_switch_latency": tm.dvfs_switch_latency,
            "wake_latency": tm.wake_latency,
            "base_switch_energy": tm.base_switch_energy,
            "v_low": tm.v_low,
            "v_high": tm.v_high,
        },
        "idle": {
            "idle_power": doc.idle.idle_power,
            "duty_model": doc.idle.duty_model.value,
            "duty_wake_energy": doc.idle.duty_wake_energy,
            "duty_wake_latency": doc.idle.duty_wake_latency,
        },
        "workload": {"name": w.name, "v_nom": w.v_nom, "domains": domains, "layers": layers},
    }


def _compact_json(data: Any) -> str:
    """Indented JSON with short numeric / string lists kept on one line."""
    text = json.dumps(data, indent=2, ensure_ascii=False)
    lines: list[str] = []
    buf: list[str] | None = None
    for line in text.split("\n"):
        stripped = line.strip()
        if buf is not None:
            buf.append(stripped)
            if stripped.startswith("]"):
                joined = " ".join(buf)
                joined = joined.replace("[ ", "[").replace(", ]", "]").replace(" ]", "]")
                lines.append(joined)
                buf = None
            elif stripped.startswith(("{", "[")):
                lines.extend(buf[:-1])
                lines.append(line)
                buf = None
            continue
        if stripped.endswith("[") and not stripped.startswith("{"):
            buf = [line]
            continue
        lines.append(line)
    return "\n".join(lines) + "\n"


def dump_profile(doc: ProfileDocument) -> str:
    return _compact_json(profile_to_dict(doc))


def save_profile(doc: ProfileDocument, path: str | Path) -> None:
    Path(path).write_text(dump_profile(doc), encoding="utf-8")


# ---------------------------------------------------------------------------
# Bundled profiles
# ---------------------------------------------------------------------------

BUNDLED_PROFILES = ("squeezenet-like", "mobilenetv3-small-like", "resnet18-like", "mobilevit-xxs-like")


def bundled_profile_path(name: str) -> Path:
    if name.endswith(".json"):
        name = name[: -len(".json")]
    if name.endswith(".profile"):
        name = name[: -len(".profile")]
    if name not in BUNDLED_PROFILES:
        raise ProfileError(f"unknown bundled profile {name!r} (choose from {', '.join(BUNDLED_PROFILES)})")
    return Path(str(resources.files("powerflow") / "profiles" / f"{name}.json"))


def load_bundled(name: str) -> ProfileDocument:
    return load_profile(bundled_profile_path(name))


def resolve_profile(spec: str) -> ProfileDocument:
    """A profile given as a file path or as the name of a bundled profile."""
    path = Path(spec)
    if path.exists():
        return load_profile(path)
    stem = spec.removesuffix(".json").removesuffix(".profile")
    if stem in BUNDLED_PROFILES:
        return load_bundled(stem)
    raise ProfileError(f"{spec}: no such file or bundled profile")


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


TRAP_HELPER_LEAK = (200_000, 1_000_000)
TRAP_SWITCH_FACTOR = 4


def _log_uniform(rng: random.Random, lo: float, hi: float) -> int:
    return int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))


def generate_random_instance(
    seed: int,
    num_layers: int = 8,
    num_domains: int = 2,
    menu_levels: int = 4,
    states_hint: int | None = None,
    num_banks: int = 0,
    leak_spread: float = 1.0,
    window_density: float = 0.0,
    trap: bool = False,
    idle_power: int | None = None,
    duty_model: DutyModel | str = DutyModel.ALWAYS_ACTIVE,
    base_switch_energy: int = 1_000_000,
) -> ProfileDocument:
    """Deterministic synthetic instance.

    The menu is ``menu_levels`` voltages from 900 mV in 100 mV steps.
    ``states_hint`` caps the per-layer state count by shrinking the menu.
    ``leak_spread`` scales how far leakage / dynamic ratios vary between
    layers; ``window_density`` is the chance a bank has idle windows in a
    layer.  With ``trap`` every other layer is dominated by a leaky helper
    domain, which makes its cheap state sit on a high rail while its
    neighbours prefer a low one.
    """
    rng = random.Random(seed)
    if num_layers < 1 or num_domains < 1 or menu_levels < 1:
        raise ValueError("num_layers, num_domains and menu_levels must be >= 1")
    if trap and num_domains < 2:
        raise ValueError("trap injection needs at least two dvfs domains")
    if states_hint is not None:
        while menu_levels > 1 and menu_levels**num_domains * 2**num_banks > states_hint:
            menu_levels -= 1
    menu = VoltageMenu(900, 900 + 100 * (menu_levels - 1), 100)
    v_nom = min(menu.levels, key=lambda v: (abs(v - 1200), -v))
    helper = num_domains - 1 if trap else None

    domains = []
    for d in range(num_domains):
        leak = _log_uniform(rng, 2_000, 20_000 * (1 + leak_spread))
        domains.append(
            DomainSpec(
                id=d,
                kind=DomainKind.DVFS,
                name=f"dvfs{d}",
                nominal_freq=rng.choice((100_000, 200_000, 250_000, 400_000, 500_000)),
                capacitance_scale=Fraction(rng.randint(1, 8) * (TRAP_SWITCH_FACTOR if trap else 1), 4),
                leak_power_nominal=rng.randint(*TRAP_HELPER_LEAK) if d == helper else leak,
            )
        )
    for b in range(num_banks):
        domains.append(
            DomainSpec(
                id=num_domains + b,
                kind=DomainKind.GATED_BANK,
                name=f"bank{b}",
                supply=rng.randrange(num_domains),
                capacitance_scale=Fraction(1, 4),
                leak_power_nominal=_log_uniform(rng, 5_000, 50_000 * (1 + leak_spread)),
                wake_energy=rng.randint(10_000, 500_000),
                wake_latency=5_000,
            )
        )

    layers = []
    for i in range(1, num_layers + 1):
        cycles, dyn, act = [], [], []
        # trap layers run the leaky helper briefly, so their cheapest state
        # races on a high rail; the helper is gated everywhere else
        leaky = trap and i % 2 == 0
        for d in range(num_domains):
            if d == helper and not leaky:
                cycles.append(0)
                dyn.append(0)
                act.append(Fraction(0))
                continue
            share = 1.0 if d == 0 else rng.uniform(0.05, 1.0)
            if d == helper:
                share = rng.uniform(0.01, 0.05)
            c = max(1, int(_log_uniform(rng, 2_000, 60_000) * share))
            cycles.append(c)
            scale = math.exp(rng.uniform(-leak_spread, leak_spread))
            per_cycle = rng.uniform(50, 200) if leaky and d == 0 else rng.uniform(200, 2_000)
            dyn.append(max(1, int(c * per_cycle * scale)))
            act.append(Fraction(1))
        windows = []
        for b in range(num_banks):
            cycles.append(0)
            dyn.append(0)
            supply = domains[num_domains + b].supply
            if act[supply] == 0 or rng.random() < window_density / 2:
                act.append(Fraction(0))
                continue
            act.append(Fraction(rng.randint(1, 4), 4))
            if rng.random() < window_density:
                start = Fraction(rng.randint(0, 4), 8)
                windows.append((num_domains + b, start, start + Fraction(rng.randint(1, 4), 8)))
        layers.append(
            LayerProfile(
                layer_id=i,
                cycles=tuple(cycles),
                dynamic_energy_nominal=tuple(dyn),
                active_fraction=tuple(act),
                bank_idle_windows=tuple(windows),
                name=f"L{i}",
                layer_type="trap" if leaky else "conv",
            )
        )
    workload = WorkloadProfile(f"random-{seed}", tuple(domains), tuple(layers), v_nom)
    if idle_power is None:
        idle_power = rng.randint(0, 20_000)
    return ProfileDocument(
        workload=workload,
        transition_model=TransitionModel(base_switch_energy=base_switch_energy),
        menu=menu,
        idle=IdleSpec(
            idle_power=idle_power,
            duty_model=DutyModel(duty_model),
            duty_wake_energy=rng.randint(100_000, 2_000_000),
            duty_wake_latency=rng.randint(0, 50_000),
        ),
        synthetic=True,
        notes=f"random instance, seed {seed}",
    )


def latency_range(graph: LayeredStateGraph, deadline: DeadlineSpec) -> tuple[int, int]:
    """(fastest schedule latency, latency of the lambda = 0 schedule) on ``graph``."""
    t_min = weighted_optimum(graph, time_dominant_lambda(graph, deadline), deadline).t
    t_free = weighted_optimum(graph, Fraction(0), deadline).t
    return t_min, max(t_min, t_free)


def interpolated_deadline(doc: ProfileDocument, graph: LayeredStateGraph, u: Fraction | float) -> DeadlineSpec:
    """Deadline at fraction ``u`` between the fastest and the unconstrained latency.

    ``u = 0`` is as tight as the graph allows; ``u = 1`` leaves lambda = 0 feasible.
    """
    probe = doc.deadline_from_t_max(10**15)
    t_min, t_free = latency_range(graph, probe)
    t_max = t_min + int(Fraction(u) * (t_free - t_min))
    return doc.deadline_from_t_max(max(1, t_max))


def suite_instance(seed: int, trap: bool | None = None) -> tuple[ProfileDocument, LayeredStateGraph, DeadlineSpec]:
    """One member of the small random suite used for oracle comparisons.

    Up to 8 layers and at most 20 states per layer under the full menu; the
    deadline sits between the fastest latency (u = 0) and nine tenths of the
    unconstrained one, so the deadline binds.
    """
    rng = random.Random(f"suite-{seed}")
    num_layers = rng.randint(1, 8)
    num_banks = rng.randint(0, 1)
    use_trap = rng.random() < 0.5
    u = Fraction(rng.randint(0, 9), 10)
    doc = generate_random_instance(
        seed,
        num_layers=num_layers,
        num_domains=2,
        menu_levels=4,
        states_hint=20,
        num_banks=num_banks,
        window_density=0.5,
        trap=use_trap if trap is None else trap,
    )
    graph = build_graph(doc.workload, RailSet(doc.menu.levels), doc.transition_model)
    return doc, graph, interpolated_deadline(doc, graph, u)


# ---------------------------------------------------------------------------
# Schedule tables
# ---------------------------------------------------------------------------


def emit_schedule_table(
    schedule: Schedule, workload: WorkloadProfile, deadline: DeadlineSpec, tm: TransitionModel
) -> dict:
    """Static schedule table: one row per layer, the idle row and the totals."""
    rows = []
    for layer, state, trans in zip(workload.layers, schedule.states, schedule.transitions):
        rows.append(
            {
                "layer_id": layer.layer_id,
                "voltages": ["GATED" if v == GATED else v for v in state.assignment],
                "window_gating": list(state.window_gating),
                "t_op": state.t_op,
                "e_op": state.e_op,
                "trans_t": trans.t_trans,
                "trans_e": trans.e_trans,
            }
        )
    return {
        "schema_version": SCHEDULE_SCHEMA_VERSION,
        "workload": workload.name,
        "domains": [d.name or f"d{d.id}" for d in workload.domains],
        "rail_set": list(schedule.rail_set.rails),
        "deadline": {
            "target_rate": str(deadline.target_rate),
            "t_max": deadline.t_max,
            "idle_power": deadline.idle_power,
            "duty_model": deadline.duty_model.value,
            "duty_wake_energy": deadline.duty_wake_energy,
            "duty_wake_latency": deadline.duty_wake_latency,
        },
        "transition_model": {
            "dvfs_switch_latency": tm.dvfs_switch_latency,
            "wake_latency": tm.wake_latency,
            "base_switch_energy": tm.base_switch_energy,
            "v_low": tm.v_low,
            "v_high": tm.v_high,
        },
        "layers": rows,
        "idle": {"z": schedule.z, "slack": schedule.slack, "e_idle": schedule.e_idle},
        "totals": {
            "feasible": schedule.feasible,
            "t_infer": schedule.t_infer,
            "t_op": schedule.t_op,
            "t_trans": schedule.t_trans,
            "e_tot": schedule.e_tot,
            "e_op": schedule.e_op,
            "e_trans": schedule.e_trans,
            "e_idle": schedule.e_idle,
            "e_dynamic": schedule.e_dynamic,
            "e_static": schedule.e_static,
            "rail_switches": schedule.rail_switches,
            "wake_events": schedule.wake_events,
        },
    }


def dump_schedule(table: dict) -> str:
    return _compact_json(table)


def reevaluate_schedule_table(table: Mapping, workload: WorkloadProfile) -> Schedule:
    """Rebuild a schedule from its table alone and re-cost it with the model."""
    try:
        rows = table["layers"]
        dl = table["deadline"]
        tm = TransitionModel(**table["transition_model"])
        deadline = DeadlineSpec(
            Fraction(dl["target_rate"]),
            idle_power=dl["idle_power"],
            duty_model=dl["duty_model"],
            duty_wake_energy=dl["duty_wake_energy"],
            duty_wake_latency=dl["duty_wake_latency"],
        )
        if deadline.t_max != dl["t_max"]:
            raise ProfileError("schedule.deadline: t_max does not match target_rate")
        if len(rows) != workload.num_layers:
            raise ProfileError("schedule.layers: row count does not match the workload")
        states = []
        for layer, row in zip(workload.layers, rows):
            assignment = [GATED if v == "GATED" else int(v) for v in row["voltages"]]
            states.append(make_state(layer, assignment, workload, row["window_gating"]))
        return build_schedule(
            states, workload, tm, deadline, int(table["idle"]["z"]), RailSet(tuple(table["rail_set"]))
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ProfileError):
            raise
        raise ProfileError(f"schedule: malformed table ({exc})") from exc


def verify_schedule_table(table: Mapping, workload: WorkloadProfile) -> list[str]:
    """Fields whose stored value differs from the re-evaluated schedule (empty = consistent)."""
    sched = reevaluate_schedule_table(table, workload)
    recomputed = emit_schedule_table(
        sched,
        workload,
        DeadlineSpec(Fraction(table["deadline"]["target_rate"]), **{
            k: table["deadline"][k] for k in ("idle_power", "duty_model", "duty_wake_energy", "duty_wake_latency")
        }),
        TransitionModel(**table["transition_model"]),
    )
    bad = []
    for key, value in recomputed["totals"].items():
        if table["totals"].get(key) != value:
            bad.append(f"totals.{key}")
    for k, (a, b) in enumerate(zip(table["layers"], recomputed["layers"])):
        for key in ("t_op", "e_op", "trans_t", "trans_e"):
            if a.get(key) != b[key]:
                bad.append(f"layers[{k}].{key}")
    if table["idle"] != recomputed["idle"]:
        bad.append("idle")
    return bad


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], stream: io.TextIOBase | None = None) -> str:
    """RFC 4180 CSV (CRLF line ends, minimal quoting); returns the text."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
