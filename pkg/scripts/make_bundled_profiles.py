"""Regenerate the bundled synthetic workload profiles.

The profiles approximate four edge networks on a small output-stationary
accelerator (8x8 INT8 MACs at 500 MHz, RRAM weight storage at 100 MHz).
Layer counts and layer-type mixes follow the public architectures; every
energy and latency figure is a plausible 40 nm-class estimate, not a
measurement.

    python3 scripts/make_bundled_profiles.py [output_dir]
"""

from __future__ import annotations

import random
import sys
from fractions import Fraction
from pathlib import Path

from powerflow.model import DomainKind, DomainSpec, LayerProfile, TransitionModel, VoltageMenu, WorkloadProfile
from powerflow.workload import IdleSpec, ProfileDocument, save_profile

MACS_PER_CYCLE = 64

# (MAC range, weight-bytes range, activation-bytes range) per layer type
LAYER_TYPES = {
    "conv": ((4e6, 4e7), (2e3, 4e4), (2e4, 2e5)),
    "fire_squeeze": ((1e6, 6e6), (2e3, 1.6e4), (2e4, 1e5)),
    "fire_expand": ((4e6, 2.5e7), (4e3, 4e4), (2e4, 1.5e5)),
    "pw": ((1e6, 1e7), (2e3, 3e4), (1e4, 1e5)),
    "dw": ((2e5, 1.5e6), (2e2, 3e3), (2e4, 1.5e5)),
    "se": ((2e4, 2e5), (4e3, 3e4), (5e2, 4e3)),
    "residual": ((1.5e7, 6e7), (3e4, 2.4e5), (1e4, 1e5)),
    "downsample": ((2e6, 8e6), (8e3, 1.3e5), (1e4, 5e4)),
    "attention": ((4e6, 2e7), (8e3, 6e4), (1e4, 8e4)),
    "fc": ((1e5, 1e6), (5e4, 5e5), (5e2, 4e3)),
}

NETWORKS = {
    "squeezenet-like": ["conv"] + ["fire_squeeze", "fire_expand", "fire_expand"] * 8 + ["conv"],
    "mobilenetv3-small-like": (
        ["conv", "dw", "se", "pw"]
        + ["pw", "dw", "pw"] * 2
        + ["pw", "dw", "se", "pw"] * 8
        + ["pw", "se", "pw", "pw", "se", "fc", "fc", "fc", "fc", "fc"]
    ),
    "resnet18-like": ["conv"] + ["residual"] * 4 + ["downsample", "residual", "residual", "residual", "residual"] * 3,
    "mobilevit-xxs-like": (
        ["conv"]
        + ["pw", "dw", "pw"] * 7
        + (["conv", "pw"] + ["attention", "pw"] * 4 + ["pw", "conv"]) * 3
        + ["pw", "conv", "pw", "pw", "conv", "fc", "fc", "fc", "fc", "fc", "fc", "fc", "fc", "fc"]
    ),
}

LAYER_COUNTS = {"squeezenet-like": 26, "mobilenetv3-small-like": 52, "resnet18-like": 20, "mobilevit-xxs-like": 72}

DOMAINS = (
    DomainSpec(0, DomainKind.DVFS, 500_000, Fraction(1), 300_000, name="compute"),
    DomainSpec(1, DomainKind.DVFS, 500_000, Fraction(1, 2), 90_000, name="feeder"),
    DomainSpec(2, DomainKind.DVFS, 100_000, Fraction(3, 4), 150_000, name="rram"),
    DomainSpec(3, DomainKind.GATED_BANK, 0, Fraction(1, 4), 1_200_000, 40_000, 5_000, name="rram_bank0", supply=2),
    DomainSpec(4, DomainKind.GATED_BANK, 0, Fraction(1, 4), 1_200_000, 40_000, 5_000, name="rram_bank1", supply=2),
)

# dynamic energy per active cycle at 1.2 V (fJ)
E_COMPUTE = 9_000
E_FEEDER = 2_500
E_RRAM = 16_000
RRAM_BYTES_PER_CYCLE = 8
FEEDER_BYTES_PER_CYCLE = 8


def _log_uniform(rng: random.Random, lo: float, hi: float) -> float:
    return lo * (hi / lo) ** rng.random()


def make_layer(rng: random.Random, layer_id: int, kind: str) -> LayerProfile:
    macs, wbytes, abytes = (_log_uniform(rng, *r) for r in LAYER_TYPES[kind])
    compute = int(macs / MACS_PER_CYCLE)
    feeder = int(abytes / FEEDER_BYTES_PER_CYCLE * rng.uniform(1.0, 3.0))
    rram = int(wbytes / RRAM_BYTES_PER_CYCLE * rng.uniform(1.0, 2.5))
    cycles = [compute, feeder, rram, 0, 0]
    dyn = [
        int(compute * E_COMPUTE * rng.uniform(0.8, 1.2)),
        int(feeder * E_FEEDER * rng.uniform(0.8, 1.2)),
        int(rram * E_RRAM * rng.uniform(0.8, 1.2)),
        0,
        0,
    ]
    act = [Fraction(1), Fraction(1), Fraction(1)]
    # weights live in one bank group (small layers) or both (large ones)
    windows = []
    if wbytes < 2e4:
        home = 3 + rng.randrange(2)
        for bank in (3, 4):
            if bank == home:
                act.append(Fraction(rng.randint(2, 4), 4))
            else:
                act.append(Fraction(0))
    else:
        for bank in (3, 4):
            busy = Fraction(rng.randint(2, 6), 8)
            act.append(busy)
            if rng.random() < 0.6:
                start = Fraction(rng.randint(0, 2), 8) if bank == 3 else 1 - busy
                end = min(Fraction(1), start + 1 - busy)
                if end > start:
                    windows.append((bank, start, end))
    return LayerProfile(
        layer_id=layer_id,
        cycles=tuple(cycles),
        dynamic_energy_nominal=tuple(dyn),
        active_fraction=tuple(act),
        bank_idle_windows=tuple(windows),
        name=f"{kind}{layer_id}",
        layer_type=kind,
    )


def make_profile(name: str, seed: int) -> ProfileDocument:
    kinds = NETWORKS[name]
    assert len(kinds) == LAYER_COUNTS[name], (name, len(kinds))
    rng = random.Random(seed)
    layers = [make_layer(rng, i, kind) for i, kind in enumerate(kinds, start=1)]
    workload = WorkloadProfile(name, DOMAINS, tuple(layers), v_nom=1200)
    return ProfileDocument(
        workload=workload,
        transition_model=TransitionModel(),
        menu=VoltageMenu(900, 1300, 50),
        idle=IdleSpec(idle_power=120_000),
        synthetic=True,
        notes=(
            "Synthetic profile: layer count and layer-type mix follow the public network; "
            "energies and latencies are illustrative 40 nm-class estimates, not measurements."
        ),
    )


def main(argv: list[str]) -> int:
    out = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parents[1] / "src" / "powerflow" / "profiles"
    out.mkdir(parents=True, exist_ok=True)
    for seed, name in enumerate(NETWORKS, start=11):
        save_profile(make_profile(name, seed), out / f"{name}.json")
        print(out / f"{name}.json")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
