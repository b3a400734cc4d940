"""Synthetic TFC fleets with a known additive lead-time process.

The real process is unknown, so lead times follow an assumed additive model::

    lead = max(0.01, m * (base + offset[derivative] + sum(token effects) + noise))

where ``noise ~ Exponential(base_rate_per_day)`` and ``m`` is the priority
multiplier for prioritised vehicles (1 otherwise). ``base`` is calibrated so a
target share of vehicles completes within one day.

Randomness comes from numpy's PCG64 bit generator. Every stream is seeded with
``SeedSequence([seed, stream])``; stream 0 draws the ground-truth effects,
stream 1 the calibration sample, stream 2 the fleet itself and stream 3 a
process change. The PCG64 bit stream is stable across platforms and numpy
versions; fleets are therefore reproducible from the config alone.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from .errors import CalibrationError, ConfigError
from .ingest import VehicleRecord

MIN_LEAD_DAYS = 0.01
CALIBRATION_SAMPLES = 20_000
CALIBRATION_TOL_DAYS = 1e-4
MAX_BISECTION_STEPS = 100
REDRAW_FRACTION = 0.3
REWORK_CODE_SHARE = 0.06
CHANGED_CODE_LOG_MEAN = -1.2
CHANGED_CODE_LOG_SIGMA = 0.6
LINKS_PER_VARIANT = 2
LINKED_CODE_SHARE = 0.5
CODE_COUNT_SHAPE = 0.35

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
ENTRY_BUCKETS = tuple(f"{d}-{h:02d}" for d in WEEKDAYS for h in range(24))

DEFAULT_VOCAB = {
    "config_variant": 100,
    "inspection_code": 200,
    "parking_location": 20,
    "product_key": 6,
}

_STREAM_EFFECTS, _STREAM_CALIBRATION, _STREAM_FLEET, _STREAM_CHANGE = range(4)


@dataclass(frozen=True)
class GeneratorConfig:
    n_vehicles: int = 10_000
    seed: int = 7
    share_ice: float = 45_706 / 80_495
    vocab_sizes: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_VOCAB))
    mean_codes_per_vehicle: float = 4.0
    priority_rate: float = 0.1
    base_rate_per_day: float = 3.0
    effect_scale: float = 1.0
    target_share_under_1d: float = 0.557
    mean_variants_per_vehicle: float = 8.0
    mean_parking_per_vehicle: float = 1.5
    non_series_rate: float = 0.0

    def __post_init__(self):
        vocab = dict(DEFAULT_VOCAB)
        vocab.update(self.vocab_sizes)
        object.__setattr__(self, "vocab_sizes", vocab)
        self.validate()

    def validate(self) -> None:
        def fail(msg):
            raise ConfigError(f"invalid generator config: {msg}")

        if int(self.n_vehicles) != self.n_vehicles or self.n_vehicles < 0:
            fail(f"n_vehicles must be a non-negative integer, got {self.n_vehicles!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            fail(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        for name in ("share_ice", "priority_rate", "target_share_under_1d", "non_series_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                fail(f"{name} must lie in [0, 1], got {v!r}")
        unknown = set(self.vocab_sizes) - set(DEFAULT_VOCAB)
        if unknown:
            fail(f"unknown vocabulary groups {sorted(unknown)}")
        for name, v in self.vocab_sizes.items():
            if int(v) != v or v < 1:
                fail(f"vocab_sizes[{name!r}] must be an integer >= 1, got {v!r}")
        for name in ("mean_codes_per_vehicle", "mean_variants_per_vehicle", "mean_parking_per_vehicle"):
            if not getattr(self, name) >= 0:
                fail(f"{name} must be >= 0")
        for name in ("base_rate_per_day", "effect_scale"):
            if not getattr(self, name) > 0:
                fail(f"{name} must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vocab_sizes"] = dict(sorted(self.vocab_sizes.items()))
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneratorConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown generator settings {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class GroundTruthParams:
    """Additive effects in days, indexed like the generated token lists."""

    config_variant: np.ndarray
    inspection_code: np.ndarray
    entry: np.ndarray
    parking_location: np.ndarray
    derivative_offset: Mapping[str, float]
    variant_intensity: np.ndarray  # log-scale finding intensity per variant
    variant_links: np.ndarray  # inspection codes typically found with each variant
    priority_multiplier: float
    base_offset: float
    effect_scale: float

    def __eq__(self, other):
        if not isinstance(other, GroundTruthParams):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            if isinstance(getattr(self, f.name), np.ndarray)
            else getattr(self, f.name) == getattr(other, f.name)
            for f in fields(self)
        )

    __hash__ = None


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stream])))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _frozen_int(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


# Token spellings. Deterministic in the index so vocabularies line up across fleets.
def config_variant_tokens(n: int) -> list[str]:
    return [f"{chr(65 + (i // 10) // 26 % 26)}{chr(65 + (i // 10) % 26)}{i % 10}" for i in range(n)]


def inspection_code_tokens(n: int) -> list[str]:
    return [f"{1000 + i:04d}-{(9999 - 37 * i) % 10000:04d}{'FRLB'[i % 4]}" for i in range(n)]


def parking_tokens(n: int) -> list[str]:
    return [f"Parking{i // 4 + 1:02d}-Level{i % 4 + 1:02d}" for i in range(n)]


def product_keys(n: int) -> tuple[list[str], list[str]]:
    """ICE and BEV product keys; a single key is shared by both derivatives."""
    if n == 1:
        return ["A10IC"], ["A10IC"]
    n_ice = (n + 1) // 2
    ice = [f"A{10 + i}IC" for i in range(n_ice)]
    bev = [f"E{10 + i}EV" for i in range(n - n_ice)]
    return ice, bev


def _entry_weights() -> np.ndarray:
    w = np.empty(len(ENTRY_BUCKETS))
    for b, name in enumerate(ENTRY_BUCKETS):
        day, hour = divmod(b, 24)
        if day >= 5:
            w[b] = 0.15
        elif 6 <= hour < 22:
            w[b] = 1.0
        else:
            w[b] = 0.3
    return w / w.sum()


def _entry_structure() -> np.ndarray:
    """Waiting time over the weekend and night shifts, in days."""
    s = np.zeros(len(ENTRY_BUCKETS))
    for b in range(len(ENTRY_BUCKETS)):
        day, hour = divmod(b, 24)
        if day == 4 and hour >= 12 or day == 5:
            s[b] = 0.6
        elif day == 6:
            s[b] = 0.3
        elif hour >= 20 or hour < 5:
            s[b] = 0.12
    return s


def _inspection_effects(rng: np.random.Generator, n: int, scale: float) -> np.ndarray:
    # Most codes are quick checks; a few flag rework that takes days to weeks.
    quick = rng.lognormal(mean=-2.3, sigma=0.8, size=n)
    rework = rng.lognormal(mean=2.5, sigma=1.1, size=n)
    return scale * np.where(rng.random(n) < REWORK_CODE_SHARE, rework, quick)


def _draw_effects(config: GeneratorConfig) -> dict:
    rng = _rng(config.seed, _STREAM_EFFECTS)
    v = config.vocab_sizes
    s = config.effect_scale
    n_cv, n_ic = v["config_variant"], v["inspection_code"]
    return {
        "config_variant": s * rng.normal(0.0, 0.05, size=n_cv),
        "inspection_code": _inspection_effects(rng, n_ic, s),
        "entry": s * (_entry_structure() + rng.normal(0.0, 0.05, size=len(ENTRY_BUCKETS))),
        "parking_location": s * rng.normal(0.0, 0.1, size=v["parking_location"]),
        "derivative_offset": {"ICE": 0.0, "BEV": 0.15 * s},
        "variant_intensity": rng.normal(0.0, 0.8, size=n_cv),
        "variant_links": rng.integers(0, n_ic, size=(n_cv, LINKS_PER_VARIANT)),
    }


@dataclass
class _Draw:
    """Vectorised fleet draw before the base offset is applied."""

    is_ice: np.ndarray
    product: np.ndarray
    entry: np.ndarray
    priority: np.ndarray
    series: np.ndarray
    noise: np.ndarray
    variants: list[np.ndarray]
    codes: list[np.ndarray]
    parking: list[np.ndarray]


def _popularity(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** 0.7
    return w / w.sum()


def _dedupe(owner: np.ndarray, tok: np.ndarray, n_rows: int, vocab: int) -> list[np.ndarray]:
    keys = np.unique(owner.astype(np.int64) * vocab + tok)
    owner, tok = np.divmod(keys, vocab)
    bounds = np.searchsorted(owner, np.arange(n_rows + 1))
    return [tok[bounds[i]:bounds[i + 1]] for i in range(n_rows)]


def _token_sets(rng: np.random.Generator, n_rows: int, vocab: int, mean: float,
                min_count: int = 0) -> list[np.ndarray]:
    counts = min_count + rng.poisson(max(mean - min_count, 0.0), size=n_rows)
    flat = rng.choice(vocab, size=int(counts.sum()), p=_popularity(vocab))
    return _dedupe(np.repeat(np.arange(n_rows), counts), flat, n_rows, vocab)


def _inspection_sets(rng: np.random.Generator, config: GeneratorConfig, effects,
                     variants: list[np.ndarray]) -> list[np.ndarray]:
    """Findings per vehicle: gamma-mixed Poisson counts scaled by variant intensity.

    Half of the findings come from codes linked to the vehicle's variants, so
    entry-time characteristics carry information about in-process findings.
    """
    n = len(variants)
    n_ic = config.vocab_sizes["inspection_code"]
    intensity = _get(effects, "variant_intensity")
    links = _get(effects, "variant_links")
    mean_int = np.array([intensity[vs].mean() for vs in variants])
    lam = config.mean_codes_per_vehicle * np.exp(mean_int - 0.5 * np.var(intensity))
    lam = lam * rng.gamma(CODE_COUNT_SHAPE, 1.0 / CODE_COUNT_SHAPE, size=n)
    counts = rng.poisson(lam)
    owner = np.repeat(np.arange(n), counts)
    total = int(counts.sum())
    linked = rng.random(total) < LINKED_CODE_SHARE
    pick = rng.random(total)
    free = rng.choice(n_ic, size=total, p=_popularity(n_ic))
    tok = free.copy()
    for j in np.flatnonzero(linked):
        vs = variants[owner[j]]
        v = vs[int(pick[j] * len(vs))]
        tok[j] = links[v, int(pick[j] * len(vs) * LINKS_PER_VARIANT) % LINKS_PER_VARIANT]
    return _dedupe(owner, tok, n, n_ic)


def _draw(config: GeneratorConfig, effects, rng: np.random.Generator, n: int) -> _Draw:
    v = config.vocab_sizes
    ice_keys, bev_keys = product_keys(v["product_key"])
    is_ice = rng.random(n) < config.share_ice
    product = np.where(
        is_ice,
        rng.integers(0, len(ice_keys), size=n),
        len(ice_keys) + rng.integers(0, max(len(bev_keys), 1), size=n),
    )
    if v["product_key"] == 1:
        product[:] = 0
    entry = rng.choice(len(ENTRY_BUCKETS), size=n, p=_entry_weights())
    priority = rng.random(n) < config.priority_rate
    series = rng.random(n) >= config.non_series_rate
    noise = rng.exponential(1.0 / config.base_rate_per_day, size=n)
    variants = _token_sets(rng, n, v["config_variant"], config.mean_variants_per_vehicle, min_count=1)
    codes = _inspection_sets(rng, config, effects, variants)
    parking = _token_sets(rng, n, v["parking_location"], config.mean_parking_per_vehicle)
    return _Draw(is_ice, product, entry, priority, series, noise, variants, codes, parking)


def _get(params, key):
    return params[key] if isinstance(params, dict) else getattr(params, key)


def _linear_part(draw: _Draw, params) -> np.ndarray:
    """Everything except the global base offset, before the priority multiplier."""
    n = len(draw.noise)
    z = draw.noise + _get(params, "entry")[draw.entry]
    offsets = _get(params, "derivative_offset")
    z = z + np.where(draw.is_ice, offsets["ICE"], offsets["BEV"])
    for name, sets in (("config_variant", draw.variants), ("inspection_code", draw.codes),
                       ("parking_location", draw.parking)):
        eff = _get(params, name)
        lens = np.fromiter((len(s) for s in sets), dtype=np.int64, count=n)
        if lens.sum():
            flat = np.concatenate(sets)
            z = z + np.bincount(np.repeat(np.arange(n), lens), weights=eff[flat], minlength=n)
    return z


def _multiplier(draw: _Draw, priority_multiplier: float) -> np.ndarray:
    return np.where(draw.priority, priority_multiplier, 1.0)


def lead_times(draw: _Draw, params: GroundTruthParams) -> np.ndarray:
    z = _linear_part(draw, params)
    lead = _multiplier(draw, params.priority_multiplier) * (params.base_offset + z)
    return np.maximum(MIN_LEAD_DAYS, lead)


def calibrate(config: GeneratorConfig) -> GroundTruthParams:
    """Draw ground-truth effects and bisect the base offset onto the target share.

    The calibration sample has its own stream, so the returned parameters
    depend only on the config (not on ``n_vehicles``).
    """
    target = config.target_share_under_1d
    if not 0.0 < target < 1.0:
        raise CalibrationError(f"target share must lie in (0, 1), got {target}")
    effects = _draw_effects(config)
    priority_multiplier = 0.6
    draw = _draw(config, effects, _rng(config.seed, _STREAM_CALIBRATION), CALIBRATION_SAMPLES)
    z = _linear_part(draw, effects)
    m = _multiplier(draw, priority_multiplier)

    def share(base: float) -> float:
        return float(np.mean(m * (base + z) <= 1.0))

    # share() is non-increasing in base; grow a bracket, then bisect.
    lo, hi = -1.0, 1.0
    steps = 0
    while share(lo) < target or share(hi) > target:
        steps += 1
        if steps > MAX_BISECTION_STEPS:
            raise CalibrationError(f"could not bracket target share {target}")
        if share(lo) < target:
            lo = 2 * lo - hi
        if share(hi) > target:
            hi = 2 * hi - lo
    for _ in range(MAX_BISECTION_STEPS):
        if hi - lo <= CALIBRATION_TOL_DAYS:
            break
        mid = 0.5 * (lo + hi)
        if share(mid) > target:
            lo = mid
        else:
            hi = mid
    else:
        raise CalibrationError(f"bisection did not converge within {MAX_BISECTION_STEPS} steps")
    base = 0.5 * (lo + hi)
    if abs(share(base) - target) > 0.01:
        raise CalibrationError(
            f"target share {target} unattainable: calibrated share is {share(base):.4f}")
    return GroundTruthParams(
        config_variant=_frozen(effects["config_variant"]),
        inspection_code=_frozen(effects["inspection_code"]),
        entry=_frozen(effects["entry"]),
        parking_location=_frozen(effects["parking_location"]),
        derivative_offset=dict(effects["derivative_offset"]),
        variant_intensity=_frozen(effects["variant_intensity"]),
        variant_links=_frozen_int(effects["variant_links"]),
        priority_multiplier=priority_multiplier,
        base_offset=base,
        effect_scale=config.effect_scale,
    )


def apply_process_change(params: GroundTruthParams, magnitude: float, seed: int) -> GroundTruthParams:
    """Redraw 30% of inspection-code effects at ``magnitude`` times the usual scale.

    Redrawn codes get a typical in-process effect (median about 0.3 days
    before scaling) rather than the quick/rework mixture, modelling checks
    whose handling changed instead of new rework types.
    """
    if not magnitude > 0:
        raise ConfigError(f"process change magnitude must be positive, got {magnitude}")
    n = len(params.inspection_code)
    k = int(round(REDRAW_FRACTION * n))
    if k == 0:
        return params
    rng = _rng(seed, _STREAM_CHANGE)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    effects = np.array(params.inspection_code)
    effects[idx] = magnitude * params.effect_scale * rng.lognormal(
        mean=CHANGED_CODE_LOG_MEAN, sigma=CHANGED_CODE_LOG_SIGMA, size=k)
    return replace(params, inspection_code=_frozen(effects))


def _records(config: GeneratorConfig, draw: _Draw, lead: np.ndarray) -> list[VehicleRecord]:
    v = config.vocab_sizes
    ice_keys, bev_keys = product_keys(v["product_key"])
    keys = ice_keys + bev_keys if v["product_key"] > 1 else ice_keys
    cv = config_variant_tokens(v["config_variant"])
    ic = inspection_code_tokens(v["inspection_code"])
    pk = parking_tokens(v["parking_location"])
    out = []
    for i in range(len(lead)):
        out.append(VehicleRecord(
            vehicle_id=f"V{config.seed}-{i:07d}",
            product_key=keys[draw.product[i]],
            derivative="ICE" if draw.is_ice[i] else "BEV",
            series_flag=bool(draw.series[i]),
            entry_weekday_hour=ENTRY_BUCKETS[draw.entry[i]],
            priority=int(draw.priority[i]),
            config_variants=frozenset(cv[t] for t in draw.variants[i]),
            inspection_codes=frozenset(ic[t] for t in draw.codes[i]),
            parking_locations=frozenset(pk[t] for t in draw.parking[i]),
            lead_time_days=float(lead[i]),
        ))
    return out


def generate_fleet(config: GeneratorConfig, params: GroundTruthParams | None = None) -> list[VehicleRecord]:
    config.validate()
    if config.n_vehicles == 0:
        return []
    if params is None:
        params = calibrate(config)
    draw = _draw(config, params, _rng(config.seed, _STREAM_FLEET), config.n_vehicles)
    return _records(config, draw, lead_times(draw, params))
