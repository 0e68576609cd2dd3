"""Synthetic greenhouse temperature series with injected, labelled anomalies.

Daily profile at one-minute resolution (clock times)::

    23:00-05:00  night plateau, 20 C
    05:00-06:00  linear warm-up to 30 C plus a +1.5 C half-sine overshoot
    06:00-22:00  day plateau, 30 C
    22:00-23:00  linear cool-down back to 20 C

Randomness is drawn from per-purpose substreams of one master seed
(``SeedSequence(seed, spawn_key=...)``):

    (0, dim)                     red noise of dimension ``dim``
    (1, class, event)            sync decision and shared position of a slot
    (2, class, event, dim)       per-dimension draws of a slot

so adding dimensions or classes leaves existing streams untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .core import AnomalyInterval, MultivariateSeries, ValidationError, assign_ids
from .saai import overlap_ratio

MINUTES_PER_DAY = 1440
NIGHT_C = 20.0
DAY_C = 30.0
OVERSHOOT_C = 1.5
# linear rise reaches 30 C after 45 of the 60 warm-up minutes
WARMUP_RISE_FRACTION = 0.75
SYNC_THETA = 0.5
MAX_RETRIES = 1000


class GenerationError(RuntimeError):
    """The configuration leaves no room to place all events."""


def _hm(text: str) -> int:
    h, m = text.split(":")
    return int(h) * 60 + int(m)


@dataclass(frozen=True)
class AnomalyClassSpec:
    name: str
    start_window: tuple[int, int]  # minute of day, inclusive
    duration_range: tuple[int, int]  # minutes, inclusive
    intensity_range: tuple[float, float]  # degrees C, signed

    def __post_init__(self):
        lo, hi = self.start_window
        if not 0 <= lo <= hi < MINUTES_PER_DAY:
            raise ValidationError(f"{self.name}: bad start window {self.start_window}")
        if not 2 <= self.duration_range[0] <= self.duration_range[1]:
            raise ValidationError(f"{self.name}: bad duration range {self.duration_range}")


ANOMALY_CLASSES: tuple[AnomalyClassSpec, ...] = (
    AnomalyClassSpec("Long Day Peak", (_hm("04:00"), _hm("06:20")), (240, 245), (10.0, 11.0)),
    AnomalyClassSpec("Short Day Peak", (_hm("07:00"), _hm("08:20")), (120, 125), (8.0, 9.0)),
    AnomalyClassSpec("Night Drop", (_hm("01:00"), _hm("01:40")), (10, 11), (-5.0, -4.0)),
    AnomalyClassSpec("Day Drop", (_hm("13:00"), _hm("15:50")), (60, 65), (-5.0, -4.0)),
    AnomalyClassSpec("Night Peak", (_hm("01:00"), _hm("01:40")), (10, 11), (5.0, 6.0)),
    AnomalyClassSpec("Cooldown Peak", (_hm("22:00"), _hm("22:30")), (20, 21), (5.0, 6.0)),
)


@dataclass(frozen=True)
class GeneratorConfig:
    n_days: int = 30
    n_dims: int = 2
    classes: tuple[int, ...] = (0, 1, 2, 3)
    r_sync: float = 1.0
    lag_minutes: int = 0
    events_per_class: int = 3
    noise_std: float = 0.5
    noise_corr: float = 0.5
    seed: int = 0
    step: int = field(default=1, init=False)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))
        if self.n_days < 1:
            raise ValidationError("n_days must be >= 1")
        if self.n_dims < 1:
            raise ValidationError("n_dims must be >= 1")
        if not 1 <= len(self.classes) <= len(ANOMALY_CLASSES):
            raise ValidationError("choose between 1 and 6 anomaly classes")
        if len(set(self.classes)) != len(self.classes) or not all(
            0 <= c < len(ANOMALY_CLASSES) for c in self.classes
        ):
            raise ValidationError(f"invalid class ids {self.classes}")
        if not 0.0 <= self.r_sync <= 1.0:
            raise ValidationError("r_sync must lie in [0, 1]")
        if abs(self.lag_minutes) >= MINUTES_PER_DAY:
            raise ValidationError("|lag_minutes| must be below one day")
        if self.events_per_class < 0:
            raise ValidationError("events_per_class must be >= 0")
        if self.noise_std < 0 or not 0.0 <= self.noise_corr < 1.0:
            raise ValidationError("need noise_std >= 0 and 0 <= noise_corr < 1")


def _daily_profile() -> np.ndarray:
    t = np.arange(MINUTES_PER_DAY, dtype=float)
    out = np.full(MINUTES_PER_DAY, DAY_C)
    night = (t < _hm("05:00")) | (t >= _hm("23:00"))
    out[night] = NIGHT_C

    warm = (t >= _hm("05:00")) & (t < _hm("06:00"))
    u = (t[warm] - _hm("05:00")) / 60.0
    rise = np.clip(u / WARMUP_RISE_FRACTION, 0.0, 1.0)
    out[warm] = NIGHT_C + (DAY_C - NIGHT_C) * rise + OVERSHOOT_C * np.sin(np.pi * u)

    cool = (t >= _hm("22:00")) & (t < _hm("23:00"))
    u = (t[cool] - _hm("22:00")) / 60.0
    out[cool] = DAY_C - (DAY_C - NIGHT_C) * u
    return out


_PROFILE = _daily_profile()


def base_signal(n_days: int) -> np.ndarray:
    """Noise-free daily temperature profile repeated ``n_days`` times."""
    if n_days < 1:
        raise ValidationError("n_days must be >= 1")
    return np.tile(_PROFILE, n_days)


@njit(cache=True)
def _ar1(eps, corr, x0):
    out = np.empty(eps.shape[0])
    prev = x0
    for t in range(eps.shape[0]):
        prev = corr * prev + eps[t]
        out[t] = prev
    return out


def red_noise(length: int, std: float = 0.5, corr: float = 0.5, seed=0) -> np.ndarray:
    """Zero-mean AR(1) noise whose stationary standard deviation is ``std``."""
    if std < 0 or not 0.0 <= corr < 1.0:
        raise ValidationError("need std >= 0 and 0 <= corr < 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if std == 0:
        return np.zeros(length)
    innov = std * np.sqrt(1.0 - corr * corr)
    x0 = rng.normal(0.0, std)
    eps = rng.normal(0.0, innov, size=length)
    return _ar1(eps, corr, x0)


def anomaly_shape(length: int, intensity: float) -> np.ndarray:
    """Tapered plateau (Tukey window, half of it cosine ramps) of height ``intensity``."""
    n = np.arange(length, dtype=float)
    x = n / (length - 1)
    alpha = 0.5
    w = np.ones(length)
    left = x < alpha / 2
    right = x > 1 - alpha / 2
    w[left] = 0.5 * (1 - np.cos(2 * np.pi * x[left] / alpha))
    w[right] = 0.5 * (1 - np.cos(2 * np.pi * (1 - x[right]) / alpha))
    return intensity * w


@dataclass(frozen=True)
class _Draw:
    start: int  # absolute minute in dimension-0 clock
    duration: int
    intensity: float


def _draw(spec: AnomalyClassSpec, day: int, rng: np.random.Generator) -> _Draw:
    lo, hi = spec.start_window
    minute = int(rng.integers(lo, hi + 1))
    duration = int(rng.integers(spec.duration_range[0], spec.duration_range[1] + 1))
    intensity = float(rng.uniform(*spec.intensity_range))
    return _Draw(day * MINUTES_PER_DAY + minute, duration, intensity)


def inject_anomaly(
    signal,
    spec: AnomalyClassSpec,
    day: int,
    rng: np.random.Generator,
    class_id: int | None = None,
    dim: int = 0,
) -> tuple[np.ndarray, AnomalyInterval]:
    """Add one randomly drawn anomaly of class ``spec`` on ``day``.

    Returns the deformed copy of ``signal`` and the ground-truth interval.
    """
    sig = np.array(signal, dtype=float)
    if not 0 <= day < int(np.ceil(sig.size / MINUTES_PER_DAY)):
        raise ValidationError(f"day {day} outside the signal")
    d = _draw(spec, day, rng)
    a, b = d.start, d.start + d.duration - 1
    if b >= sig.size:
        raise ValidationError(f"anomaly [{a}, {b}] exceeds series end {sig.size - 1}")
    sig[a : b + 1] += anomaly_shape(d.duration, d.intensity)
    if class_id is None:
        class_id = ANOMALY_CLASSES.index(spec) if spec in ANOMALY_CLASSES else None
    return sig, AnomalyInterval(id=0, dim=dim, a=a, b=b, true_class=class_id)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _lags(cfg: GeneratorConfig) -> list[int]:
    return [0] + [cfg.lag_minutes] * (cfg.n_dims - 1)


def _day_range(cfg: GeneratorConfig) -> tuple[int, int]:
    if cfg.lag_minutes == 0:
        return 0, cfg.n_days - 1
    if cfg.n_days < 3:
        raise ValidationError("lagged series need n_days >= 3")
    # shifted events must stay inside the series
    return 1, cfg.n_days - 2


def _free(placed: list[tuple[int, int]], a: int, b: int) -> bool:
    return all(b < pa or a > pb for pa, pb in placed)


def generate(config: GeneratorConfig) -> tuple[MultivariateSeries, list[AnomalyInterval]]:
    """Build the multivariate series and its ground-truth anomaly intervals.

    Each class contributes ``events_per_class`` slots. A slot is synchronized
    with probability ``r_sync``: one draw (position, duration, intensity) is
    shared by all dimensions. Otherwise every dimension draws
    its own position, rejecting draws that would overlap the other
    dimensions' events of the slot with ratio >= 0.5. Dimensions ``d >= 1``
    are shifted by ``lag_minutes`` (signal and events alike).
    """
    cfg = config
    n = cfg.n_days * MINUTES_PER_DAY
    lags = _lags(cfg)
    base = base_signal(cfg.n_days)
    values = np.empty((n, cfg.n_dims))
    for d in range(cfg.n_dims):
        values[:, d] = np.roll(base, lags[d]) + red_noise(
            n, cfg.noise_std, cfg.noise_corr, _stream(cfg.seed, 0, d)
        )

    day_lo, day_hi = _day_range(cfg)
    placed: list[list[tuple[int, int]]] = [[] for _ in range(cfg.n_dims)]
    intervals = []
    for cls in cfg.classes:
        spec = ANOMALY_CLASSES[cls]
        for event in range(cfg.events_per_class):
            slot_rng = _stream(cfg.seed, 1, cls, event)
            dim_rngs = [_stream(cfg.seed, 2, cls, event, d) for d in range(cfg.n_dims)]
            if slot_rng.random() < cfg.r_sync:
                draws = _place_synced(spec, slot_rng, dim_rngs, placed, lags, day_lo, day_hi)
            else:
                draws = _place_unsynced(spec, dim_rngs, placed, lags, day_lo, day_hi)
            for d, dr in enumerate(draws):
                a = dr.start + lags[d]
                b = a + dr.duration - 1
                values[a : b + 1, d] += anomaly_shape(dr.duration, dr.intensity)
                placed[d].append((a, b))
                intervals.append(AnomalyInterval(id=0, dim=d, a=a, b=b, true_class=cls))

    series = MultivariateSeries(values, start_time=0, step=1)
    return series, assign_ids(intervals)


def _place_synced(spec, slot_rng, dim_rngs, placed, lags, day_lo, day_hi) -> list[_Draw]:
    for _ in range(MAX_RETRIES):
        day = int(slot_rng.integers(day_lo, day_hi + 1))
        shared = _draw(spec, day, slot_rng)
        spans = [(shared.start + lag, shared.start + lag + shared.duration - 1) for lag in lags]
        if all(_free(placed[d], a, b) for d, (a, b) in enumerate(spans)):
            return [shared] * len(dim_rngs)
    raise GenerationError(f"could not place a synchronized {spec.name} event")


def _place_unsynced(spec, dim_rngs, placed, lags, day_lo, day_hi) -> list[_Draw]:
    draws: list[_Draw] = []
    spans: list[tuple[int, int]] = []
    for d, rng in enumerate(dim_rngs):
        for _ in range(MAX_RETRIES):
            day = int(rng.integers(day_lo, day_hi + 1))
            dr = _draw(spec, day, rng)
            a = dr.start + lags[d]
            b = a + dr.duration - 1
            if not _free(placed[d], a, b):
                continue
            if any(overlap_ratio(a, b, pa, pb) >= SYNC_THETA for pa, pb in spans):
                continue
            draws.append(dr)
            spans.append((a, b))
            break
        else:
            raise GenerationError(f"could not place an unsynchronized {spec.name} event")
    return draws


def random_classes(k: int, rng: np.random.Generator) -> tuple[int, ...]:
    """``k`` distinct class ids drawn uniformly, sorted."""
    return tuple(sorted(int(c) for c in rng.choice(len(ANOMALY_CLASSES), size=k, replace=False)))


def class_names(ids: Sequence[int]) -> list[str]:
    return [ANOMALY_CLASSES[i].name for i in ids]
