"""Datasets: CSV ingestion, lag features, seeded synthetic series, run config.

CSV layouts
-----------
raw series      ``day,slot,y_kw[,weather...]`` -- one row per (day, slot)
featured set    ``day,slot,<feature columns>,y_kw``

Days and slots are integers; slots run ``1..T`` and every day must carry the
same slots.
"""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientHistory, MissingValue, ParseError, SchemaMismatch
from .merit_dispatch import ResourceFleet

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

LAG_FEATURES = ("y_lag1", "y_lag2", "y_lag3", "y_lag2_next")
TARGET = "y_kw"


@dataclass(frozen=True, eq=False)
class Dataset:
    day: np.ndarray
    slot: np.ndarray
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    part: str = "all"

    def __post_init__(self):
        day = np.asarray(self.day, dtype=int).reshape(-1)
        slot = np.asarray(self.slot, dtype=int).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float).reshape(y.size, -1) if y.size else np.zeros((0, len(self.feature_names)))
        names = tuple(self.feature_names)
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate feature names in {names}")
        if X.shape[1] != len(names):
            raise SchemaMismatch(f"{X.shape[1]} feature columns but {len(names)} names")
        if not (day.size == slot.size == y.size):
            raise SchemaMismatch("day/slot/y lengths differ")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise MissingValue("dataset contains NaN or infinite values")
        order = np.lexsort((slot, day))
        day, slot, X, y = day[order], slot[order], X[order], y[order]
        if y.size:
            days, counts = np.unique(day, return_counts=True)
            if np.any(counts != counts[0]):
                raise SchemaMismatch("ragged panel: days carry different numbers of slots")
            ref = slot[day == days[0]]
            if not np.all(slot.reshape(days.size, -1) == ref):
                raise SchemaMismatch("ragged panel: days carry different slot labels")
        for arr in (day, slot, X, y):
            arr.setflags(write=False)
        for k, v in dict(day=day, slot=slot, X=X, y=y, feature_names=names).items():
            object.__setattr__(self, k, v)

    def __len__(self) -> int:
        return self.y.size

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def days(self) -> np.ndarray:
        return np.unique(self.day)

    @property
    def slots_per_day(self) -> int:
        return int(len(self) // max(1, self.days.size))

    def select_days(self, days, part: str | None = None) -> "Dataset":
        mask = np.isin(self.day, np.asarray(days))
        return Dataset(self.day[mask], self.slot[mask], self.X[mask], self.y[mask], self.feature_names, part or self.part)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.day, other.day)
            and np.array_equal(self.slot, other.slot)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True, eq=False)
class RawSeries:
    """Net demand ``y[d, t]`` (kW) with optional weather columns of the same shape."""

    y: np.ndarray
    days: np.ndarray = None
    weather: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2:
            raise SchemaMismatch("raw series must be a (days, slots) array")
        days = np.arange(1, y.shape[0] + 1) if self.days is None else np.asarray(self.days, dtype=int)
        weather = {k: np.asarray(v, dtype=float) for k, v in self.weather.items()}
        for k, v in weather.items():
            if v.shape != y.shape:
                raise SchemaMismatch(f"weather column {k!r} has shape {v.shape}, expected {y.shape}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "weather", weather)


# ---------------------------------------------------------------------------
# CSV


def _fmt(v: float) -> str:
    return repr(float(v))


def save_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "slot", *ds.feature_names, TARGET])
        for d, s, x, y in zip(ds.day, ds.slot, ds.X, ds.y):
            w.writerow([int(d), int(s), *map(_fmt, x), _fmt(y)])


def _read_rows(path, expected_header):
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if expected_header is not None:
            expected = list(expected_header)
            for i in range(max(len(header), len(expected))):
                got = header[i] if i < len(header) else "<missing>"
                want = expected[i] if i < len(expected) else "<none>"
                if got != want:
                    raise SchemaMismatch(f"{path}: column {i + 1} is {got!r}, expected {want!r}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for col, cell in zip(header, row):
                cell = cell.strip()
                if cell == "" or cell.lower() in ("nan", "na", "null"):
                    raise MissingValue(f"{path}:{line_no}: missing value in column {col!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(f"{path}:{line_no}: column {col!r} is not numeric: {cell!r}") from None
            rows.append(vals)
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def _as_int(col, name, path):
    if not np.all(col == np.round(col)):
        raise ParseError(f"{path}: column {name!r} must hold integers")
    return col.astype(int)


def load_csv(path, schema=None) -> Dataset:
    """Load a featured dataset.  ``schema`` is the expected feature-column list."""
    expected = None if schema is None else ["day", "slot", *schema, TARGET]
    header, data = _read_rows(path, expected)
    if schema is None:
        if header[:2] != ["day", "slot"] or header[-1] != TARGET:
            raise SchemaMismatch(f"{path}: header must be day,slot,<features>,{TARGET}")
    names = tuple(header[2:-1])
    return Dataset(
        _as_int(data[:, 0], "day", path), _as_int(data[:, 1], "slot", path), data[:, 2:-1], data[:, -1], names
    )


def save_raw_csv(raw: RawSeries, path) -> None:
    names = list(raw.weather)
    D, T = raw.y.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["day", "slot", TARGET, *names])
        for i in range(D):
            for t in range(T):
                w.writerow([int(raw.days[i]), t + 1, _fmt(raw.y[i, t]), *(_fmt(raw.weather[k][i, t]) for k in names)])


def load_raw_csv(path) -> RawSeries:
    header, data = _read_rows(path, None)
    if header[:3] != ["day", "slot", TARGET]:
        raise SchemaMismatch(f"{path}: header must start with day,slot,{TARGET}")
    day = _as_int(data[:, 0], "day", path)
    slot = _as_int(data[:, 1], "slot", path)
    order = np.lexsort((slot, day))
    data, day, slot = data[order], day[order], slot[order]
    days, counts = np.unique(day, return_counts=True)
    if np.any(counts != counts[0]):
        raise SchemaMismatch(f"{path}: ragged panel")
    T = int(counts[0])
    if not np.all(slot.reshape(-1, T) == np.arange(1, T + 1)):
        raise SchemaMismatch(f"{path}: slots must run 1..{T} on every day")
    weather = {name: data[:, 3 + i].reshape(-1, T) for i, name in enumerate(header[3:])}
    return RawSeries(data[:, 2].reshape(-1, T), days, weather)


# ---------------------------------------------------------------------------
# features


def build_lag_features(raw: RawSeries) -> Dataset:
    """Context ``[y(d-1,t), y(d-2,t), y(d-3,t), y(d-2,t+1)]`` plus weather at (d, t).

    The successor of the last slot of day d-2 is slot 1 of day d-1.  The first
    three days only serve as history and are dropped.
    """
    y = raw.y
    D, T = y.shape
    if D < 4:
        raise InsufficientHistory(f"need at least 4 days of history, got {D}")
    flat = y.reshape(-1)
    d_idx, t_idx = np.meshgrid(np.arange(3, D), np.arange(T), indexing="ij")
    d_idx, t_idx = d_idx.reshape(-1), t_idx.reshape(-1)
    cols = [
        y[d_idx - 1, t_idx],
        y[d_idx - 2, t_idx],
        y[d_idx - 3, t_idx],
        flat[(d_idx - 2) * T + t_idx + 1],
    ]
    names = list(LAG_FEATURES)
    for k, v in raw.weather.items():
        cols.append(v[d_idx, t_idx])
        names.append(k)
    return Dataset(raw.days[d_idx], t_idx + 1, np.column_stack(cols), y[d_idx, t_idx], tuple(names))


# ---------------------------------------------------------------------------
# synthetic data


def _daily_profile(T: int) -> np.ndarray:
    phase = np.arange(T) / T
    return 0.55 + 0.16 * np.sin(2 * np.pi * (phase - 0.3)) + 0.06 * np.sin(4 * np.pi * phase + 0.5)


def _synthetic_parts(seed: int, days: int, T: int, noise: float):
    rng = np.random.default_rng(seed)
    n = days * T
    phi = 0.97
    innov = rng.standard_normal(n)
    wind = np.empty(n)
    wind[0] = innov[0]
    for k in range(1, n):
        wind[k] = phi * wind[k - 1] + math.sqrt(1 - phi * phi) * innov[k]
    nwp = wind + 0.5 * rng.standard_normal(n)
    eps = rng.standard_normal(n)
    base = np.tile(_daily_profile(T), days)
    shape = base - noise * 0.09 * wind + noise * 0.03 * eps
    return base, shape, noise * nwp


def _within_margin(raw: RawSeries, fleet: ResourceFleet, margin: float) -> bool:
    y = raw.y.reshape(-1)
    top = fleet.da_total
    if y.min() < margin * top or y.max() > (1 - margin) * top:
        return False
    ds = build_lag_features(raw)
    Xd = np.column_stack([ds.X, np.ones(len(ds))])
    w, *_ = np.linalg.lstsq(Xd, ds.y, rcond=None)
    y_hat = Xd @ w
    if y_hat.min() < margin * top or y_hat.max() > (1 - margin) * top:
        return False
    dev = ds.y - y_hat
    return dev.max() < (1 - margin) * fleet.up_total and dev.min() > -(1 - margin) * fleet.down_total


def generate_raw_series(seed: int, days: int, slots_per_day: int, fleet: ResourceFleet, noise: float = 1.0, margin: float = 0.05) -> RawSeries:
    """``days`` days of net demand: daily profile, AR(1) wind-like swing, white noise.

    A forecast of the wind-like component (``wind_nwp``) is attached as a weather
    column.  The series is shrunk about its daily profile until realizations,
    least-squares forecasts and their deviations sit inside the feasibility box
    with the requested margin.
    """
    if days < 4:
        raise InsufficientHistory(f"need at least 4 days, got {days}")
    base, shape, nwp = _synthetic_parts(seed, days, slots_per_day, noise)
    top = fleet.da_total
    amp = 1.0
    for _ in range(60):
        y = top * (base + amp * (shape - base))
        raw = RawSeries(y.reshape(days, slots_per_day), weather={"wind_nwp": nwp.reshape(days, slots_per_day)})
        if _within_margin(raw, fleet, margin):
            return raw
        amp *= 0.9
    raise ConfigError("fleet too small for the synthetic profile; cannot satisfy the box margin")


def generate_synthetic(seed: int, days: int, slots_per_day: int, fleet: ResourceFleet, noise: float = 1.0) -> Dataset:
    """Featured synthetic dataset with ``days`` days (three more are simulated as lag history)."""
    if days < 10:
        raise ConfigError(f"synthetic data needs days >= 10, got {days}")
    raw = generate_raw_series(seed, days + 3, slots_per_day, fleet, noise)
    return build_lag_features(raw)


def split_dataset(ds: Dataset, ratio: float = 0.8, seed: int | None = None) -> tuple[Dataset, Dataset]:
    """Day-level split.  Chronological by default; shuffled days when ``seed`` is given."""
    if not 0 < ratio < 1:
        raise ConfigError(f"split ratio must lie in (0, 1), got {ratio}")
    days = ds.days
    if seed is not None:
        days = np.random.default_rng(seed).permutation(days)
    n_train = int(round(ratio * days.size))
    n_train = min(max(n_train, 1), days.size - 1)
    return ds.select_days(days[:n_train], "train"), ds.select_days(days[n_train:], "test")


# ---------------------------------------------------------------------------
# config files


def read_flat_config(path) -> dict:
    """Parse a TOML file and flatten nested tables into dotted keys."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out = {}

    def walk(prefix, obj):
        for k, v in obj.items():
            key = f"{prefix}{k}"
            if isinstance(v, dict):
                walk(key + ".", v)
            else:
                out[key] = v

    walk("", data)
    return out


@dataclass
class RunConfig:
    fleet: str | None = None
    data: str | None = None
    raw: str | None = None
    beta: float = 0.5
    backend: str = "exact"
    seed: int = 2024
    split: float = 0.8
    days: int = 300
    slots: int = 24
    noise: float = 1.0
    k: int = 200
    iterations: int = 5000
    sweep_betas: tuple = (0.3, 0.5, 0.7)

    def validate(self) -> "RunConfig":
        if not 0 <= self.beta < 1:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if self.backend not in ("exact", "subgrad"):
            raise ConfigError(f"backend must be 'exact' or 'subgrad', got {self.backend!r}")
        if not 0 < self.split < 1:
            raise ConfigError(f"split must lie in (0, 1), got {self.split}")
        if self.days < 10 or self.slots < 1:
            raise ConfigError("need days >= 10 and slots >= 1")
        if self.k < 1 or self.iterations < 1:
            raise ConfigError("k and iterations must be positive")
        if any(not 0 <= b < 1 for b in self.sweep_betas):
            raise ConfigError("sweep betas must lie in [0, 1)")
        if self.fleet is not None and not Path(self.fleet).exists():
            raise ConfigError(f"fleet file {self.fleet} not found")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sweep_betas"] = list(self.sweep_betas)
        return d


def load_run_config(path) -> RunConfig:
    """Read a run config; relative paths are resolved against the config's folder."""
    cfg = read_flat_config(path)
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    base = Path(path).resolve().parent
    for key in ("fleet", "data", "raw"):
        if cfg.get(key):
            p = Path(cfg[key])
            cfg[key] = str(p if p.is_absolute() else base / p)
    if "sweep_betas" in cfg:
        cfg["sweep_betas"] = tuple(float(b) for b in cfg["sweep_betas"])
    try:
        return RunConfig(**cfg)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
