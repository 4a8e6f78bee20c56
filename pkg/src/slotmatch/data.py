"""Input records, slot expansion, exposure indexing and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np

from ._validation import check_positive_int, check_random_state
from .exceptions import ConfigurationError, ValidationError

EARTH_RADIUS_M = 6_371_000.0

TRAJECTORY_COLUMNS = ("user_id", "lat", "lon", "t_start", "t_end")
BILLBOARD_COLUMNS = ("billboard_id", "lat", "lon", "cost", "panel_size")
AFFINITY_COLUMNS = ("user_id", "tag_id", "probability")


@dataclass(frozen=True)
class TrajectoryRecord:
    """One user sighting: where a user was during ``[t_start, t_end]``."""

    user_id: str
    lat: float
    lon: float
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValidationError(f"t_start {self.t_start} > t_end {self.t_end}", column="t_start")
        _check_latlon(self.lat, self.lon)


@dataclass(frozen=True)
class BillboardRecord:
    billboard_id: str
    lat: float
    lon: float
    cost: float = 0.0
    panel_size: float = 1.0

    def __post_init__(self):
        _check_latlon(self.lat, self.lon)
        if not self.cost >= 0:
            raise ValidationError(f"cost must be >= 0, got {self.cost}", column="cost")
        if not self.panel_size > 0:
            raise ValidationError(f"panel_size must be > 0, got {self.panel_size}", column="panel_size")


@dataclass(frozen=True)
class TagAffinity:
    """Probability that ``user_id`` is persuaded by content carrying ``tag_id``."""

    user_id: str
    tag_id: str
    probability: float

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValidationError(
                f"probability must lie in [0, 1], got {self.probability}", column="probability"
            )


@dataclass(frozen=True, order=True)
class SlotId:
    billboard_id: str
    slot_index: int

    def __str__(self):
        return f"{self.billboard_id}#{self.slot_index}"

    @classmethod
    def parse(cls, text):
        billboard_id, _, index = str(text).rpartition("#")
        if not billboard_id:
            raise ValueError(f"not a slot id: {text!r}")
        return cls(billboard_id, int(index))


class Horizon(NamedTuple):
    """Advertising horizon ``[start, end]`` cut into slots of ``step`` seconds."""

    start: int
    end: int
    step: int

    @property
    def n_slots(self):
        return (self.end - self.start) // self.step

    def window(self, slot_index):
        lo = self.start + slot_index * self.step
        return lo, lo + self.step


def _check_latlon(lat, lon):
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"latitude {lat} outside [-90, 90]", column="lat")
    if not -180.0 <= lon <= 180.0:
        raise ValidationError(f"longitude {lon} outside [-180, 180]", column="lon")


def check_horizon(horizon):
    start, end, step = (int(v) for v in horizon)
    if step <= 0:
        raise ConfigurationError(f"slot duration must be positive, got {step}")
    if end <= start:
        raise ConfigurationError(f"horizon end {end} must exceed start {start}")
    if (end - start) % step:
        raise ConfigurationError(
            f"slot duration {step} does not divide the horizon length {end - start}"
        )
    return Horizon(start, end, step)


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters; broadcasts over numpy arrays."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(v, dtype=float)) for v in (lat1, lon1, lat2, lon2))
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


# ---------------------------------------------------------------- CSV I/O


def _read_rows(path, required):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise ValidationError(f"{path.name}: missing columns {missing}", row=0)
        for i, row in enumerate(reader, start=1):
            yield i, row


def _parse(row, i, column, kind):
    raw = row.get(column)
    if raw is None or raw.strip() == "":
        raise ValidationError("missing value", row=i, column=column)
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
        return raw.strip()
    except ValueError:
        raise ValidationError(f"cannot parse {raw!r} as {kind.__name__}", row=i, column=column) from None


def _with_row(i, build):
    try:
        return build()
    except ValidationError as exc:
        raise ValidationError(str(exc), row=i, column=exc.column) from None


def load_trajectories(path) -> List[TrajectoryRecord]:
    """Read ``user_id,lat,lon,t_start,t_end`` rows, preserving file order.

    An empty file yields an empty list. Malformed rows raise
    :class:`ValidationError` carrying the row number and column.
    """
    out = []
    for i, row in _read_rows(path, TRAJECTORY_COLUMNS):
        values = [
            _parse(row, i, "user_id", str),
            _parse(row, i, "lat", float),
            _parse(row, i, "lon", float),
            _parse(row, i, "t_start", int),
            _parse(row, i, "t_end", int),
        ]
        out.append(_with_row(i, lambda: TrajectoryRecord(*values)))
    return out


def load_billboards(path) -> List[BillboardRecord]:
    """Read billboards; ``cost`` and ``panel_size`` default to 0 and 1 when absent."""
    out = []
    for i, row in _read_rows(path, ("billboard_id", "lat", "lon")):
        cost = _parse(row, i, "cost", float) if row.get("cost") not in (None, "") else 0.0
        panel = _parse(row, i, "panel_size", float) if row.get("panel_size") not in (None, "") else 1.0
        values = [_parse(row, i, "billboard_id", str), _parse(row, i, "lat", float), _parse(row, i, "lon", float)]
        out.append(_with_row(i, lambda: BillboardRecord(*values, cost=cost, panel_size=panel)))
    return out


def load_affinities(path) -> List[TagAffinity]:
    out = []
    seen = set()
    for i, row in _read_rows(path, AFFINITY_COLUMNS):
        values = [_parse(row, i, "user_id", str), _parse(row, i, "tag_id", str), _parse(row, i, "probability", float)]
        rec = _with_row(i, lambda: TagAffinity(*values))
        key = (rec.user_id, rec.tag_id)
        if key in seen:
            raise ValidationError(f"duplicate (user_id, tag_id) pair {key}", row=i, column="tag_id")
        seen.add(key)
        out.append(rec)
    return out


def _write(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_trajectories(path, records: Iterable[TrajectoryRecord]):
    _write(path, TRAJECTORY_COLUMNS, ((r.user_id, r.lat, r.lon, r.t_start, r.t_end) for r in records))


def write_billboards(path, records: Iterable[BillboardRecord]):
    _write(path, BILLBOARD_COLUMNS, ((r.billboard_id, r.lat, r.lon, r.cost, r.panel_size) for r in records))


def write_affinities(path, records: Iterable[TagAffinity]):
    _write(path, AFFINITY_COLUMNS, ((r.user_id, r.tag_id, r.probability) for r in records))


class Dataset(NamedTuple):
    trajectories: List[TrajectoryRecord]
    billboards: List[BillboardRecord]
    affinities: List[TagAffinity]


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    return Dataset(
        load_trajectories(directory / "trajectories.csv"),
        load_billboards(directory / "billboards.csv"),
        load_affinities(directory / "affinities.csv"),
    )


def write_dataset(directory, dataset: Dataset):
    directory = Path(directory)
    write_trajectories(directory / "trajectories.csv", dataset.trajectories)
    write_billboards(directory / "billboards.csv", dataset.billboards)
    write_affinities(directory / "affinities.csv", dataset.affinities)


# ---------------------------------------------------------------- slots


class SlotList(list):
    """A list of :class:`SlotId` that remembers the horizon it was cut from."""

    def __init__(self, slots, horizon):
        super().__init__(slots)
        self.horizon = check_horizon(horizon)


def expand_slots(billboards: Sequence[BillboardRecord], horizon) -> SlotList:
    """All ``(billboard, window)`` slots, ordered by ``(billboard_id, slot_index)``."""
    horizon = check_horizon(horizon)
    ids = sorted({b.billboard_id for b in billboards})
    if len(ids) != len(billboards):
        raise ValidationError("duplicate billboard_id", column="billboard_id")
    return SlotList((SlotId(bid, i) for bid in ids for i in range(horizon.n_slots)), horizon)


@dataclass
class SlotInventory:
    """Slots plus, for each slot, the users it reaches and with what probability.

    ``exposure[slot]`` maps user id to the base probability that the slot
    reaches the user. ``users`` lists every user of the trajectory database,
    in first-seen order, whether or not any slot reaches them.
    """

    slots: List[SlotId]
    exposure: Dict[SlotId, Dict[str, float]]
    horizon: Horizon
    radius: float
    users: List[str] = field(default_factory=list)

    def exposure_matrix(self, users=None) -> np.ndarray:
        """Dense ``(n_users, n_slots)`` matrix of base exposure probabilities."""
        users = self.users if users is None else list(users)
        row = {u: i for i, u in enumerate(users)}
        mat = np.zeros((len(users), len(self.slots)))
        for j, slot in enumerate(self.slots):
            for user, p in self.exposure[slot].items():
                if user in row:
                    mat[row[user], j] = p
        return mat


def panel_probabilities(billboards: Sequence[BillboardRecord]) -> Dict[str, float]:
    """Base reach probability per billboard: panel size over the largest panel."""
    biggest = max(b.panel_size for b in billboards)
    return {b.billboard_id: b.panel_size / biggest for b in billboards}


def build_exposure(slots, billboards, trajectories, radius, model="panel", horizon=None) -> SlotInventory:
    """Index which users each slot reaches.

    A user is exposed to a slot when one of their trajectory records lies
    within ``radius`` meters (haversine) of the billboard and its closed
    time interval intersects the slot's closed window. ``model`` is either
    ``"panel"`` (panel size over the largest panel) or a callable mapping a
    :class:`BillboardRecord` to a probability in ``(0, 1]``.
    """
    radius = float(radius)
    if not radius > 0:
        raise ConfigurationError(f"radius must be positive, got {radius}")
    horizon = check_horizon(horizon) if horizon is not None else getattr(slots, "horizon", None)
    if horizon is None:
        raise ConfigurationError("pass a horizon or slots produced by expand_slots")
    by_id = {b.billboard_id: b for b in billboards}
    if model == "panel":
        base = panel_probabilities(billboards)
    elif callable(model):
        base = {b.billboard_id: float(model(b)) for b in billboards}
    else:
        raise ConfigurationError(f"unknown exposure model {model!r}")
    for bid, p in base.items():
        if not 0.0 < p <= 1.0:
            raise ConfigurationError(f"base probability for {bid} is {p}, expected (0, 1]")

    users = list(dict.fromkeys(t.user_id for t in trajectories))
    lat = np.array([t.lat for t in trajectories], dtype=float)
    lon = np.array([t.lon for t in trajectories], dtype=float)
    t1 = np.array([t.t_start for t in trajectories], dtype=np.int64)
    t2 = np.array([t.t_end for t in trajectories], dtype=np.int64)
    uid = np.array([t.user_id for t in trajectories], dtype=object)

    near_cache = {}
    exposure = {}
    for slot in slots:
        bid = slot.billboard_id
        if bid not in near_cache:
            b = by_id[bid]
            near_cache[bid] = np.flatnonzero(haversine_m(lat, lon, b.lat, b.lon) <= radius)
        near = near_cache[bid]
        lo, hi = horizon.window(slot.slot_index)
        near = near[(t1[near] <= hi) & (t2[near] >= lo)]
        p = base[bid]
        exposure[slot] = {u: p for u in dict.fromkeys(uid[near])}
    return SlotInventory(list(slots), exposure, horizon, radius, users)


def make_inventory(dataset: Dataset, horizon, radius, model="panel") -> SlotInventory:
    horizon = check_horizon(horizon)
    slots = expand_slots(dataset.billboards, horizon)
    return build_exposure(slots, dataset.billboards, dataset.trajectories, radius, model=model)


# ---------------------------------------------------------------- synthetic data

# Roughly 2.2 km x 2.1 km of midtown Manhattan.
DEFAULT_EXTENT = ((40.745, 40.765), (-73.995, -73.970))


def generate_synthetic(
    seed,
    n_users,
    n_billboards,
    n_tags,
    horizon=(0, 86_400, 3_600),
    extent=DEFAULT_EXTENT,
    records_per_user=(1, 4),
    near_billboard=0.7,
    dominant_tag: Optional[int] = None,
) -> Dataset:
    """Reproducible desk-scale dataset.

    Each user gets between ``records_per_user`` sightings; a fraction
    ``near_billboard`` of them is scattered (about 60 m) around a random
    billboard, the rest uniformly over ``extent``. Tags have decreasing
    popularity and each user holds an affinity for a random subset of them.
    With ``dominant_tag`` set, that tag is held by every user at 0.95 while
    all other affinities stay at or below 0.9.
    """
    n_users = check_positive_int(n_users, "n_users")
    n_billboards = check_positive_int(n_billboards, "n_billboards")
    n_tags = check_positive_int(n_tags, "n_tags")
    horizon = check_horizon(horizon)
    (lat_lo, lat_hi), (lon_lo, lon_hi) = extent
    if dominant_tag is not None and not 0 <= dominant_tag < n_tags:
        raise ConfigurationError(f"dominant_tag {dominant_tag} out of range")
    rng = check_random_state(seed)

    width = max(len(str(n_billboards - 1)), 3)
    b_lat = rng.uniform(lat_lo, lat_hi, n_billboards)
    b_lon = rng.uniform(lon_lo, lon_hi, n_billboards)
    panel = rng.choice([1.0, 2.0, 3.0, 4.0], size=n_billboards)
    cost = np.round(rng.uniform(50.0, 500.0, n_billboards), 2)
    billboards = [
        BillboardRecord(f"b{j:0{width}d}", float(b_lat[j]), float(b_lon[j]), float(cost[j]), float(panel[j]))
        for j in range(n_billboards)
    ]

    # ~60 m in degrees at this latitude
    jitter_lat = 60.0 / 111_320.0
    jitter_lon = jitter_lat / max(math.cos(math.radians((lat_lo + lat_hi) / 2)), 1e-6)
    uwidth = max(len(str(n_users - 1)), 4)
    lo_rec, hi_rec = records_per_user
    span = horizon.end - horizon.start
    trajectories = []
    for i in range(n_users):
        uid = f"u{i:0{uwidth}d}"
        for _ in range(int(rng.integers(lo_rec, hi_rec + 1))):
            if rng.random() < near_billboard:
                j = int(rng.integers(n_billboards))
                lat = float(np.clip(b_lat[j] + rng.normal(0, jitter_lat), lat_lo, lat_hi))
                lon = float(np.clip(b_lon[j] + rng.normal(0, jitter_lon), lon_lo, lon_hi))
            else:
                lat = float(rng.uniform(lat_lo, lat_hi))
                lon = float(rng.uniform(lon_lo, lon_hi))
            start = horizon.start + int(rng.integers(span))
            end = min(horizon.end, start + int(rng.integers(600, 3 * 3600)))
            trajectories.append(TrajectoryRecord(uid, lat, lon, start, end))

    twidth = max(len(str(n_tags - 1)), 2)
    tag_ids = [f"t{t:0{twidth}d}" for t in range(n_tags)]
    popularity = np.linspace(0.7, 0.15, n_tags) if n_tags > 1 else np.array([1.0])
    affinities = []
    for i in range(n_users):
        uid = f"u{i:0{uwidth}d}"
        for t, tag in enumerate(tag_ids):
            if t == dominant_tag:
                affinities.append(TagAffinity(uid, tag, 0.95))
            elif rng.random() < popularity[t]:
                affinities.append(TagAffinity(uid, tag, float(np.round(rng.uniform(0.05, 0.9), 6))))
    return Dataset(trajectories, billboards, affinities)
