"""Synthetic i.i.d. uncertainty generation, CSV I/O and empirical bound estimation.

Scenario CSV layout (UTF-8, comma separated, one header row, one row per slot)::

    t,alpha_F_0,...,alpha_F_{I-1},beta_C_0,...,beta_C_{J-1},gamma_G_0,...,gamma_G_{J-1},gamma_E_0,...,gamma_E_{J-1}

``t`` counts slots from 0.  Values are written with 17 significant digits so a
save/load round trip reproduces every float bit for bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import truncnorm

from .model import SampleSeries, SystemConfig, UncertaintyBounds

DEFAULT_HORIZON = 10_000
DEFAULT_TRAIN_SLOTS = 1_000
FAMILIES = ("uniform", "truncnorm", "constant")

SERIES_PREFIX = {"demand": "alpha_F", "ambient": "beta_C", "price": "gamma_G", "carbon": "gamma_E"}


class ScenarioFormatError(ValueError):
    pass


def _check_dist(d: dict, where: str) -> dict:
    fam = d.get("family")
    if fam not in FAMILIES:
        raise ValueError(f"{where}: unsupported distribution family {fam!r}")
    need = {"uniform": ("low", "high"), "truncnorm": ("mean", "std", "low", "high"),
            "constant": ("value",)}[fam]
    for k in need:
        if k not in d:
            raise ValueError(f"{where}: {fam} needs '{k}'")
    if fam != "constant" and d["low"] > d["high"]:
        raise ValueError(f"{where}: low exceeds high")
    if fam == "truncnorm" and d["std"] <= 0:
        raise ValueError(f"{where}: std must be positive")
    return dict(d)


def _support(d: dict) -> tuple[float, float]:
    if d["family"] == "constant":
        return d["value"], d["value"]
    return d["low"], d["high"]


@dataclass(frozen=True)
class ScenarioSpec:
    """Per-series marginal distributions; every slot is drawn independently."""

    demand: list  # one dict per mapping node
    ambient: list  # one dict per data center
    price: list
    carbon: list
    name: str = "scenario"

    def __post_init__(self):
        if len(self.ambient) != len(self.price) or len(self.price) != len(self.carbon):
            raise ValueError("ambient, price and carbon need one entry per data center")
        if not self.demand or not self.ambient:
            raise ValueError("need at least one node and one data center")
        for key in SERIES_PREFIX:
            dists = [_check_dist(d, f"{key}[{k}]") for k, d in enumerate(getattr(self, key))]
            object.__setattr__(self, key, dists)
        for key in ("demand", "carbon"):
            for k, d in enumerate(getattr(self, key)):
                if _support(d)[0] < 0:
                    raise ValueError(f"{key}[{k}] support must be nonnegative")

    @property
    def n_nodes(self) -> int:
        return len(self.demand)

    @property
    def n_centers(self) -> int:
        return len(self.ambient)

    def to_json_dict(self) -> dict:
        return {"name": self.name, "demand": self.demand, "ambient": self.ambient,
                "price": self.price, "carbon": self.carbon}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(d["demand"], d["ambient"], d["price"], d["carbon"], d.get("name", "scenario"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ScenarioSpec":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


def _draw(d: dict, rng: np.random.Generator, n: int) -> np.ndarray:
    fam = d["family"]
    if fam == "constant":
        return np.full(n, float(d["value"]))
    if fam == "uniform":
        return rng.uniform(d["low"], d["high"], size=n)
    a = (d["low"] - d["mean"]) / d["std"]
    b = (d["high"] - d["mean"]) / d["std"]
    x = truncnorm.rvs(a, b, loc=d["mean"], scale=d["std"], size=n, random_state=rng)
    return np.clip(x, d["low"], d["high"])


def generate(spec: ScenarioSpec, seed: int, n_slots: int) -> SampleSeries:
    """Draw ``n_slots`` i.i.d. slots; deterministic for a fixed ``(spec, seed)``."""
    if n_slots < 1:
        raise ValueError("number of slots must be at least 1")
    rng = np.random.default_rng(seed)
    cols = {}
    for key in SERIES_PREFIX:
        cols[key] = np.column_stack([_draw(d, rng, n_slots) for d in getattr(spec, key)])
    return SampleSeries(**cols)


def estimate_bounds(samples: SampleSeries, margin: float = 0.05) -> UncertaintyBounds:
    """Observed extrema widened by ``margin`` times the observed range on each side."""
    if len(samples) == 0:
        raise ValueError("cannot estimate bounds from an empty dataset")
    if margin < 0:
        raise ValueError("margin must be nonnegative")

    def widen(a):
        lo, hi = a.min(axis=0), a.max(axis=0)
        pad = margin * (hi - lo)
        return lo - pad, hi + pad

    _, d_hi = widen(samples.demand)
    a_lo, a_hi = widen(samples.ambient)
    p_lo, p_hi = widen(samples.price)
    c_lo, c_hi = widen(samples.carbon)
    return UncertaintyBounds(np.maximum(d_hi, 0.0), a_lo, a_hi, p_lo, p_hi,
                             np.maximum(c_lo, 0.0), c_hi)


def csv_header(n_nodes: int, n_centers: int) -> list[str]:
    head = ["t"] + [f"alpha_F_{i}" for i in range(n_nodes)]
    for key in ("ambient", "price", "carbon"):
        head += [f"{SERIES_PREFIX[key]}_{j}" for j in range(n_centers)]
    return head


def save_csv(path, samples: SampleSeries) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(samples.n_nodes, samples.n_centers))
        data = np.hstack([samples.demand, samples.ambient, samples.price, samples.carbon])
        for t, row in enumerate(data):
            w.writerow([t] + [format(v, ".17g") for v in row])


def load_csv(path) -> SampleSeries:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ScenarioFormatError("missing header row")
    header = [h.strip() for h in rows[0]]
    n_i = sum(h.startswith("alpha_F_") for h in header)
    n_j = sum(h.startswith("beta_C_") for h in header)
    if n_i == 0 or n_j == 0 or header != csv_header(n_i, n_j):
        raise ScenarioFormatError(f"unexpected header {header}; expected "
                                  f"{csv_header(max(n_i, 1), max(n_j, 1))}")
    width = len(header)
    data = np.empty((len(rows) - 1, width - 1))
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != width:
            raise ScenarioFormatError(f"row {r}: expected {width} cells, found {len(row)}")
        for c, cell in enumerate(row[1:], start=1):
            try:
                data[r - 1, c - 1] = float(cell)
            except ValueError:
                raise ScenarioFormatError(
                    f"row {r}, column {header[c]}: non-numeric value {cell!r}") from None
    s = np.cumsum([0, n_i, n_j, n_j, n_j])
    return SampleSeries(data[:, s[0]:s[1]], data[:, s[1]:s[2]], data[:, s[2]:s[3]],
                        data[:, s[3]:s[4]])


# ---------------------------------------------------------------- default case study

def default_config(emission_cap: float = 1.2) -> SystemConfig:
    """Two mapping nodes feeding three data centers: clean/pricey, mid, dirty/cheap."""
    j3 = np.ones(3)
    return SystemConfig(
        link_capacity=np.full((2, 3), 3.0),
        it_capacity=4.0 * j3,
        charge_cap=2.0 * j3,
        discharge_cap=2.0 * j3,
        energy_min=2.0 * j3,
        energy_max=22.0 * j3,
        charge_eff=0.95 * j3,
        discharge_eff=0.95 * j3,
        cooling_cap=1.0 * j3,
        temp_min=18.0 * j3,
        temp_max=32.0 * j3,
        heat_coeff=0.5 * j3,
        cool_coeff=3.0 * j3,
        transfer_cost=[[2.0, 4.0, 6.0], [5.0, 3.0, 4.0]],
        rejection_penalty=[200.0, 200.0],
        storage_wear=2.0 * j3,
        emission_cap=emission_cap,
        node_names=("north", "south"),
        center_names=("hydro", "mixed", "coal"),
    )


def default_spec() -> ScenarioSpec:
    demand = {"family": "truncnorm", "mean": 3.0, "std": 1.0, "low": 0.5, "high": 5.5}
    ambient = {"family": "truncnorm", "mean": -0.3, "std": 0.15, "low": -0.6, "high": -0.05}
    return ScenarioSpec(
        demand=[dict(demand), dict(demand)],
        ambient=[dict(ambient), dict(ambient), dict(ambient)],
        price=[{"family": "uniform", "low": 30.0, "high": 90.0},
               {"family": "uniform", "low": 20.0, "high": 70.0},
               {"family": "uniform", "low": 15.0, "high": 60.0}],
        carbon=[{"family": "uniform", "low": 0.01, "high": 0.05},
                {"family": "uniform", "low": 0.08, "high": 0.20},
                {"family": "uniform", "low": 0.25, "high": 0.45}],
        name="default",
    )
