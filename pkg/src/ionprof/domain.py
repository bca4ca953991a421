"""Core domain types: ion species, channel configurations, model features.

Units are kept as-is throughout the data pipeline (sigma in angstrom,
epsilon in kcal/mol, width and r in nm, molarity in M, charge in e);
feature scaling is a model concern, not a data concern.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

# Wall material (graphene) LJ parameters. The wall is identical in every
# system, so these are never model inputs; recorded for documentation.
WALL_SIGMA_ANGSTROM = 3.3900
WALL_EPSILON_KCAL_MOL = 0.0692

FEATURE_NAMES = ("r", "sigma", "epsilon", "width", "molarity", "charge")
N_FEATURES = len(FEATURE_NAMES)


@dataclass(frozen=True)
class IonSpecies:
    """A single ion type: LJ parameters plus integer charge."""

    name: str
    sigma: float  # angstrom
    epsilon: float  # kcal/mol
    charge: int  # elementary charges, signed

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not isinstance(self.charge, int) or self.charge == 0:
            raise ValueError(f"charge must be a nonzero integer, got {self.charge!r}")


@dataclass(frozen=True)
class ChannelConfig:
    """One simulated system: a single ion species confined at a given
    channel width (nm) and average molarity (M)."""

    species: IonSpecies
    width: float  # nm
    molarity: float  # M

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.molarity <= 0:
            raise ValueError(f"molarity must be positive, got {self.molarity}")

    @property
    def half_width(self) -> float:
        return self.width / 2.0


_BUILTIN_CATALOG = (
    IonSpecies("Na", 2.1600, 0.3526, +1),
    IonSpecies("Cl", 4.8305, 0.0128, -1),
    IonSpecies("Mg", 2.1200, 0.8750, +2),
    IonSpecies("Li", 1.4094, 0.3367, +1),
    IonSpecies("K", 2.8384, 0.4297, +1),
)


def ion_catalog() -> list[IonSpecies]:
    """The built-in five-ion catalog."""
    return list(_BUILTIN_CATALOG)


def ion_by_name(name: str, catalog: list[IonSpecies] | None = None) -> IonSpecies:
    for ion in catalog if catalog is not None else _BUILTIN_CATALOG:
        if ion.name == name:
            return ion
    raise KeyError(f"unknown ion {name!r}")


def load_catalog(path) -> list[IonSpecies]:
    """Load a catalog override file: a JSON array of
    {name, sigma, epsilon, charge} objects."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ValueError(f"catalog file {path} must hold a non-empty JSON array")
    catalog = [
        IonSpecies(str(e["name"]), float(e["sigma"]), float(e["epsilon"]), int(e["charge"]))
        for e in raw
    ]
    names = [ion.name for ion in catalog]
    if len(set(names)) != len(names):
        raise ValueError("catalog names must be unique")
    return catalog


def save_catalog(catalog: list[IonSpecies], path) -> None:
    entries = [
        {"name": i.name, "sigma": i.sigma, "epsilon": i.epsilon, "charge": i.charge}
        for i in catalog
    ]
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2)
        fh.write("\n")


def assemble_features(config: ChannelConfig, r: float) -> np.ndarray:
    """Feature vector (r, sigma, epsilon, width, molarity, charge) in raw units."""
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    s = config.species
    return np.array([r, s.sigma, s.epsilon, config.width, config.molarity, float(s.charge)])


def assemble_features_batch(config: ChannelConfig, r: np.ndarray) -> np.ndarray:
    """Feature matrix for many r values of one configuration, shape (n, 6)."""
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError("r must be one-dimensional")
    if r.size and r.min() < 0:
        raise ValueError("r must be non-negative")
    s = config.species
    out = np.empty((r.size, N_FEATURES))
    out[:, 0] = r
    out[:, 1] = s.sigma
    out[:, 2] = s.epsilon
    out[:, 3] = config.width
    out[:, 4] = config.molarity
    out[:, 5] = float(s.charge)
    return out
