"""Experiment scenarios: physical constants, hyperparameters, validation and persistence.

Powers are configured in dBm and the aperture/spacing as multiples of the
wavelength; the linear SI values are exposed as properties so that a saved
file reloads to an identical object.
"""
from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml


class ScenarioError(ValueError):
    """Raised for an invalid or unparsable scenario; ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class PsoParams:
    T_max: int = 50
    particles: int = 50
    c1: float = 1.5
    c2: float = 1.5
    omega_max: float = 0.9
    omega_min: float = 0.4
    eta: float = 1e6
    # one (r1, r2) pair per particle update; True draws per coordinate instead
    per_coordinate_r: bool = False


@dataclass(frozen=True)
class AoParams:
    l_max: int = 20
    epsilon: float = 1e-4


@dataclass(frozen=True)
class Scenario:
    region_size: tuple[float, float]
    targets: tuple[tuple[float, float], ...]
    rcs: tuple[float, ...]  # |alpha_k|^2 in m^2
    H: float
    q_I: tuple[float, float]
    q_F: tuple[float, float]
    T: float
    N: int
    V_max: float
    M_t: int
    M_r: int
    wavelength: float
    D_wavelengths: float
    D_min_wavelengths: float
    P_max_dBm: float
    sigma2_r_dBm: float
    N_bar: int
    pso: PsoParams = field(default_factory=PsoParams)
    ao: AoParams = field(default_factory=AoParams)
    seed: int = 0

    @property
    def K(self) -> int:
        return len(self.targets)

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def D(self) -> float:
        return self.D_wavelengths * self.wavelength

    @property
    def D_min(self) -> float:
        return self.D_min_wavelengths * self.wavelength

    @property
    def P_max(self) -> float:
        return dbm_to_watts(self.P_max_dBm)

    @property
    def sigma2_r(self) -> float:
        return dbm_to_watts(self.sigma2_r_dBm)

    @property
    def step_max(self) -> float:
        """Largest horizontal displacement allowed between adjacent slots, in meters."""
        return self.V_max * self.tau

    @property
    def target_array(self) -> np.ndarray:
        return np.asarray(self.targets, dtype=float).reshape(-1, 2)

    @property
    def rcs_array(self) -> np.ndarray:
        return np.asarray(self.rcs, dtype=float)

    def with_updates(self, **changes) -> "Scenario":
        """Return a validated copy with some fields replaced."""
        return validate(replace(self, **changes))

    def to_dict(self) -> dict:
        return {
            "mission": {
                "region_size": list(self.region_size),
                "H": self.H,
                "q_I": list(self.q_I),
                "q_F": list(self.q_F),
                "T": self.T,
                "N": self.N,
                "V_max": self.V_max,
            },
            "targets": {
                "positions": [list(t) for t in self.targets],
                "rcs": list(self.rcs),
            },
            "array": {
                "M_t": self.M_t,
                "M_r": self.M_r,
                "lambda": self.wavelength,
                "D_wavelengths": self.D_wavelengths,
                "D_min_wavelengths": self.D_min_wavelengths,
            },
            "radar": {
                "P_max_dBm": self.P_max_dBm,
                "sigma2_r_dBm": self.sigma2_r_dBm,
                "N_bar": self.N_bar,
            },
            "pso": dataclasses.asdict(self.pso),
            "ao": dataclasses.asdict(self.ao),
            "seed": self.seed,
        }


def draw_targets(K: int, region_size, seed: int) -> tuple[tuple[float, float], ...]:
    """Uniform target positions in the region.

    The draw for ``K`` targets is a prefix of the draw for any larger count,
    so target-count sweeps are nested.
    """
    rng = np.random.default_rng([seed, 0x7A46])
    pts = rng.uniform(0.0, 1.0, size=(K, 2)) * np.asarray(region_size, dtype=float)
    return tuple((float(x), float(y)) for x, y in pts)


def default_scenario(seed: int = 0, K: int = 6, P_max_dBm: float = 30.0) -> Scenario:
    region = (800.0, 800.0)
    return validate(
        Scenario(
            region_size=region,
            targets=draw_targets(K, region, seed),
            rcs=(1.0,) * K,
            H=100.0,
            q_I=(100.0, 400.0),
            q_F=(700.0, 400.0),
            T=45.0,
            N=20,
            V_max=20.0,
            M_t=12,
            M_r=12,
            wavelength=0.0107,
            D_wavelengths=20.0,
            D_min_wavelengths=0.5,
            P_max_dBm=P_max_dBm,
            sigma2_r_dBm=-90.0,
            N_bar=200,
            pso=PsoParams(),
            ao=AoParams(),
            seed=seed,
        )
    )


_SECTIONS = {
    "mission": ("region_size", "H", "q_I", "q_F", "T", "N", "V_max"),
    "targets": ("positions", "rcs"),
    "array": ("M_t", "M_r", "lambda", "D_wavelengths", "D_min_wavelengths"),
    "radar": ("P_max_dBm", "sigma2_r_dBm", "N_bar"),
}
_OPTIONAL_SECTIONS = {
    "pso": tuple(f.name for f in dataclasses.fields(PsoParams)),
    "ao": tuple(f.name for f in dataclasses.fields(AoParams)),
}


def _pair(value, name, errors):
    try:
        x, y = (float(v) for v in value)
        return (x, y)
    except (TypeError, ValueError):
        errors.append(f"{name}: expected a pair of numbers, got {value!r}")
        return (math.nan, math.nan)


def _scenario_from_mapping(raw: Mapping[str, Any]) -> Scenario:
    errors: list[str] = []
    for key in raw:
        if key not in _SECTIONS and key not in _OPTIONAL_SECTIONS and key != "seed":
            warnings.warn(f"unknown scenario key {key!r} ignored", stacklevel=3)
    flat: dict[str, Any] = {}
    for section, names in _SECTIONS.items():
        body = raw.get(section)
        if not isinstance(body, Mapping):
            errors.append(f"missing section {section!r}")
            continue
        for k in body:
            if k not in names:
                warnings.warn(f"unknown key {section}.{k} ignored", stacklevel=3)
        for name in names:
            if name not in body:
                errors.append(f"missing field {section}.{name} ({name!r})")
            else:
                flat[name] = body[name]
    opt: dict[str, dict] = {}
    for section, names in _OPTIONAL_SECTIONS.items():
        body = raw.get(section) or {}
        for k in body:
            if k not in names:
                warnings.warn(f"unknown key {section}.{k} ignored", stacklevel=3)
        opt[section] = {k: body[k] for k in names if k in body}
    if errors:
        raise ScenarioError(errors)

    targets = tuple(_pair(p, "targets.positions", errors) for p in flat["positions"] or [])
    rcs = flat["rcs"]
    if isinstance(rcs, (int, float)):
        rcs = [rcs] * len(targets)
    try:
        pso = PsoParams(**opt["pso"])
        ao = AoParams(**opt["ao"])
        s = Scenario(
            region_size=_pair(flat["region_size"], "region_size", errors),
            targets=targets,
            rcs=tuple(float(r) for r in rcs),
            H=float(flat["H"]),
            q_I=_pair(flat["q_I"], "q_I", errors),
            q_F=_pair(flat["q_F"], "q_F", errors),
            T=float(flat["T"]),
            N=int(flat["N"]),
            V_max=float(flat["V_max"]),
            M_t=int(flat["M_t"]),
            M_r=int(flat["M_r"]),
            wavelength=float(flat["lambda"]),
            D_wavelengths=float(flat["D_wavelengths"]),
            D_min_wavelengths=float(flat["D_min_wavelengths"]),
            P_max_dBm=float(flat["P_max_dBm"]),
            sigma2_r_dBm=float(flat["sigma2_r_dBm"]),
            N_bar=int(flat["N_bar"]),
            pso=pso,
            ao=ao,
            seed=int(raw.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        errors.append(f"bad value: {exc}")
    if errors:
        raise ScenarioError(errors)
    return s


def _normalise(s: Scenario) -> Scenario:
    pso = s.pso
    return replace(
        s,
        region_size=(float(s.region_size[0]), float(s.region_size[1])),
        targets=tuple((float(x), float(y)) for x, y in s.targets),
        rcs=tuple(float(r) for r in s.rcs),
        q_I=(float(s.q_I[0]), float(s.q_I[1])),
        q_F=(float(s.q_F[0]), float(s.q_F[1])),
        H=float(s.H),
        T=float(s.T),
        N=int(s.N),
        V_max=float(s.V_max),
        M_t=int(s.M_t),
        M_r=int(s.M_r),
        wavelength=float(s.wavelength),
        D_wavelengths=float(s.D_wavelengths),
        D_min_wavelengths=float(s.D_min_wavelengths),
        P_max_dBm=float(s.P_max_dBm),
        sigma2_r_dBm=float(s.sigma2_r_dBm),
        N_bar=int(s.N_bar),
        pso=replace(pso, T_max=int(pso.T_max), particles=int(pso.particles), c1=float(pso.c1),
                    c2=float(pso.c2), omega_max=float(pso.omega_max), omega_min=float(pso.omega_min),
                    eta=float(pso.eta), per_coordinate_r=bool(pso.per_coordinate_r)),
        ao=replace(s.ao, l_max=int(s.ao.l_max), epsilon=float(s.ao.epsilon)),
        seed=int(s.seed),
    )


def validate(raw) -> Scenario:
    """Check every scenario invariant and return a normalised :class:`Scenario`.

    ``raw`` may be a nested mapping (file layout) or an existing Scenario.
    All violated invariants are collected into one :class:`ScenarioError`.
    """
    s = raw if isinstance(raw, Scenario) else _scenario_from_mapping(raw)
    s = _normalise(s)
    errors = []
    if s.N < 2:
        errors.append("N must be >= 2")
    if s.K < 1:
        errors.append("at least one target (K >= 1) required")
    if len(s.rcs) != s.K:
        errors.append(f"rcs has {len(s.rcs)} entries for {s.K} targets")
    if s.M_t < 2:
        errors.append("M_t must be >= 2")
    if s.M_r < 2:
        errors.append("M_r must be >= 2")
    if s.N_bar <= s.M_t:
        errors.append("N_bar must exceed M_t")
    for name in ("H", "T", "V_max", "wavelength", "D_wavelengths", "D_min_wavelengths"):
        v = getattr(s, name)
        if not (math.isfinite(v) and v > 0):
            errors.append(f"{name} must be positive and finite")
    if not all(math.isfinite(v) and v > 0 for v in s.region_size):
        errors.append("region_size must be positive")
    if any(not (math.isfinite(r) and r > 0) for r in s.rcs):
        errors.append("rcs entries must be positive")
    for name in ("P_max_dBm", "sigma2_r_dBm"):
        if not math.isfinite(getattr(s, name)):
            errors.append(f"{name} must be finite")
    pts = [s.q_I, s.q_F, *s.targets]
    if not all(math.isfinite(c) for p in pts for c in p):
        errors.append("positions must be finite")
    # tiny relative slack so that D == (M-1)*D_min configured in wavelengths is admitted
    slack = 1e-12 * max(s.D, 1.0)
    if s.D + slack < (s.M_t - 1) * s.D_min or s.D + slack < (s.M_r - 1) * s.D_min:
        errors.append("aperture too small for spacing: D < (M-1)*D_min")
    if s.N >= 2 and s.T > 0 and s.V_max > 0:
        reach = (s.N - 1) * s.tau * s.V_max
        gap = math.hypot(s.q_F[0] - s.q_I[0], s.q_F[1] - s.q_I[1])
        if gap > reach * (1 + 1e-12):
            errors.append(f"endpoints unreachable: |q_F - q_I| = {gap:.3f} m > (N-1)*tau*V_max = {reach:.3f} m")
    p = s.pso
    if p.T_max < 0 or p.particles < 1:
        errors.append("pso.T_max must be >= 0 and pso.particles >= 1")
    if p.c1 < 0 or p.c2 < 0 or p.eta <= 0:
        errors.append("pso coefficients must be non-negative and eta positive")
    if not (0 <= p.omega_min <= p.omega_max):
        errors.append("pso inertia bounds must satisfy 0 <= omega_min <= omega_max")
    if s.ao.l_max < 1:
        errors.append("ao.l_max must be >= 1")
    if not (s.ao.epsilon > 0):
        errors.append("ao.epsilon must be positive")
    if errors:
        raise ScenarioError(errors)
    return s


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ScenarioError(f"{path}: parse error{where}: {exc}") from exc
    if not isinstance(raw, Mapping):
        raise ScenarioError(f"{path}: top level must be a mapping")
    return validate(raw)


def save_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(scenario.to_dict(), sort_keys=False))
    return path
