"""Case configuration, initialization, time-loop orchestration,
checkpointing, and output.

A case file is flat ``key = value`` text (``#`` comments, ``include
<path>`` lines pull in another file relative to the including one;
later assignments win). The full schema with defaults is in
``data/cases/base.cfg``. Three run modes exist: ``droplet`` (the full
axisymmetric two-phase loop), ``film`` (a 1D evaporating-film column),
and ``reactor0d`` (a constant-pressure adiabatic reactor).

Exit codes follow the CLI contract: 0 success, 2 configuration error,
3 numerical abort. Numerical aborts write a checkpoint next to the
other outputs so the run can be inspected or restarted.
"""

from __future__ import annotations

import csv
import logging
import os
import time as _time
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

import numpy as np

from . import diagnostics
from .fiber import SolidRegion, coupled_boundary, solve_solid_temperature
from .fields import default_bcs
from .flow import (FlowState, OuterIterationError, adaptive_dt,
                   face_fluxes, flow_step, suspension_force)
from .kinetics import (ignition_delay, integrate_reactor, reaction_substep,
                       spark_patch, stoichiometric_mixture)
from .liquid import parse_liquids
from .mesh import build_axi_mesh
from .operators import face_values_r, face_values_z, gradient
from .phase_change import (EPS_MIXED, interface_fluxes,
                           redistribute_to_interface,
                           smoothed_alpha_gradient)
from .radiation import radiative_sink, solid_surface_radiation
from .thermo import gas_mixture_properties, parse_mechanism
from .transport import (StepRejected, diffusion_flux, enthalpy_flux_source,
                        solve_energy, solve_gas_species,
                        solve_liquid_species)
from .vle import (IdealSolution, MargulesBinary, bubble_point_temperature,
                  equilibrium_gas_composition)
from .vof import (CflError, _roll_masked, advect, apply_phase_change,
                  blend, liquid_volume)

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"
CASE_DIR = DATA_DIR / "cases"
OUTPUT_DIR_ENV = "DROPFLAME_OUTPUT_DIR"

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

PRESETS = ("d2law", "stefan", "ign0d", "case1", "case2", "case3")

_OPEN_PATCHES = ("leftSide", "inlet", "outlet")


class CaseValidationError(ValueError):
    """Raised by load_case; carries every violation, each naming the
    offending configuration field."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid case configuration:\n{lines}")


# ----------------------------------------------------------------------
# configuration file parsing
# ----------------------------------------------------------------------

def parse_config(path, _stack=None) -> dict:
    """Flat key=value parser with ``include`` support. Returns raw
    string values keyed by dotted names; later keys override earlier
    ones, and an including file overrides its includes."""
    path = Path(path)
    _stack = _stack or []
    rp = path.resolve()
    if rp in _stack:
        raise CaseValidationError(
            [f"include: circular include of {path}"])
    if not path.is_file():
        raise CaseValidationError([f"config file not found: {path}"])
    out = {}
    for ln, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include"):
            inc = line[len("include"):].strip()
            if not inc:
                raise CaseValidationError(
                    [f"{path}:{ln}: include without a path"])
            out.update(parse_config(path.parent / inc, _stack + [rp]))
            continue
        if "=" not in line:
            raise CaseValidationError(
                [f"{path}:{ln}: expected 'key = value', got {line!r}"])
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _parse_composition(text):
    """'CH3OH:0.95, H2O:0.05' -> dict of floats."""
    comp = {}
    for part in text.split(","):
        name, _, frac = part.strip().partition(":")
        if not name or not frac:
            raise ValueError(f"expected NAME:FRACTION pairs, got {part!r}")
        comp[name.strip()] = float(frac)
    return comp


_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


@dataclass
class CaseConfig:
    """Validated simulation case. Field names match the dotted config
    keys with '.' replaced by '_' (e.g. ``droplet.diameter`` ->
    ``droplet_diameter``)."""

    run_mode: str = "droplet"

    geometry_kind: str = "axisymmetric"
    geometry_radius: float = 0.0      # domain extent along r [m]
    geometry_height: float = 0.0      # domain extent along z [m]
    geometry_nr: int = 0
    geometry_nz: int = 0

    fiber_radius: float = 0.0         # 0 disables the fiber
    fiber_rho: float = 2200.0
    fiber_cp: float = 740.0
    fiber_k: float = 1.4
    fiber_emissivity: float = 0.93
    fiber_adiabatic: bool = False

    droplet_diameter: float = 0.0
    droplet_center_z: float = 0.0
    droplet_temperature: float = 300.0
    droplet_composition: dict = field(default_factory=dict)

    ambient_pressure: float = 1.0e5
    ambient_temperature: float = 300.0
    ambient_x_o2: float = 0.21        # mole fraction, balance N2

    gravity_z: float = 0.0            # [m/s^2]; -9.81 points down

    model_mechanism: str = "methanol_global.mech"
    model_liquids: str = ""           # empty -> bundled correlations
    model_activity: str = "ideal"     # ideal | margules
    model_chemistry: bool = False
    model_radiation: bool = False
    model_suspension_cm: float = 0.0  # spring body-force coefficient

    spark_enabled: bool = False
    spark_time_on: float = 0.02
    spark_time_off: float = 0.07
    spark_center_r: float = 0.0
    spark_center_z: float = 0.0
    spark_diameter: float = 0.0
    spark_temperature: float = 2200.0

    numerics_cfl: float = 0.2
    numerics_dt_max: float = 1.0e-4
    numerics_dt_init: float = 1.0e-6
    numerics_max_dalpha: float = 0.1
    numerics_outer_tol: float = 1.0e-6
    numerics_conjugate_tol: float = 1.0e-8

    film_thickness: float = 1.0e-3
    film_cells: int = 50
    film_temperature: float = 300.0

    reactor_t0: float = 1400.0
    reactor_end_time: float = 5.0e-3

    run_end_time: float = 0.0
    output_interval: float = 1.0e-3
    output_directory: str = "output"
    run_restart: str = ""

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV,
                                   self.output_directory))


def preset_path(name) -> Path:
    if name not in PRESETS:
        raise CaseValidationError(
            [f"preset: unknown preset {name!r}; choose from "
             f"{', '.join(PRESETS)}"])
    return CASE_DIR / f"{name}.cfg"


def load_case(path) -> CaseConfig:
    """Parse and validate a case file, collecting every violation."""
    raw = parse_config(path)
    violations = []
    cfg = CaseConfig()
    known = {f.name: f for f in dc_fields(CaseConfig)}

    for key, text in raw.items():
        name = key.replace(".", "_")
        if name not in known:
            violations.append(f"{key}: unknown configuration key")
            continue
        kind = known[name].type
        try:
            if name == "droplet_composition":
                val = _parse_composition(text)
            elif kind == "bool":
                if text.lower() not in _BOOL:
                    raise ValueError(f"expected a boolean, got {text!r}")
                val = _BOOL[text.lower()]
            elif kind == "int":
                val = int(text)
            elif kind == "float":
                val = float(text)
            else:
                val = text
            setattr(cfg, name, val)
        except ValueError as exc:
            violations.append(f"{key}: {exc}")

    violations.extend(validate_case(cfg, base_dir=Path(path).parent))
    if violations:
        raise CaseValidationError(violations)
    return cfg


def resolve_data_path(name, base_dir=None, default_dir=DATA_DIR):
    """Resolve a config path: absolute, relative to the case file, or
    the bundled data directory."""
    p = Path(name)
    if p.is_absolute():
        return p
    if base_dir and (Path(base_dir) / p).is_file():
        return Path(base_dir) / p
    return default_dir / p


def validate_case(cfg: CaseConfig, base_dir=None):
    """All schema violations for a CaseConfig, as field-named strings."""
    v = []

    def positive(name, *, strict=True):
        x = getattr(cfg, name)
        if (x <= 0) if strict else (x < 0):
            v.append(f"{name.replace('_', '.', 1)}: must be "
                     f"{'positive' if strict else 'non-negative'}, "
                     f"got {x!r}")
            return False
        return True

    if cfg.run_mode not in ("droplet", "film", "reactor0d"):
        v.append(f"run.mode: unknown mode {cfg.run_mode!r}")

    mech_path = resolve_data_path(cfg.model_mechanism, base_dir)
    if not mech_path.is_file():
        v.append(f"model.mechanism: file not found: {cfg.model_mechanism}")
    if cfg.model_liquids:
        if not resolve_data_path(cfg.model_liquids, base_dir).is_file():
            v.append(f"model.liquids: file not found: {cfg.model_liquids}")
    if cfg.model_activity not in ("ideal", "margules"):
        v.append(f"model.activity: unknown model {cfg.model_activity!r}")
    if not 0.0 < cfg.ambient_x_o2 < 1.0:
        v.append(f"ambient.x_o2: must lie in (0, 1), got {cfg.ambient_x_o2}")
    positive("ambient_pressure")
    positive("ambient_temperature")
    positive("output_interval")
    positive("numerics_cfl")
    positive("numerics_dt_max")

    if cfg.run_mode == "reactor0d":
        positive("reactor_t0")
        positive("reactor_end_time")
        return v
    if cfg.run_mode == "film":
        positive("film_thickness")
        positive("film_temperature")
        if cfg.film_cells < 3:
            v.append(f"film.cells: need at least 3, got {cfg.film_cells}")

    if cfg.run_mode == "droplet":
        ok_geom = positive("geometry_radius") & positive("geometry_height")
        if cfg.geometry_kind not in ("axisymmetric", "planar"):
            v.append(f"geometry.kind: unknown kind {cfg.geometry_kind!r}")
        if cfg.geometry_nr < 2 or cfg.geometry_nz < 2:
            v.append("geometry.nr/geometry.nz: need at least 2 cells "
                     f"each, got {cfg.geometry_nr} x {cfg.geometry_nz}")
        positive("fiber_radius", strict=False)
        if cfg.fiber_radius >= cfg.geometry_radius > 0:
            v.append("fiber.radius: must be smaller than geometry.radius")
        ok_d = positive("droplet_diameter")
        if ok_d and ok_geom:
            if cfg.droplet_diameter >= 2 * cfg.geometry_radius:
                v.append("droplet.diameter: droplet overlaps the outer "
                         "radial boundary")
            r = 0.5 * cfg.droplet_diameter
            if (cfg.droplet_center_z - r <= 0
                    or cfg.droplet_center_z + r >= cfg.geometry_height):
                v.append("droplet.center_z: droplet overlaps the axial "
                         "domain boundary")
        if not cfg.droplet_composition:
            v.append("droplet.composition: required for droplet mode")
        else:
            s = sum(cfg.droplet_composition.values())
            if abs(s - 1.0) > 1e-8:
                v.append("droplet.composition: mass fractions sum to "
                         f"{s:.6g}, expected 1")
            if any(x < 0 for x in cfg.droplet_composition.values()):
                v.append("droplet.composition: negative mass fraction")
        positive("droplet_temperature")
        positive("run_end_time")
        if cfg.spark_enabled:
            if cfg.spark_time_off <= cfg.spark_time_on:
                v.append("spark.time_off: must exceed spark.time_on")
            positive("spark_diameter")
            positive("spark_temperature")
        if cfg.run_restart and not Path(cfg.run_restart).is_file():
            v.append(f"run.restart: checkpoint not found: {cfg.run_restart}")
    return v


# ----------------------------------------------------------------------
# state and checkpointing
# ----------------------------------------------------------------------

@dataclass
class State:
    """All prognostic fields of a droplet-mode run."""
    alpha: np.ndarray            # liquid volume fraction
    ur: np.ndarray               # radial velocity [m/s]
    uz: np.ndarray               # axial velocity [m/s]
    p_rgh: np.ndarray            # pressure minus hydrostatic head [Pa]
    phi_r: np.ndarray            # face volume fluxes [m^3/s]
    phi_z: np.ndarray
    T: np.ndarray                # one-field fluid temperature [K]
    t_solid: np.ndarray          # fiber temperature [K]
    omega: np.ndarray            # gas mass fractions (n_gas, nr, nz)
    omega_l: np.ndarray          # liquid mass fractions (n_liq, nr, nz)
    time: float = 0.0
    step: int = 0

    def copy(self) -> "State":
        return State(*(np.array(getattr(self, f.name), copy=True)
                       if isinstance(getattr(self, f.name), np.ndarray)
                       else getattr(self, f.name)
                       for f in dc_fields(self)))


_STATE_ARRAYS = ("alpha", "ur", "uz", "p_rgh", "phi_r", "phi_z",
                 "T", "t_solid", "omega", "omega_l")


def save_checkpoint(path, state: State):
    data = {k: getattr(state, k) for k in _STATE_ARRAYS}
    np.savez(path, time=state.time, step=state.step, **data)


def load_checkpoint(path) -> State:
    with np.load(path) as z:
        kw = {k: z[k] for k in _STATE_ARRAYS}
        return State(time=float(z["time"]), step=int(z["step"]), **kw)


# ----------------------------------------------------------------------
# boundary switching
# ----------------------------------------------------------------------

def boundary_apply(mesh, phi_r, phi_z, ambient_values):
    """Per-patch inflow/outflow switching on the open boundaries.

    A patch whose net volume flux is directed into the domain gets the
    fixed ambient value; outflow patches get zero-gradient. Returns
    {field: bcs} for every field in ``ambient_values``.
    """
    net = {
        "leftSide": float(phi_r[-1, :].sum()),       # outward = +r
        "inlet": float(-phi_z[:, 0].sum()),          # outward = -z
        "outlet": float(phi_z[:, -1].sum()),         # outward = +z
    }
    out = {}
    for name, amb in ambient_values.items():
        bcs = default_bcs()
        for patch, flux in net.items():
            bcs[patch] = ("fixed", amb) if flux < 0 else ("zero_gradient",)
        out[name] = bcs
    return out


# ----------------------------------------------------------------------
# the droplet-mode simulation
# ----------------------------------------------------------------------

class Simulation:
    """Owns the mesh, property models, and the substep orchestration
    for a droplet-mode case."""

    def __init__(self, config: CaseConfig, base_dir=None):
        self.config = config
        self.mech = parse_mechanism(
            resolve_data_path(config.model_mechanism, base_dir))
        liq_names = list(config.droplet_composition) or ["CH3OH"]
        liq_path = (resolve_data_path(config.model_liquids, base_dir)
                    if config.model_liquids else None)
        self.liquids = parse_liquids(liq_path, names=liq_names)
        self.activity = (MargulesBinary()
                         if config.model_activity == "margules"
                         else IdealSolution())
        self.solid = SolidRegion(
            rho=config.fiber_rho, cp=config.fiber_cp, k=config.fiber_k,
            emissivity=config.fiber_emissivity,
            adiabatic=config.fiber_adiabatic)
        self.mesh = build_axi_mesh(
            config.geometry_radius, config.geometry_height,
            config.fiber_radius, nr=config.geometry_nr,
            nz=config.geometry_nz,
            droplet_diameter=config.droplet_diameter or None,
            geometry=config.geometry_kind)

        x_amb = np.zeros(self.mech.n_species)
        x_amb[self.mech.index["O2"]] = config.ambient_x_o2
        x_amb[self.mech.index["N2"]] = 1.0 - config.ambient_x_o2
        self.omega_ambient = self.mech.mass_fractions_from_mole(x_amb)

        self.vol_idx = [self.mech.index[liq.gas_species]
                        for liq in self.liquids.liquids]
        self.mw_vol = np.array([self.mech.species[i].mw
                                for i in self.vol_idx])
        # property-correlation validity windows for safe evaluation
        self.t_gas_range = (max(s.tlow for s in self.mech.species) + 1.0,
                            min(s.thigh for s in self.mech.species) - 1.0)
        self.t_liq_range = (
            max(l.trange[0] for l in self.liquids.liquids) + 0.5,
            min(l.trange[1] for l in self.liquids.liquids) - 0.5)
        self.anchor = (config.fiber_radius,
                       config.droplet_center_z)
        self.fiber_present = config.fiber_radius > 0.0
        self._omega_l0 = self._liquid_composition_vector()
        self._last_dt = None
        # constant reference liquid density: the marker moves by volume,
        # so every volume<->mass conversion must share one density or
        # advection alone would appear to create and destroy mass
        self.rho_l_ref = float(self.liquids.rho(
            np.array(config.droplet_temperature), self._omega_l0))

    # -- helpers --------------------------------------------------------

    def _liquid_composition_vector(self):
        w = np.array([self.config.droplet_composition.get(n, 0.0)
                      for n in self.liquids.names])
        return w / w.sum()

    def _t_gas(self, T):
        return np.clip(T, *self.t_gas_range)

    def _t_liq(self, T):
        return np.clip(T, *self.t_liq_range)

    def mean_liquid_composition(self, state: State):
        m = state.alpha * self.mesh.vol
        tot = float(m.sum())
        if tot <= 0:
            return self._omega_l0
        w = (state.omega_l * m[None]).sum(axis=(1, 2)) / tot
        s = w.sum()
        return w / s if s > 0 else self._omega_l0

    # -- initialization --------------------------------------------------

    def initialize(self) -> State:
        cfg = self.config
        mesh = self.mesh
        alpha = _sphere_fraction(mesh, 0.5 * cfg.droplet_diameter,
                                 cfg.droplet_center_z)
        alpha[mesh.solid] = 0.0
        shape = (mesh.nr, mesh.nz)
        n_g = self.mech.n_species
        n_l = self.liquids.n
        omega = np.broadcast_to(
            self.omega_ambient[:, None, None], (n_g,) + shape).copy()
        omega_l = np.broadcast_to(
            self._omega_l0[:, None, None], (n_l,) + shape).copy()
        T = np.full(shape, cfg.ambient_temperature)
        T[alpha > 0] = cfg.droplet_temperature
        t_solid = np.full(shape, cfg.ambient_temperature)
        z = np.zeros
        return State(alpha=alpha, ur=z(shape), uz=z(shape),
                     p_rgh=z(shape), phi_r=z((mesh.nr + 1, mesh.nz)),
                     phi_z=z((mesh.nr, mesh.nz + 1)), T=T,
                     t_solid=t_solid, omega=omega, omega_l=omega_l)

    # -- one time step ----------------------------------------------------

    def step(self, state: State, dt_max=None, retries=4):
        """Advance one step; returns (new_state, dt, audit dict).

        A rejected step (species or energy solve out of bounds, VOF
        CFL) is retried with the time step halved; the exception
        propagates only after ``retries`` attempts.
        """
        dt_cap = dt_max
        for attempt in range(retries + 1):
            try:
                return self._step_inner(state, dt_cap)
            except (StepRejected, CflError):
                if attempt == retries:
                    raise
                used = self._last_dt or dt_cap or \
                    self.config.numerics_dt_max
                dt_cap = 0.5 * used
                logger.warning("step %d rejected, retrying with dt=%g",
                               state.step, dt_cap)

    def _step_inner(self, state: State, dt_max=None):
        """One attempted step at a fixed cap; see ``step``.

        Substep order: properties, interface equilibrium + phase-change
        rates, volume-fraction advection, momentum + pressure, species,
        energy (+ radiation, fiber coupling, boiling clamp), chemistry,
        all on the same adaptive time step.
        """
        cfg = self.config
        mesh = self.mesh
        p = cfg.ambient_pressure
        audit = {}
        clk = _time.perf_counter

        # (1) properties ------------------------------------------------
        t0 = clk()
        gp = gas_mixture_properties(
            self._t_gas(state.T), p, np.moveaxis(state.omega, 0, -1),
            self.mech)
        t_l = self._t_liq(state.T)
        wl = np.moveaxis(state.omega_l, 0, -1)
        rho_l = np.full(state.T.shape, self.rho_l_ref)
        cp_l = self.liquids.cp(t_l, wl)
        k_l = self.liquids.k(t_l, wl)
        mu_l = self.liquids.mu(t_l, wl)
        dh_ev = self.liquids.dh_ev(t_l, wl)
        a = state.alpha
        rho = blend(a, rho_l, gp["rho"])
        mu = blend(a, mu_l, gp["mu"])
        k_mix = blend(a, k_l, gp["k"])
        cp_mix = blend(a, cp_l, gp["cp"])
        rho_cp = blend(a, rho_l * cp_l, gp["rho"] * gp["cp"])
        D = np.moveaxis(gp["D"], -1, 0)
        audit["t_properties"] = clk() - t0

        # (2) interface equilibrium + phase-change rates -----------------
        t0 = clk()
        t_boil = bubble_point_temperature(
            p, self.mean_liquid_composition(state), self.liquids,
            self.mech, self.activity)
        band, omega_eff, w_if, psat_if = self._interface_equilibrium(state)
        jga = self._interface_diffusive_fluxes(state, omega_eff, gp, D)
        split = None
        if self.liquids.n > 1:
            x_l = np.moveaxis(state.omega_l, 0, -1)
            split = dict(
                p=p,
                p_sat_i=psat_if,
                x_liq_i=self._liquid_mole_fractions(state),
                mw_i=self.mw_vol[:, None, None],
                mw_mix=self._liquid_mean_mw(state))
        pc = interface_fluxes(
            mesh, a, state.T, jga, w_if, t_boil,
            np.zeros_like(state.T), rho_l, cp_l, dh_ev,
            split_kwargs=split)
        mdot, mdot_i = pc["mdot"], pc["mdot_i"]
        audit["t_phase_change"] = clk() - t0

        # adaptive step size: advective CFL plus a cap on the volume
        # fraction change from phase change
        dt = adaptive_dt(mesh, state.ur, state.uz,
                         dt_max or cfg.numerics_dt_max, cfg.numerics_cfl)
        m_max = float(np.max(np.abs(mdot), initial=0.0))
        if m_max > 0:
            dt = min(dt, cfg.numerics_max_dalpha * float(rho_l.min())
                     / m_max)
        audit["dt"] = dt
        self._last_dt = dt

        liq_mass0 = float((a * rho_l * mesh.vol).sum())

        # (3) volume-fraction advection + phase-change source ------------
        t0 = clk()
        area_r = np.where(mesh.area_r > 0, mesh.area_r, 1.0)
        area_z = np.where(mesh.area_z > 0, mesh.area_z, 1.0)
        alpha_adv, adv_audit = advect(
            mesh, a, state.phi_r / area_r, state.phi_z / area_z, dt,
            step=state.step)
        # an evaporating cell cannot lose more liquid than it holds
        need = -mdot * dt / rho_l
        avail = np.where(need > 0, alpha_adv, np.inf)
        scale_pc = np.where(need > avail, avail / np.where(
            need > 0, need, 1.0), 1.0)
        mdot = mdot * scale_pc
        mdot_i = mdot_i * scale_pc[None]
        alpha_new, dvol_pc = apply_phase_change(mesh, alpha_adv, mdot,
                                                rho_l, dt)
        audit["t_vof"] = clk() - t0

        # (4) momentum + pressure ----------------------------------------
        t0 = clk()
        cont = gas_side_source(
            mesh, mdot * (1.0 / rho_l - 1.0 / gp["rho"]), alpha_new)
        f_r = f_z = None
        if cfg.model_suspension_cm > 0 and self.fiber_present:
            f_r, f_z = suspension_force(mesh, alpha_new, self.anchor,
                                        cfg.model_suspension_cm, rho_l)
        grav = ((0.0, cfg.gravity_z)
                if cfg.gravity_z != 0.0 else None)
        bcs_ur = {"axis": ("fixed", 0.0), "leftSide": ("zero_gradient",),
                  "inlet": ("zero_gradient",),
                  "outlet": ("zero_gradient",)}
        bcs_uz = {"axis": ("symmetry",), "leftSide": ("zero_gradient",),
                  "inlet": ("zero_gradient",),
                  "outlet": ("zero_gradient",)}
        flow, flow_resid = flow_step(
            mesh, FlowState(state.ur, state.uz, state.p_rgh,
                            state.phi_r, state.phi_z),
            rho, mu, dt, continuity_rhs=cont, grav=grav,
            f_r=f_r, f_z=f_z, bcs_ur=bcs_ur, bcs_uz=bcs_uz,
            open_patches=_OPEN_PATCHES, tol=cfg.numerics_outer_tol)
        audit["flow_residual"] = flow_resid
        audit["t_flow"] = clk() - t0

        # (5) species -----------------------------------------------------
        t0 = clk()
        rho_bcs = {k: ("zero_gradient",) for k in default_bcs()}
        # species ride on the gas: gas density on faces keeps the
        # advective divergence consistent with the evaporation source
        rho_g_fr = face_values_r(mesh, gp["rho"], rho_bcs)
        rho_g_fz = face_values_z(mesh, gp["rho"], rho_bcs)
        Fr = flow.phi_r * rho_g_fr
        Fz = flow.phi_z * rho_g_fz
        sw = boundary_apply(mesh, flow.phi_r, flow.phi_z,
                            {i: self.omega_ambient[i]
                             for i in range(self.mech.n_species)})
        bcs_list = [sw[i] for i in range(self.mech.n_species)]
        # vapor injection in the non-conservative (continuity-
        # subtracted) form: s_i = M_i - M * omega_i sums to zero, so
        # the mixture stays normalized while the composition shifts
        # toward the injected vapor
        sources = (-mdot_i_to_gas(mdot_i, self.vol_idx,
                                  self.mech.n_species)
                   + mdot[None] * omega_eff)
        active_g = mesh.fluid & (alpha_new < 1.0 - EPS_MIXED)
        omega_new = solve_gas_species(
            mesh, omega_eff, gp["rho"], Fr, Fz, self._t_gas(state.T), p,
            self.mech, D, dt, bcs_list, sources=sources, active=active_g)
        # liquid-core cells carry the interface-equilibrium composition
        deep = band & (alpha_new >= 0.5)
        omega_new[:, deep] = omega_eff[:, deep]
        omega_l_new, liq_budget = solve_liquid_species(
            mesh, state.omega_l, alpha_adv, rho_l, mdot_i, dt)
        audit["t_species"] = clk() - t0

        # (6) energy + radiation + fiber + boiling clamp ------------------
        t0 = clk()
        cp_fr = face_values_r(mesh, cp_mix, rho_bcs)
        cp_fz = face_values_z(mesh, cp_mix, rho_bcs)
        # energy advects the blended mixture
        Fr_m = flow.phi_r * face_values_r(mesh, rho, rho_bcs)
        Fz_m = flow.phi_z * face_values_z(mesh, rho, rho_bcs)
        q = mdot * dh_ev                          # evaporative cooling
        if cfg.model_radiation:
            x_gas = self.mech.mole_fractions(
                np.moveaxis(omega_new, 0, -1))
            q = q - (1.0 - alpha_new) * radiative_sink(
                self._t_gas(state.T), p, x_gas, self.mech,
                cfg.ambient_temperature,
                domain_size=max(cfg.geometry_radius,
                                cfg.geometry_height))
        if cfg.model_chemistry:
            jr_full, jz_full = diffusion_flux(
                mesh, omega_new, self._t_gas(state.T), p, self.mech, D,
                bcs_list[0])
            cp_i = np.stack([s.cp_mass(self._t_gas(state.T))
                             for s in self.mech.species])
            q = q + enthalpy_flux_source(mesh, state.T, jr_full,
                                         jz_full, cp_i, rho_bcs)
        t_bcs = boundary_apply(mesh, flow.phi_r, flow.phi_z,
                               {"T": cfg.ambient_temperature})["T"]
        T_new, t_solid_new, mismatch = self._energy_with_fiber(
            state, alpha_new, rho_cp, k_mix, Fr_m * cp_fr, Fz_m * cp_fz,
            q, dt, t_bcs)
        audit["conjugate_mismatch"] = mismatch
        # boiling clamp: excess sensible heat above the bubble point
        # becomes vapor at the interface
        alpha_pre_boil = alpha_new
        alpha_new, T_new, m_boil, dvol_boil = boiling_clamp(
            mesh, alpha_new, T_new, t_boil, rho_cp, rho_l, dh_ev, dt)
        m_boil_i = self._split_boiling(m_boil, state, psat_if)
        if np.any(m_boil):
            omega_new = _deposit_vapor(
                mesh, omega_new, alpha_new, gp["rho"],
                mdot_i_to_gas(m_boil_i, self.vol_idx,
                              self.mech.n_species), dt)
            omega_l_new, b2 = solve_liquid_species(
                mesh, omega_l_new, alpha_pre_boil, rho_l, m_boil_i, dt)
            liq_budget = liq_budget + b2
        audit["t_energy"] = clk() - t0

        # (7) chemistry in pure-gas cells ---------------------------------
        t0 = clk()
        if cfg.spark_enabled and (cfg.spark_time_on <= state.time
                                  < cfg.spark_time_off):
            T_new = spark_patch(mesh, T_new, cfg.spark_center_r,
                                cfg.spark_center_z, cfg.spark_diameter,
                                cfg.spark_temperature)
        if cfg.model_chemistry:
            gas_cells = mesh.fluid & (alpha_new <= EPS_MIXED)
            T_new, om = reaction_substep(
                self.mech, T_new, p, np.moveaxis(omega_new, 0, -1), dt,
                gas_cells)
            omega_new = np.moveaxis(om, -1, 0)
        audit["t_chemistry"] = clk() - t0

        # (8) bookkeeping ---------------------------------------------------
        liq_mass1 = float((alpha_new * rho_l * mesh.vol).sum())
        transferred = float(((mdot + m_boil) * mesh.vol).sum()) * dt
        advected = adv_audit["boundary_liquid_volume"] * float(rho_l.max())
        scale = max(liq_mass0, 1e-300)
        audit["mass_closure"] = abs(liq_mass1 - liq_mass0 - transferred
                                    - advected) / scale
        audit["liquid_gas_transfer_mismatch"] = abs(
            transferred + float(np.sum(
                -(mdot_i + m_boil_i) * mesh.vol)) * dt) / scale
        audit["omega_drift"] = float(np.max(np.abs(
            omega_new.sum(axis=0)[mesh.fluid & (alpha_new < 0.99)]
            - 1.0), initial=0.0))
        audit["liquid_volume"] = liquid_volume(mesh, alpha_new)

        new = State(alpha=alpha_new, ur=flow.ur, uz=flow.uz,
                    p_rgh=flow.p_rgh, phi_r=flow.phi_r,
                    phi_z=flow.phi_z, T=T_new, t_solid=t_solid_new,
                    omega=omega_new, omega_l=omega_l_new,
                    time=state.time + dt, step=state.step + 1)
        return new, dt, audit

    # -- substep internals -------------------------------------------------

    def _interface_equilibrium(self, state: State):
        """Equilibrium gas composition in the interface band.

        Returns (band mask, omega with band cells replaced by the
        equilibrium composition, volatile interface mass fractions
        (n_liq, nr, nz), volatile saturation pressures at cell T).
        """
        mesh = self.mesh
        a = state.alpha
        liquidish = (a > EPS_MIXED) & mesh.fluid
        near_gas = np.zeros_like(liquidish)
        gasish = (a < 1.0 - EPS_MIXED)
        near_gas[:-1] |= gasish[1:]
        near_gas[1:] |= gasish[:-1]
        near_gas[:, :-1] |= gasish[:, 1:]
        near_gas[:, 1:] |= gasish[:, :-1]
        band = liquidish & (near_gas | gasish)

        omega_eff = state.omega.copy()
        w_if = np.zeros((self.liquids.n,) + a.shape)
        psat = np.zeros((self.liquids.n,) + a.shape)
        t_l = self._t_liq(state.T)
        for i, j in zip(*np.nonzero(band)):
            eq = equilibrium_gas_composition(
                float(t_l[i, j]), self.config.ambient_pressure,
                state.omega_l[:, i, j], self.liquids, self.mech,
                self.activity, ambient_omega=state.omega[:, i, j])
            omega_eff[:, i, j] = eq["omega"]
            w_if[:, i, j] = eq["omega"][self.vol_idx]
            psat[:, i, j] = [liq.p_sat(float(t_l[i, j]))
                             for liq in self.liquids.liquids]
        return band, omega_eff, w_if, psat

    def _interface_diffusive_fluxes(self, state, omega_eff, gp, D):
        """j_i . grad(alpha) for each volatile species [kg/(m^3 s)]."""
        mesh = self.mesh
        bcs = default_bcs()
        gar, gaz = smoothed_alpha_gradient(mesh, state.alpha)
        x = self.mech.mole_fractions(np.moveaxis(omega_eff, 0, -1))
        mw_mix = self.mech.mean_mw(np.moveaxis(omega_eff, 0, -1))
        out = np.zeros((self.liquids.n,) + state.alpha.shape)
        for n, idx in enumerate(self.vol_idx):
            gr, gz = gradient(mesh, x[..., idx], bcs)
            coef = -gp["rho"] * D[idx] * self.mech.species[idx].mw / mw_mix
            out[n] = coef * (gr * gar + gz * gaz)
        return out

    def _liquid_mole_fractions(self, state):
        mw_l = np.array([m for m in self.mw_vol])
        n = state.omega_l / mw_l[:, None, None]
        s = n.sum(axis=0)
        return n / np.where(s > 0, s, 1.0)

    def _liquid_mean_mw(self, state):
        x = self._liquid_mole_fractions(state)
        return (x * self.mw_vol[:, None, None]).sum(axis=0)

    def _split_boiling(self, m_boil, state, psat_if):
        """Per-species split of a boiling rate field."""
        if self.liquids.n == 1:
            return m_boil[None]
        from .phase_change import boiling_species_split
        return boiling_species_split(
            m_boil, self.config.ambient_pressure, psat_if,
            self._liquid_mole_fractions(state),
            self.mw_vol[:, None, None], self._liquid_mean_mw(state))

    def _energy_with_fiber(self, state, alpha, rho_cp, k_mix, Fr_cp,
                           Fz_cp, q, dt, t_bcs):
        """Fluid energy step, conjugately coupled to the fiber when one
        is present and not adiabatic. Returns (T, t_solid, mismatch)."""
        mesh = self.mesh
        cfg = self.config
        if not self.fiber_present or self.solid.adiabatic:
            T_new = solve_energy(mesh, state.T, rho_cp, k_mix, Fr_cp,
                                 Fz_cp, q, dt, t_bcs, active=mesh.fluid)
            return T_new, state.t_solid.copy(), 0.0

        q_rad_solid = None
        if cfg.model_radiation:
            fr, fz = mesh.fiber_faces()
            q_rad_solid = np.zeros(mesh.vol.shape)
            flux = solid_surface_radiation(state.t_solid,
                                           cfg.ambient_temperature,
                                           self.solid.emissivity)
            # charge each solid surface cell with its face share
            for (i, j) in zip(*np.nonzero(fr[1:-1])):
                cell = (i, j) if mesh.solid[i, j] else (i + 1, j)
                q_rad_solid[cell] += (flux[cell] * mesh.area_r[i + 1, j]
                                      / mesh.vol[cell])
            for (i, j) in zip(*np.nonzero(fz[:, 1:-1])):
                cell = (i, j) if mesh.solid[i, j] else (i, j + 1)
                q_rad_solid[cell] += (flux[cell] * mesh.area_z[i, j + 1]
                                      / mesh.vol[cell])

        t_if = None
        T_new, ts_new = state.T, state.t_solid
        mismatch = np.inf
        scale = max(float(np.max(np.abs(state.T))), 1.0) * self.solid.k
        for it in range(50):
            cb = coupled_boundary(mesh, T_new, ts_new, k_mix, self.solid,
                                  relax=0.7 if it else 1.0,
                                  t_if_prev=t_if)
            t_if = {"t_if_r": cb["t_if_r"], "t_if_z": cb["t_if_z"]}
            T_new = solve_energy(
                mesh, state.T, rho_cp, k_mix, Fr_cp, Fz_cp, q, dt,
                t_bcs, active=mesh.fluid,
                iface_r=cb["t_if_r"], iface_z=cb["t_if_z"])
            ts_new = solve_solid_temperature(
                mesh, state.t_solid, self.solid, dt,
                iface_r=cb["t_if_r"], iface_z=cb["t_if_z"],
                q_rad=q_rad_solid)
            mismatch = cb["mismatch"] / scale
            if mismatch < self.config.numerics_conjugate_tol:
                break
        return T_new, ts_new, mismatch


def gas_side_source(mesh, src, alpha, sweeps=6):
    """Move a volumetric source [1/s or kg/(m^3 s)] out of liquid-rich
    cells onto gas-side neighbors, preserving the volume integral.

    The marker advection treats cells with alpha >= 0.5 as liquid and
    compensates any velocity divergence it sees there, so the
    phase-change expansion must act in cells treated as gas or it would
    be folded back into the liquid volume.
    """
    sv = np.asarray(src, dtype=float) * mesh.vol
    gas_ok = (~mesh.solid) & (np.asarray(alpha) < 0.5)
    liquid_rich = (~mesh.solid) & (np.asarray(alpha) >= 0.5)
    nbrs = ((1, 0), (-1, 0), (0, 1), (0, -1))
    for _ in range(sweeps):
        move = np.where(liquid_rich, sv, 0.0)
        if not np.any(move != 0.0):
            break
        valid = {e: _roll_masked(gas_ok.astype(float), -e[0], -e[1])
                 for e in nbrs}
        count = sum(valid.values())
        # cells with no gas neighbor push toward any fluid neighbor so
        # the source percolates outward over the sweeps
        fallback = {e: _roll_masked((~mesh.solid).astype(float),
                                    -e[0], -e[1]) for e in nbrs}
        count_fb = sum(fallback.values())
        use_fb = count == 0
        cnt = np.where(use_fb, count_fb, count)
        movable = cnt > 0
        out_v = np.where(movable, move, 0.0)
        sv = sv - out_v
        share = out_v / np.maximum(cnt, 1.0)
        for e in nbrs:
            w = np.where(use_fb, fallback[e], valid[e])
            sv = sv + _roll_masked(share * w, e[0], e[1])
    return sv / mesh.vol


def mdot_i_to_gas(mdot_i, vol_idx, n_gas):
    """Scatter per-volatile rates onto the full gas species axis."""
    out = np.zeros((n_gas,) + mdot_i.shape[1:])
    for n, idx in enumerate(vol_idx):
        out[idx] += mdot_i[n]
    return out


def boiling_clamp(mesh, alpha, T, t_boil, rho_cp, rho_liq, dh_ev, dt,
                  bcs=None):
    """Clamp liquid-bearing cells to the bubble point and convert the
    excess sensible heat into vapor.

    Returns (alpha, T, mdot_boil [kg/(m^3 s), negative], liquid volume
    change). The rate is deposited on interface cells when any exist,
    otherwise in place (a heated block with no free surface boils
    where it is heated)."""
    alpha = np.asarray(alpha, dtype=float)
    exceed = (alpha > EPS_MIXED) & (T > t_boil) & mesh.fluid
    if not exceed.any():
        return alpha, T, np.zeros(alpha.shape), 0.0
    dTdt = np.where(exceed, (T - t_boil) / dt, 0.0)
    m_bulk = -rho_cp * dTdt / dh_ev * exceed
    T_new = np.where(exceed, t_boil, T)
    m_if, unassigned = redistribute_to_interface(mesh, m_bulk, alpha, bcs)
    if unassigned != 0.0:
        m_if = m_bulk
    # never vaporize more than a cell holds
    need = -m_if * dt / np.asarray(rho_liq, dtype=float)
    m_if = np.where(need > alpha, -alpha * rho_liq / dt, m_if)
    alpha_new, dvol = apply_phase_change(mesh, alpha, m_if, rho_liq, dt)
    return alpha_new, T_new, m_if, dvol


def _deposit_vapor(mesh, omega, alpha, rho_g, source_i, dt):
    """Explicitly mix a vapor mass source [kg/(m^3 s)] into the gas
    composition of the receiving cells."""
    m_gas = np.maximum(rho_g * (1.0 - alpha) * mesh.vol, 1e-300)
    m_i = omega * m_gas[None] + source_i * mesh.vol[None] * dt
    tot = m_i.sum(axis=0)
    return np.where(tot[None] > 0, m_i / np.where(tot > 0, tot, 1.0)[None],
                    omega)


def _sphere_fraction(mesh, radius, center_z, sub=8):
    """Cell volume fractions of a sphere centred on the axis (droplet
    tangent geometry): midpoint subsampling, radius-weighted for
    axisymmetric meshes."""
    frac = np.zeros((mesh.nr, mesh.nz))
    # bounding box of affected cells
    for i in range(mesh.nr):
        if mesh.rf[i] > radius:
            continue
        for j in range(mesh.nz):
            if (mesh.zf[j] > center_z + radius
                    or mesh.zf[j + 1] < center_z - radius):
                continue
            rs = mesh.rf[i] + (np.arange(sub) + 0.5) / sub * mesh.dr[i]
            zs = mesh.zf[j] + (np.arange(sub) + 0.5) / sub * mesh.dz[j]
            R, Z = np.meshgrid(rs, zs, indexing="ij")
            inside = (R ** 2 + (Z - center_z) ** 2) <= radius ** 2
            if mesh.geometry == "axisymmetric":
                w = R
            else:
                w = np.ones_like(R)
            frac[i, j] = float((inside * w).sum() / w.sum())
    return frac


# ----------------------------------------------------------------------
# run orchestration, output, and the reduced modes
# ----------------------------------------------------------------------

def run(config: CaseConfig, state: State | None = None, end_time=None,
        base_dir=None, max_steps=None) -> dict:
    """Execute a case to completion; returns the exit report."""
    if config.run_mode == "reactor0d":
        return run_reactor0d(config, base_dir=base_dir)
    if config.run_mode == "film":
        return run_film(config, base_dir=base_dir)
    return run_droplet(config, state=state, end_time=end_time,
                       base_dir=base_dir, max_steps=max_steps)


def run_droplet(config: CaseConfig, state=None, end_time=None,
                base_dir=None, max_steps=None) -> dict:
    sim = Simulation(config, base_dir=base_dir)
    out_dir = config.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    if state is None:
        if config.run_restart:
            state = load_checkpoint(config.run_restart)
        else:
            state = sim.initialize()
    end_time = end_time if end_time is not None else config.run_end_time

    series = diagnostics.TimeSeries()
    audit_rows = []
    wall0 = _time.perf_counter()
    next_output = (np.floor(state.time / config.output_interval) + 1) \
        * config.output_interval
    _write_frame(sim, state, out_dir)
    _append_series(sim, state, series)
    report = {"status": "completed", "reason": "", "exit_code": EXIT_OK}

    while state.time < end_time - 1e-15:
        if max_steps is not None and state.step >= max_steps:
            report.update(status="step_limit",
                          reason=f"reached max_steps={max_steps}")
            break
        try:
            state_new, dt, audit = sim.step(
                state, dt_max=min(config.numerics_dt_max,
                                  end_time - state.time))
        except (StepRejected, OuterIterationError, CflError,
                RuntimeError) as exc:
            ck = out_dir / "abort.npz"
            save_checkpoint(ck, state)
            report.update(status="numerical_abort",
                          reason=f"{type(exc).__name__}: {exc}",
                          exit_code=EXIT_NUMERICAL,
                          checkpoint=str(ck))
            logger.error("numerical abort at t=%.6g s step %d: %s",
                         state.time, state.step, exc)
            break
        state = state_new
        audit_rows.append({"step": state.step, "time": state.time,
                           **audit})
        if state.time + 1e-15 >= next_output:
            _write_frame(sim, state, out_dir)
            _append_series(sim, state, series)
            save_checkpoint(out_dir / "latest.npz", state)
            next_output += config.output_interval
        if audit["liquid_volume"] <= 1e-6 * sim.mesh.vol.min():
            report.update(status="liquid_exhausted",
                          reason="all liquid evaporated")
            break

    _write_frame(sim, state, out_dir)
    _append_series(sim, state, series)
    series.write(out_dir / "timeseries.csv")
    _write_audit(out_dir / "audit.csv", audit_rows)
    save_checkpoint(out_dir / "final.npz", state)
    report.update(time=state.time, step=state.step,
                  wall_time=_time.perf_counter() - wall0,
                  output_dir=str(out_dir),
                  liquid_volume=liquid_volume(sim.mesh, state.alpha))
    if audit_rows:
        report["max_mass_closure"] = max(r["mass_closure"]
                                         for r in audit_rows)
    return report


def _write_frame(sim: Simulation, state: State, out_dir: Path):
    mesh = sim.mesh
    T_merged = np.where(mesh.solid, state.t_solid, state.T)
    fields = {"alpha": state.alpha, "T": T_merged,
              "p_rgh": state.p_rgh, "ur": state.ur, "uz": state.uz}
    for i, name in enumerate(sim.mech.names):
        fields[f"omega_{name}"] = state.omega[i]
    try:
        fields["Z"] = _mixture_fraction_field(sim, state)[0]
    except ValueError:
        pass
    mesh.dump_vtk(out_dir / f"frame_{state.step:07d}.vtk", fields)


def _mixture_fraction_field(sim, state):
    """(Z field, Z_st). The fuel-stream coupling constant is sampled
    from the interface-cell mean composition at the current time."""
    beta = diagnostics.bilger_beta_from_composition(
        np.moveaxis(state.omega, 0, -1), sim.mech)
    beta_ox = diagnostics.bilger_beta_from_composition(
        sim.omega_ambient, sim.mech)
    mixed = (state.alpha > EPS_MIXED) & (state.alpha < 1 - EPS_MIXED)
    if mixed.any():
        beta_fuel = float(beta[mixed].mean())
    else:
        fuel = np.zeros(sim.mech.n_species)
        for n, idx in enumerate(sim.vol_idx):
            fuel[idx] = sim._omega_l0[n]
        beta_fuel = diagnostics.bilger_beta_from_composition(fuel,
                                                             sim.mech)
    if beta_fuel == beta_ox:
        raise ValueError("degenerate fuel/oxidizer streams")
    return (diagnostics.mixture_fraction(beta, beta_fuel, beta_ox),
            diagnostics.stoichiometric_Z(beta_fuel, beta_ox))


def _append_series(sim, state, series):
    mesh = sim.mesh
    try:
        Z, z_st = _mixture_fraction_field(sim, state)
        geo = diagnostics.flame_and_droplet_geometry(
            mesh, Z, z_st, state.alpha,
            D0=sim.config.droplet_diameter)
    except ValueError:
        return
    iw = sim.liquids.names.index("H2O") if "H2O" in sim.liquids.names \
        else None
    m = state.alpha * mesh.vol
    wl_water = (float((state.omega_l[iw] * m).sum() / m.sum())
                if iw is not None and m.sum() > 0 else 0.0)
    series.append(t=state.time, D_dr=geo["D_dr"], DD0_sq=geo["DD0_sq"],
                  T_max=float(state.T[mesh.fluid].max()),
                  D_fl=geo["D_fl"] if geo["D_fl"] is not None else 0.0,
                  standoff=geo["standoff"] if geo["standoff"] is not None
                  else 0.0, omega_l_water=wl_water)


def _write_audit(path, rows):
    if not rows:
        return
    keys = sorted({k for r in rows for k in r},
                  key=lambda k: (k not in ("step", "time"), k))
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=keys)
        w.writeheader()
        w.writerows(rows)


# ----------------------------------------------------------------------
# film mode: 1D evaporating film
# ----------------------------------------------------------------------

def run_film(config: CaseConfig, base_dir=None) -> dict:
    """Steady 1D Stefan film: liquid surface at z=0 held at the film
    temperature, ambient gas at z=delta. Iterates the evaporation rate
    until the surface flux balance converges, then reports the
    per-area rate and everything needed for the analytic comparison
    m'' = (rho D / delta) ln(1 + B_M)."""
    mech = parse_mechanism(resolve_data_path(config.model_mechanism,
                                             base_dir))
    liq_names = list(config.droplet_composition) or ["CH3OH"]
    liquids = parse_liquids(names=liq_names)
    T = config.film_temperature
    p = config.ambient_pressure
    x_amb = np.zeros(mech.n_species)
    x_amb[mech.index["O2"]] = config.ambient_x_o2
    x_amb[mech.index["N2"]] = 1.0 - config.ambient_x_o2
    omega_amb = mech.mass_fractions_from_mole(x_amb)
    if config.droplet_composition:
        omega_l = np.array([config.droplet_composition.get(n, 0.0)
                            for n in liquids.names])
    else:
        omega_l = np.ones(liquids.n)
    omega_l = omega_l / omega_l.sum()
    eq = equilibrium_gas_composition(T, p, omega_l, liquids, mech,
                                     ambient_omega=omega_amb)
    idx = mech.index[liquids.liquids[0].gas_species]
    w_s = float(eq["omega"][idx])
    w_inf = float(omega_amb[idx])

    nz = config.film_cells
    delta = config.film_thickness
    mesh = build_axi_mesh(2.0, delta, 0.0, nr=2, nz=nz,
                          geometry="planar")
    rho = float(mech.density(T, p, omega_amb))
    D = float(mech.species[idx].diff(T, p))

    from .operators import assemble_fv
    from scipy.sparse.linalg import spsolve

    bcs = {"axis": ("zero_gradient",), "leftSide": ("zero_gradient",),
           "inlet": ("fixed", w_s), "outlet": ("fixed", w_inf)}
    m_area = 0.0
    w = np.full((mesh.nr, mesh.nz), w_inf)
    for it in range(200):
        Fz = np.full((mesh.nr, mesh.nz + 1), m_area) * mesh.area_z
        Fr = np.zeros((mesh.nr + 1, mesh.nz))
        A, b, _ = assemble_fv(mesh, Fr=Fr, Fz=Fz,
                              gamma=np.full(w.shape, rho * D), bcs=bcs,
                              rhs=np.zeros(w.shape))
        w = spsolve(A.tocsc(), b).reshape(w.shape)
        # one-sided diffusive flux at the surface (half-cell spacing)
        j_s = -rho * D * (w[0, 0] - w_s) / (0.5 * mesh.dz[0])
        m_new = j_s / (1.0 - w_s)
        if abs(m_new - m_area) < 1e-12 * max(abs(m_new), 1e-30):
            m_area = m_new
            break
        m_area = m_new
    b_m = (w_s - w_inf) / (1.0 - w_s)
    return {"status": "completed", "exit_code": EXIT_OK,
            "m_area": m_area, "rho": rho, "D": D, "delta": delta,
            "omega_surface": w_s, "omega_ambient": w_inf, "B_M": b_m,
            "m_area_analytic": rho * D / delta * np.log1p(b_m),
            "iterations": it + 1}


# ----------------------------------------------------------------------
# reactor mode: 0D constant-pressure adiabatic ignition
# ----------------------------------------------------------------------

def run_reactor0d(config: CaseConfig, base_dir=None) -> dict:
    mech = parse_mechanism(resolve_data_path(config.model_mechanism,
                                             base_dir))
    omega0 = stoichiometric_mixture(mech,
                                    x_o2_ambient=config.ambient_x_o2)
    out = integrate_reactor(mech, config.reactor_t0,
                            config.ambient_pressure, omega0,
                            config.reactor_end_time)
    delay = ignition_delay(mech, config.reactor_t0,
                           config.ambient_pressure, omega0,
                           config.reactor_end_time)
    out_dir = config.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "reactor.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "T"] + list(mech.names))
        for n in range(len(out["t"])):
            w.writerow([out["t"][n], out["T"][n]]
                       + list(out["omega"][n]))
    return {"status": "completed", "exit_code": EXIT_OK,
            "ignition_delay": delay, "t_final": float(out["t"][-1]),
            "T_final": float(out["T"][-1]),
            "output_dir": str(out_dir)}
