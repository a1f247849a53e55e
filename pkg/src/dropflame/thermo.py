"""Gas-phase mechanism: species thermo (7-coefficient polynomials over two
temperature ranges), simple power-law transport fits, and Arrhenius
reactions with optional explicit orders and third bodies.

Mechanism file format (plain text, '#' comments)::

    ELEMENTS C H O N
    SPECIES CH3OH
      mw 0.03204             # kg/mol
      composition C:1 H:4 O:1
      tswitch 1000.0         # K; tlow/thigh bound the validity range
      trange 250.0 3500.0
      thermo_lo a1 a2 a3 a4 a5 a6 a7
      thermo_hi a1 a2 a3 a4 a5 a6 a7
      transport mu_ref=... n_mu=... k_ref=... n_k=... d_ref=... n_d=...
    END
    REACTION CH3OH + 1.5 O2 => CO + 2 H2O
      arrhenius A=1.01e8 b=0.0 Ea=1.2552e5    # mol, m3, s, J/mol
      order CH3OH:0.25 O2:1.5                  # optional
      thirdbody H2O:6.0 CO2:2.0                # optional, makes rate ~ [M]
    END

Every reaction must balance each element exactly; the parser rejects
files that do not.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .constants import R_GAS, T_REF

logger = logging.getLogger(__name__)

T_TRANSPORT_REF = 300.0  # K, reference for the power-law transport fits


class MechanismError(ValueError):
    """Raised on mechanism-file format or consistency errors."""

    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


@dataclass
class Species:
    name: str
    mw: float                       # kg/mol
    composition: dict               # element -> atom count
    tswitch: float
    tlow: float
    thigh: float
    a_lo: np.ndarray                # 7 coefficients, T < tswitch
    a_hi: np.ndarray
    transport: dict                 # mu_ref, n_mu, k_ref, n_k, d_ref, n_d

    def _coef(self, T):
        return np.where(np.asarray(T)[..., None] < self.tswitch,
                        self.a_lo, self.a_hi)

    def cp_mole(self, T):
        """Cp [J/(mol K)]."""
        T = np.asarray(T, dtype=float)
        a = self._coef(T)
        tp = np.stack([np.ones_like(T), T, T**2, T**3, T**4], axis=-1)
        return R_GAS * np.einsum("...i,...i->...", a[..., :5], tp)

    def h_mole(self, T):
        """Enthalpy [J/mol] including formation enthalpy."""
        T = np.asarray(T, dtype=float)
        a = self._coef(T)
        tp = np.stack([T, T**2 / 2, T**3 / 3, T**4 / 4, T**5 / 5],
                      axis=-1)
        return R_GAS * (np.einsum("...i,...i->...", a[..., :5], tp)
                        + a[..., 5])

    def cp_mass(self, T):
        return self.cp_mole(T) / self.mw

    def h_mass(self, T):
        return self.h_mole(T) / self.mw

    def mu(self, T):
        t = self.transport
        return t["mu_ref"] * (np.asarray(T) / T_TRANSPORT_REF) ** t["n_mu"]

    def k(self, T):
        t = self.transport
        return t["k_ref"] * (np.asarray(T) / T_TRANSPORT_REF) ** t["n_k"]

    def diff(self, T, p):
        """Binary-ish diffusivity into the bath [m^2/s]."""
        t = self.transport
        return (t["d_ref"] * (np.asarray(T) / T_TRANSPORT_REF) ** t["n_d"]
                * (1e5 / p))


@dataclass
class Reaction:
    equation: str
    nu: dict                        # species -> signed stoichiometry
    A: float
    b: float
    Ea: float                       # J/mol
    orders: dict = field(default_factory=dict)   # species -> order
    third_body: dict | None = None  # enhancement factors (default 1.0)

    def rate_constant(self, T):
        return self.A * np.asarray(T) ** self.b * np.exp(
            -self.Ea / (R_GAS * np.asarray(T)))


@dataclass
class GasMechanism:
    elements: list
    species: list                   # list[Species], file order
    reactions: list

    index: dict = field(init=False)
    mw: np.ndarray = field(init=False)

    def __post_init__(self):
        self.index = {s.name: k for k, s in enumerate(self.species)}
        self.mw = np.array([s.mw for s in self.species])

    @property
    def names(self):
        return [s.name for s in self.species]

    @property
    def n_species(self):
        return len(self.species)

    def __getitem__(self, name) -> Species:
        return self.species[self.index[name]]

    # -- mixture-level helpers (omega: (..., n_species) mass fractions)

    def mean_mw(self, omega):
        omega = np.asarray(omega)
        return 1.0 / np.einsum("...i,i->...", omega, 1.0 / self.mw)

    def mole_fractions(self, omega):
        omega = np.asarray(omega)
        x = omega / self.mw
        return x / x.sum(axis=-1, keepdims=True)

    def mass_fractions_from_mole(self, x):
        x = np.asarray(x)
        w = x * self.mw
        return w / w.sum(axis=-1, keepdims=True)

    def density(self, T, p, omega):
        return np.asarray(p) * self.mean_mw(omega) / (R_GAS * np.asarray(T))

    def cp_mass(self, T, omega):
        cps = np.stack([s.cp_mass(T) for s in self.species], axis=-1)
        return np.einsum("...i,...i->...", np.asarray(omega), cps)

    def h_mass(self, T, omega):
        hs = np.stack([s.h_mass(T) for s in self.species], axis=-1)
        return np.einsum("...i,...i->...", np.asarray(omega), hs)

    def element_mass_fractions(self, omega, element):
        """Mass fraction of one element in the mixture."""
        mw_el = _ELEMENT_MW.get(element)
        if mw_el is None:
            raise MechanismError(f"no atomic mass for element {element}")
        omega = np.asarray(omega)
        w = np.array([s.composition.get(element, 0) * mw_el / s.mw
                      for s in self.species])
        return np.einsum("...i,i->...", omega, w)

    def validate(self):
        """Check element balance of every reaction and thermo continuity."""
        for rxn in self.reactions:
            for el in self.elements:
                bal = sum(nu * self[name].composition.get(el, 0)
                          for name, nu in rxn.nu.items())
                if abs(bal) > 1e-10:
                    raise MechanismError(
                        f"reaction '{rxn.equation}' unbalanced in {el} "
                        f"({bal:+g})")
        for s in self.species:
            c_lo = np.polyval(s.a_lo[:5][::-1], s.tswitch)
            c_hi = np.polyval(s.a_hi[:5][::-1], s.tswitch)
            if abs(c_lo - c_hi) > 1e-4 * abs(c_hi):
                raise MechanismError(
                    f"species {s.name}: Cp jump at tswitch "
                    f"({c_lo:.6g} vs {c_hi:.6g})")
        return self


# standard atomic masses, kg/mol; X is the placeholder element of the toy
# mechanism
_ELEMENT_MW = {"C": 12.011e-3, "H": 1.008e-3, "O": 15.999e-3,
               "N": 14.007e-3, "AR": 39.948e-3, "X": 28.0e-3}


def element_mw(element):
    return _ELEMENT_MW[element]


# ---------------------------------------------------------------------
# parsing

_STOICH_RE = re.compile(r"^\s*(?:(\d+\.?\d*|\.\d+)\s+)?(\S+)\s*$")


def _parse_side(side, line_no):
    out = {}
    for term in side.split("+"):
        term = term.strip()
        if term == "M":
            out["M"] = out.get("M", 0) + 1
            continue
        m = _STOICH_RE.match(term)
        if not m:
            raise MechanismError(f"cannot parse stoichiometry term {term!r}",
                                 line_no)
        coef = float(m.group(1)) if m.group(1) else 1.0
        out[m.group(2)] = out.get(m.group(2), 0.0) + coef
    return out


def _parse_kv(tokens, line_no, cast=float):
    out = {}
    for tok in tokens:
        if ":" in tok:
            k, v = tok.split(":", 1)
        elif "=" in tok:
            k, v = tok.split("=", 1)
        else:
            raise MechanismError(f"expected key:value, got {tok!r}", line_no)
        out[k] = cast(v)
    return out


def parse_mechanism(path) -> GasMechanism:
    """Parse and validate a mechanism file."""
    elements, species, reactions = [], [], []
    cur = None        # ("species", dict) or ("reaction", dict)
    with open(path) as f:
        lines = f.readlines()
    for ln, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].upper()
        try:
            if key == "ELEMENTS":
                elements = tok[1:]
            elif key == "SPECIES":
                if cur is not None:
                    raise MechanismError("nested block", ln)
                cur = ("species", {"name": tok[1], "_line": ln})
            elif key == "REACTION":
                if cur is not None:
                    raise MechanismError("nested block", ln)
                eq = line[len("REACTION"):].strip()
                if "=>" not in eq:
                    raise MechanismError("reaction needs '=>'", ln)
                lhs, rhs = eq.split("=>")
                nu = {}
                third = None
                l_side = _parse_side(lhs, ln)
                r_side = _parse_side(rhs, ln)
                if "M" in l_side or "M" in r_side:
                    if l_side.pop("M", 0) != r_side.pop("M", 0):
                        raise MechanismError("unbalanced third body M", ln)
                    third = {}
                for n, c in l_side.items():
                    nu[n] = nu.get(n, 0.0) - c
                for n, c in r_side.items():
                    nu[n] = nu.get(n, 0.0) + c
                cur = ("reaction", {"equation": eq, "nu": nu,
                                    "reactants": l_side, "third": third,
                                    "_line": ln})
            elif key == "END":
                if cur is None:
                    raise MechanismError("END outside block", ln)
                kind, d = cur
                if kind == "species":
                    for req in ("mw", "composition", "thermo_lo",
                                "thermo_hi"):
                        if req not in d:
                            raise MechanismError(
                                f"species {d['name']} missing '{req}'",
                                d["_line"])
                    tr = d.get("transport", {})
                    tr = {k.lower(): v for k, v in tr.items()}
                    for req in ("mu_ref", "n_mu", "k_ref", "n_k", "d_ref",
                                "n_d"):
                        tr.setdefault(req, {"mu_ref": 1.8e-5, "n_mu": 0.7,
                                            "k_ref": 0.025, "n_k": 0.85,
                                            "d_ref": 2.0e-5,
                                            "n_d": 1.7}[req])
                    species.append(Species(
                        name=d["name"], mw=d["mw"],
                        composition=d["composition"],
                        tswitch=d.get("tswitch", 1000.0),
                        tlow=d.get("trange", (200.0, 3500.0))[0],
                        thigh=d.get("trange", (200.0, 3500.0))[1],
                        a_lo=np.asarray(d["thermo_lo"]),
                        a_hi=np.asarray(d["thermo_hi"]),
                        transport=tr))
                else:
                    if "arrhenius" not in d:
                        raise MechanismError(
                            f"reaction '{d['equation']}' missing arrhenius",
                            d["_line"])
                    arr = d["arrhenius"]
                    orders = d.get("order")
                    if orders is None:
                        orders = {n: c for n, c in d["reactants"].items()}
                    reactions.append(Reaction(
                        equation=d["equation"], nu=d["nu"],
                        A=arr["A"], b=arr.get("b", 0.0),
                        Ea=arr.get("Ea", 0.0), orders=orders,
                        third_body=(d.get("thirdbody", {})
                                    if d["third"] is not None else None)))
                cur = None
            elif cur is not None:
                kind, d = cur
                sub = tok[0].lower()
                if sub == "mw":
                    d["mw"] = float(tok[1])
                elif sub == "composition":
                    d["composition"] = _parse_kv(tok[1:], ln)
                elif sub == "tswitch":
                    d["tswitch"] = float(tok[1])
                elif sub == "trange":
                    d["trange"] = (float(tok[1]), float(tok[2]))
                elif sub in ("thermo_lo", "thermo_hi"):
                    vals = [float(v) for v in tok[1:]]
                    if len(vals) != 7:
                        raise MechanismError(
                            f"{sub} needs 7 coefficients", ln)
                    d[sub] = vals
                elif sub in ("transport", "arrhenius", "order",
                             "thirdbody"):
                    d[sub] = _parse_kv(tok[1:], ln)
                else:
                    raise MechanismError(f"unknown directive {tok[0]!r}", ln)
            else:
                raise MechanismError(f"unexpected content {line!r}", ln)
        except (ValueError, IndexError) as exc:
            if isinstance(exc, MechanismError):
                raise
            raise MechanismError(str(exc), ln) from exc
    if cur is not None:
        raise MechanismError(f"unterminated {cur[0]} block", cur[1]["_line"])
    mech = GasMechanism(elements=elements, species=species,
                        reactions=reactions)
    return mech.validate()


# ---------------------------------------------------------------------
# mixture transport

def gas_mixture_properties(T, p, omega, mech: GasMechanism,
                           lewis: dict | None = None):
    """Gas properties {rho, cp, k, mu, D(i)} for one state or per-cell
    arrays. omega has the species axis last.

    Viscosity/conductivity use mole-fraction-weighted pure-species
    power-law fits; D_i is mixture-averaged via the bundled power law or,
    if ``lewis`` provides a species entry, from k/(rho cp Le_i).
    """
    T = np.asarray(T, dtype=float)
    omega = np.asarray(omega, dtype=float)
    tlow = min(s.tlow for s in mech.species)
    thigh = max(s.thigh for s in mech.species)
    if np.any(T < tlow) or np.any(T > thigh):
        raise ValueError(
            f"temperature outside polynomial validity [{tlow}, {thigh}] K")
    x = mech.mole_fractions(omega)
    rho = mech.density(T, p, omega)
    cp = mech.cp_mass(T, omega)
    mu = np.einsum("...i,...i->...", x,
                   np.stack([s.mu(T) for s in mech.species], axis=-1))
    k = np.einsum("...i,...i->...", x,
                  np.stack([s.k(T) for s in mech.species], axis=-1))
    D = np.stack([s.diff(T, p) for s in mech.species], axis=-1)
    if lewis:
        alpha = k / (rho * cp)
        for name, Le in lewis.items():
            D[..., mech.index[name]] = alpha / Le
    return {"rho": rho, "cp": cp, "k": k, "mu": mu, "D": D}
