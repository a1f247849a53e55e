"""Liquid-phase property correlations.

Properties are read from a plain-text block format (see
``data/liquids.props``). Each liquid maps to one gas-phase species via
its ``gas_species`` entry, which is how evaporated mass enters the gas
species set.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np


class LiquidPropertyError(ValueError):
    pass


@dataclass
class Liquid:
    name: str
    gas_species: str
    rho_coef: tuple        # (a, b): a + b T
    cp_coef: tuple
    k_coef: tuple
    mu_coef: tuple         # (A, B): A exp(B/T)
    dhev_coef: tuple       # (A, Tc): A (1 - T/Tc)^0.38
    antoine: tuple         # (A, B, C): log10(p/bar) = A - B/(T+C)
    diff: float            # m2/s
    trange: tuple

    def _check(self, T):
        T = np.asarray(T, dtype=float)
        lo, hi = self.trange
        if np.any(T < lo) or np.any(T > hi):
            raise LiquidPropertyError(
                f"{self.name}: temperature outside fit range {self.trange}")
        return T

    def rho(self, T):
        T = self._check(T)
        return self.rho_coef[0] + self.rho_coef[1] * T

    def cp(self, T):
        T = self._check(T)
        return self.cp_coef[0] + self.cp_coef[1] * T

    def k(self, T):
        T = self._check(T)
        return self.k_coef[0] + self.k_coef[1] * T

    def mu(self, T):
        T = self._check(T)
        return self.mu_coef[0] * np.exp(self.mu_coef[1] / T)

    def dh_ev(self, T):
        """Latent heat of vaporization [J/kg]."""
        T = self._check(T)
        A, Tc = self.dhev_coef
        return A * np.maximum(1.0 - T / Tc, 0.0) ** 0.38

    def p_sat(self, T):
        """Saturation pressure [Pa]."""
        T = self._check(T)
        A, B, C = self.antoine
        return 1e5 * 10.0 ** (A - B / (T + C))

    def boiling_temperature(self, p):
        """Invert the Antoine fit at pressure p [Pa]."""
        A, B, C = self.antoine
        return B / (A - np.log10(np.asarray(p) / 1e5)) - C


@dataclass
class LiquidSet:
    """Ordered collection of liquids; mixture rules are mass-weighted
    except conductivity/viscosity, which use simple mass-weighted forms
    too (adequate for the narrow composition ranges simulated)."""

    liquids: list

    def __post_init__(self):
        self.index = {liq.name: k for k, liq in enumerate(self.liquids)}

    @property
    def names(self):
        return [liq.name for liq in self.liquids]

    @property
    def n(self):
        return len(self.liquids)

    def __getitem__(self, name) -> Liquid:
        return self.liquids[self.index[name]]

    def _weighted(self, prop, T, omega_l):
        omega_l = np.asarray(omega_l)
        vals = np.stack([getattr(liq, prop)(T) for liq in self.liquids],
                        axis=-1)
        return np.einsum("...i,...i->...", omega_l, vals)

    def rho(self, T, omega_l):
        # mass-weighted specific volume (ideal mixing)
        omega_l = np.asarray(omega_l)
        v = np.stack([1.0 / liq.rho(T) for liq in self.liquids], axis=-1)
        return 1.0 / np.einsum("...i,...i->...", omega_l, v)

    def cp(self, T, omega_l):
        return self._weighted("cp", T, omega_l)

    def k(self, T, omega_l):
        return self._weighted("k", T, omega_l)

    def mu(self, T, omega_l):
        return self._weighted("mu", T, omega_l)

    def dh_ev(self, T, omega_l):
        """Mixture latent heat: liquid-mass-fraction weighted."""
        return self._weighted("dh_ev", T, omega_l)


def _parse_floats(tokens, n, what, line_no):
    if len(tokens) != n:
        raise LiquidPropertyError(
            f"line {line_no}: {what} needs {n} values, got {len(tokens)}")
    return tuple(float(t) for t in tokens)


def parse_liquids(path=None, names=None) -> LiquidSet:
    """Load liquid correlations; defaults to the bundled data file.
    ``names`` restricts and orders the returned set."""
    if path is None:
        path = resources.files("dropflame.data") / "liquids.props"
    liquids = []
    cur = None
    with open(path) as f:
        lines = f.readlines()
    for ln, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        key = tok[0].lower()
        if key == "liquid":
            if cur is not None:
                raise LiquidPropertyError(f"line {ln}: nested LIQUID block")
            cur = {"name": tok[1], "_line": ln}
        elif key == "end":
            if cur is None:
                raise LiquidPropertyError(f"line {ln}: END outside block")
            try:
                liquids.append(Liquid(
                    name=cur["name"],
                    gas_species=cur.get("gas_species", cur["name"]),
                    rho_coef=cur["rho"], cp_coef=cur["cp"],
                    k_coef=cur["k"], mu_coef=cur["mu"],
                    dhev_coef=cur["dhev"], antoine=cur["psat"],
                    diff=cur["diff"][0], trange=cur["range"]))
            except KeyError as exc:
                raise LiquidPropertyError(
                    f"line {cur['_line']}: liquid {cur['name']} missing "
                    f"{exc.args[0]!r}") from exc
            cur = None
        elif cur is not None:
            if key == "gas_species":
                cur["gas_species"] = tok[1]
            else:
                want = {"rho": 2, "cp": 2, "k": 2, "mu": 2, "dhev": 2,
                        "psat": 3, "diff": 1, "range": 2}.get(key)
                if want is None:
                    raise LiquidPropertyError(
                        f"line {ln}: unknown directive {tok[0]!r}")
                cur[key] = _parse_floats(tok[1:], want, key, ln)
        else:
            raise LiquidPropertyError(f"line {ln}: unexpected {line!r}")
    if cur is not None:
        raise LiquidPropertyError(
            f"line {cur['_line']}: unterminated LIQUID block")
    lset = LiquidSet(liquids)
    if names is not None:
        missing = [n for n in names if n not in lset.index]
        if missing:
            raise LiquidPropertyError(f"no correlations for {missing}")
        lset = LiquidSet([lset[n] for n in names])
    return lset
