"""Optically thin radiation.

The gas loses (or gains) heat at a rate
``q_rad = 4 a_p sigma (T^4 - T_env^4)`` per unit volume, with the
mixture Planck-mean absorption coefficient assembled from per-species
partial-pressure fits. The solid fiber radiates from its surface with a
gray emissivity. The optically thin limit overestimates losses once the
optical thickness a_p*L approaches unity, so a warning is logged there.
"""

from __future__ import annotations

import logging
from importlib import resources

import numpy as np

from .constants import SIGMA_SB
from .thermo import GasMechanism

logger = logging.getLogger(__name__)

P_ATM_REF = 101325.0


def parse_planck_coefficients(path=None):
    """Read {species: 6 polynomial coefficients in (1000/T)^k}."""
    if path is None:
        path = resources.files("dropflame.data") / "planck.coeffs"
    coeffs = {}
    with open(path) as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0].upper() != "SPECIES" or len(tok) != 8:
                raise ValueError(
                    f"{path}: line {ln}: expected "
                    "'SPECIES name c0 ... c5'")
            coeffs[tok[1]] = np.array([float(v) for v in tok[2:]])
    return coeffs


def planck_mean_absorption(T, p, x, mech: GasMechanism, coeffs=None):
    """Mixture Planck-mean absorption coefficient [1/m].

    ``x`` holds mole fractions with the species axis last; species
    without a fit are transparent. a_p = sum_i p_i[atm] * a_p,i(T).
    """
    coeffs = coeffs if coeffs is not None else parse_planck_coefficients()
    T = np.asarray(T, dtype=float)
    x = np.asarray(x, dtype=float)
    u = 1000.0 / T
    a_p = np.zeros(T.shape)
    for name, c in coeffs.items():
        if name not in mech.index:
            continue
        fit = np.polyval(c[::-1], u)
        a_p = a_p + x[..., mech.index[name]] * (np.asarray(p) / P_ATM_REF) \
            * np.maximum(fit, 0.0)
    return a_p


def radiative_sink(T, p, x, mech, t_env, domain_size=None, coeffs=None):
    """Optically thin volumetric radiation loss [W/m^3], positive when
    the gas is hotter than the environment.

    If ``domain_size`` (m) is given and the optical thickness a_p*L
    exceeds 0.3 anywhere, the thin-limit assumption is logged as
    questionable.
    """
    a_p = planck_mean_absorption(T, p, x, mech, coeffs)
    T = np.asarray(T, dtype=float)
    if domain_size is not None:
        tau = float(np.max(a_p)) * domain_size
        if tau > 0.3:
            logger.warning(
                "optical thickness a_p*L = %.2f > 0.3: optically thin "
                "radiation overestimates losses", tau)
    return 4.0 * a_p * SIGMA_SB * (T ** 4 - t_env ** 4)


def solid_surface_radiation(T_surface, t_env, emissivity=0.93):
    """Gray-body net radiative flux [W/m^2] leaving the fiber surface."""
    T_surface = np.asarray(T_surface, dtype=float)
    return emissivity * SIGMA_SB * (T_surface ** 4 - t_env ** 4)
