"""Physical constants (SI units)."""

R_GAS = 8.314462618        # J/(mol K)
SIGMA_SB = 5.670374419e-8  # W/(m^2 K^4)
P_ATM = 101325.0           # Pa
T_REF = 298.15             # K, thermo reference temperature
