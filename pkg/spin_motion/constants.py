"""
Physical constants (CODATA 2018, SI units).

Every formula of the package reads its constants from here. Exact values of the
2019 SI are padded to 12 significant figures.
"""

#: Reduced Planck constant, J s (exact).
HBAR = 1.05457181765e-34
#: Bohr magneton, J/T.
MU_B = 9.27401007830e-24
#: Elementary charge, C (exact).
E_CHARGE = 1.60217663400e-19
#: Vacuum electric permittivity, F/m.
EPS0 = 8.85418781280e-12
#: Atomic mass constant, kg.
AMU = 1.66053906660e-27
#: Electron mass in atomic mass units.
ELECTRON_MASS_AMU = 5.48579909065e-4

#: Neutral 171Yb atomic mass (AME2016), in atomic mass units.
YB171_ATOM_MASS_AMU = 170.936330208
#: Singly charged 171Yb ion mass, in atomic mass units.
YB171_ION_MASS_AMU = YB171_ATOM_MASS_AMU - ELECTRON_MASS_AMU

#: S1/2 <-> P1/2 wavelength of Yb+, m (Raman beams are detuned near it).
YB_S12_P12_WAVELENGTH = 369.5e-9
