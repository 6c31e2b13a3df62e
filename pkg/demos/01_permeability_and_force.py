"""
Permeability law and the image-dipole force
===========================================

The FeNi sheets are soft magnets whose relative permeability collapses to 1
at the Curie temperature. The magnet on the beam tip sees each sheet as a
mirror dipole scaled by (mu - 1) / (mu + 1).
"""
# %%
import numpy as np

from curiesnap import relative_permeability
from curiesnap.magnetics import MagnetSpec, SheetPairGeometry, dipole_moment, image_force_single_sheet, net_analytic_force
from curiesnap.materials import ThermoMagneticMaterial

mat = ThermoMagneticMaterial()
for temp in (30.0, 35.0, 40.0, 44.0, 45.0, 50.0):
    print(f"T = {temp:5.1f} C   mu_r = {relative_permeability(mat, temp):8.4f}")

# %%
# The force falls off with the fourth power of the distance.
m = dipole_moment(1.2, 2.1e-7)
for d in (1e-3, 2e-3, 5e-3, 10e-3):
    f1, f2 = image_force_single_sheet(m, d, 50.0), image_force_single_sheet(m, 2 * d, 50.0)
    print(f"d = {d * 1e3:4.1f} mm   F = {f1:10.4g} N   F(d)/F(2d) = {f1 / f2:.12f}")

# %%
# Between two sheets the net force pulls the magnet towards the nearer one,
# and vanishes above T_C.
geom, magnet = SheetPairGeometry(), MagnetSpec()
xs = np.linspace(-geom.contact_limit, geom.contact_limit, 7)
for temp in (40.0, 44.5, 46.0):
    print(f"T = {temp} C:", " ".join(f"{net_analytic_force(x, temp, geom, magnet, mat):+8.3f}" for x in xs))
