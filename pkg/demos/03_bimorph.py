"""
Bimorph lumped parameters
=========================

The beam reduces to a mass, a spring, a damper and a piezo capacitor. Series
and parallel wiring trade voltage for charge but share one coupling figure.
"""
# %%
from dataclasses import replace

from curiesnap.harvester import BimorphConfig, derive_lumped

bim = BimorphConfig()
for wiring in ("parallel", "series"):
    p = derive_lumped(replace(bim, wiring=wiring))
    print(f"{wiring:8s} k = {p.k:.3f} N/m  m_eff = {p.m_eff * 1e3:.3f} g  theta = {p.theta:.3e} N/V  "
          f"C_p = {p.c_p:.3e} F  kappa^2 = {p.coupling_figure:.5f}  f = {p.natural_frequency:.2f} Hz")

# %%
# Stiffness scales with 1 / L^3.
for length in (0.036, 0.040, 0.044):
    print(f"L = {length * 1e3:.0f} mm   k = {derive_lumped(replace(bim, length=length)).k:.2f} N/m")
