"""
Searching for a better device
=============================

Energy per thermal cycle is the objective. A small grid sweep and a bounded
simplex search run on a faster 20 s cycle to keep this demo short.
"""
# %%
from curiesnap.config import parse_config
from curiesnap.explorer import optimize, sweep

base = parse_config().with_updates({"thermal.rate": 1.0})
rows = sweep(base, {"bimorph.load_resistance": [3e4, 1e5, 3e5]})
for r in rows:
    print(f"R = {r.params['bimorph.load_resistance']:8.0f} ohm  E = {r.energy_per_cycle * 1e3:.4f} mJ  "
          f"{r.energy_density:.2f} J/m^3  ({r.pyro_ratio:.2f} x pyroelectric)  {r.status}")

# %%
res = optimize(base, {"bimorph.load_resistance": (3e4, 3e5)}, 12, restarts=1)
print("best:", res.best.params, f"{res.best.energy_per_cycle * 1e3:.4f} mJ after {len(res.log)} evaluations")
