"""
Release and capture temperatures
================================

Release happens when the sheet can no longer hold the bent beam. Capture
happens when the magnetic stiffness at the centre beats the beam stiffness.
The gap between them is the hysteresis that makes a cycle.
"""
# %%
from curiesnap.config import parse_config
from curiesnap.explorer import config_thresholds

base = parse_config()
for gap in (0.0095, 0.010, 0.0105):
    r = config_thresholds(base.with_updates({"geometry.half_gap": gap}))
    print(f"half gap {gap * 1e3:.1f} mm: release {r.t_release:.4f} C  capture {r.t_capture:.4f} C  "
          f"width {r.hysteresis_width:.4f} C")
