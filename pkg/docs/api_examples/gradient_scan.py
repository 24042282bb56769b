# %% [markdown]
# # From a gradient scan to the quadrupole moment
#
# Run a gradient scan through the configuration layer, as the command line tool does,
# and inspect the outputs.
#
# Refers to the `dfsramsey.pipeline` and `dfsramsey.estimation` modules.

# %%
# %pip install dfsramsey

# %%
from pathlib import Path
from tempfile import mkdtemp

import pandas as pd

from dfsramsey.config import parse_config
from dfsramsey.estimation import extract_moment
from dfsramsey.pipeline import run

out_dir = Path(mkdtemp())
config = parse_config(
    {
        "run": {"mode": "gradient-scan", "output_dir": str(out_dir), "theta_true": "1.83 ea02"},
        "trap": {
            "calibration_voltage": "500 V",
            "calibration_frequency": "850 kHz",
            "gradients": ["10 V/mm2", "20 V/mm2", "30 V/mm2", "40 V/mm2"],
        },
        "magnetic": {"bias_field": "2.9 G", "axial_gradient": "-0.079 G/m"},
        "plan": {"wait_times": {"span": "300 ms", "step": "2 ms"}, "seed": 3},
    }
)
result = run(config)
result.ok

# %% [markdown]
# Shift against gradient for the average (`delta_hz`) and the magnetic-gradient part
# (`delta_gradient_hz`), fitted and true.

# %%
pd.read_csv(out_dir / "scan.csv")

# %%
result.summary["moment"]

# %% [markdown]
# The same conversion for a measured slope, with a 3 degree orientation uncertainty.

# %%
import math

extract_moment(2.975, math.radians(3), slope_sigma=0.002).to_dict()
