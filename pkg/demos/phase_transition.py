"""
How many rows does recovery need?
=================================

Sweep the sampling budget M for several channel counts L and measure the
success rate over seeded random instances. More channels push the
success boundary down toward the single-channel information limit; the
M = 28 + 16/L curve tracks where the transition sits at the full
N=128-class configuration.

A pocket-sized grid runs here in about a minute. The desk-scale study
(N=64, K=5, L in {1,2,4}, M from 12 to 40) is what the acceptance suite
runs; pass a config like the commented one below to `mcanm phase` to
reproduce it from the command line.
"""

from mcanm.experiments import ExperimentConfig, run_grid

config = ExperimentConfig(
    n=32, k=2,
    l_values=(1, 2, 4),
    m_values=(6, 10, 14, 18, 22),
    trials=5,
    seed=12,
)
result = run_grid(config)

header = "L\\M " + "".join(f"{m:>6d}" for m in config.m_values)
print(header)
for l in config.l_values:
    rates = [c.success_rate for c in result.cells if c.l_value == l]
    print(f"{l:<4d}" + "".join(f"{r:>6.1f}" for r in rates))

print("\nempirical boundary (smallest M with >= 95% success):")
for label, m in result.boundary.items():
    print(f"  L = {label:>3s}: M = {m}")

# Equivalent CLI run:
#   mcanm phase --config grid.json --out tables/
# with grid.json:
#   {"N": 32, "K": 2, "L_values": [1, 2, 4], "M_values": [6, 10, 14, 18, 22],
#    "trials": 5, "seed": 12}
