"""Effect of sensing reliability on the optimum.

Better detection (higher Pd) lets the idle-sensed state transmit harder while
the busy-sensed state backs off; more false alarms (higher Pf) waste idle
opportunities and lower the achievable EE.
"""

import numpy as np

from sensing_ee import ExperimentConfig, run_sweep


def sweep(param, values, **fixed):
    cfg = ExperimentConfig.from_mapping(dict(
        kind="sweep", sweep_param=param, sweep_values=",".join(map(str, values)),
        p_limit_db=-4, q_avg_db=-8, **fixed))
    return run_sweep(cfg)


t = sweep("p_detect", [0.5, 0.6, 0.7, 0.8, 0.9, 1.0], p_false_alarm=0.1)
print("Pd     EE       rate     mean P0  mean P1")
for row in zip(*(t.column(c) for c in ("Pd", "ee", "rate", "p_idle_mean", "p_busy_mean"))):
    pd, *vals = row
    print(f"{float(pd):.1f}  " + "  ".join(f"{float(v):7.4f}" for v in vals))

t = sweep("p_false_alarm", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5], p_detect=0.8)
ee = np.array(t.column("ee"), float)
print("\nPf     EE")
for pf, v in zip(t.column("Pf"), ee):
    print(f"{float(pf):.1f}  {v:.4f}")
