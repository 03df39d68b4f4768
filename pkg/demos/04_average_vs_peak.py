"""Average versus peak transmit-power limits, perfect versus imperfect sensing.

EE grows with the transmit limit until circuit power and the interference
budget take over and the curve flattens. An average limit lets the
transmitter pour power into good fades, so it always beats a per-state peak
of the same value.
"""

from sensing_ee import ExperimentConfig, run_sweep

limits = list(range(-20, 11, 5))
curves = {}
for sensing, (pd, pf) in {"perfect": (1.0, 0.0), "Pd=0.8": (0.8, 0.1)}.items():
    for regime in ("avg", "peak"):
        cfg = ExperimentConfig.from_mapping(dict(
            kind="sweep", sweep_param="p_limit_db", sweep_values=",".join(map(str, limits)),
            regime=regime, q_avg_db=-1, p_detect=pd, p_false_alarm=pf))
        curves[sensing, regime] = [float(v) for v in run_sweep(cfg).column("ee")]

print("limit dB " + "".join(f"{s + ' ' + r:>16}" for s, r in curves))
for i, lim in enumerate(limits):
    print(f"{lim:>8} " + "".join(f"{c[i]:16.4f}" for c in curves.values()))
