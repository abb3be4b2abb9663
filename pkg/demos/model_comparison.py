# Replay one identical source stream through all three routing models and
# look at what the counters can and cannot distinguish. Classical and
# phase-basis are statistically identical; bunching kills the cross pairs.

from bunchsim.cli_harness import parse_config, compare_models
from bunchsim.coincidence_unit import CROSS_SIDE_PAIRS, SAME_SIDE_PAIRS, counter_name

cfg = parse_config(
    "model = classical\n"           # base; replaced per run
    "mean_photon_number = 0.044\n"
    "seed = 12\n"
    "slot_rate = 2e7\n"
    "acquisition_s = 1.0\n"
    "dark_rate = 0\n"
    "output_dir = demo_out/model_comparison\n"
)

results = compare_models(cfg, ["classical", "phase-basis", "bunching"])

names = [name for name, _, _ in results]
print(f"{'counter':16}" + "".join(f"{n:>13}" for n in names))
for key in SAME_SIDE_PAIRS + CROSS_SIDE_PAIRS:
    row = [t.pairs[key] for _, t, _ in results]
    print(f"{counter_name('pair', key):16}" + "".join(f"{c:13d}" for c in row))

print()
for quantity in ("bunching_fraction", "g2_cross", "g2_same"):
    row = [getattr(corr, quantity) for _, _, corr in results]
    print(f"{quantity:18}" + "".join(f"{v:13.4f}" for v in row))

print()
print("same seed everywhere: per-slot photon numbers are literally identical,")
print("so every difference above is the routing model and nothing else.")
print("full side-by-side table written to demo_out/model_comparison/comparison.csv")