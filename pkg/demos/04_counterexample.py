import json
import tempfile
from pathlib import Path

from ultrahypo import WeightSequence, generate, synth_beurling, synth_roumieu, torus_laplacian
from ultrahypo.errors import ScheduleExhaustedError
from ultrahypo.synth import invariant_report, write_bundle

w = WeightSequence.gevrey(2.0, 2)
model = torus_laplacian(1, 512)

# m drops to exp(-2 M(rho)) on powers of two, below exp(-M(eps0 rho)) for eps0 = 1
s = generate(model, "sparse_drop", weights=w, drop="pow2", floor={"kind": "envelope", "L": 1.0, "power": 2.0})
ce = synth_roumieu(s, w, eps0=1.0)
print("subsequence:", ce.subsequence)
for name, check in ce.contract.items():
    print(f"  {name:6s} {check['decision']:11s} passed={check['passed']}")
print("invariants:", invariant_report(ce, s))

out = Path(tempfile.mkdtemp()) / "bundle"
write_bundle(ce, out)
print("bundle:", sorted(p.name for p in out.iterdir()))
print("manifest keys:", list(json.loads((out / "manifest.json").read_text()))[:6])

# greedy schedule on a planted symbol, and where it stalls on an envelope
p = generate(model, "beurling_planted", weights=w, stride=3, factor=0.5)
ce = synth_beurling(p, w)
print("\nbeurling picks:", ce.subsequence[:8], "...", ce.subsequence[-1], "passed:", ce.passed)
try:
    synth_beurling(generate(model, "envelope", weights=w, L=5.0), w)
except ScheduleExhaustedError as exc:
    print("envelope r=5 stalls at k =", exc.k_reached)
