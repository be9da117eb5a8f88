"""
Seeded property sweep with shrinking
====================================
"""

import json

from petzlab.properties import REGISTRY, InstanceSpec, run_properties, shrink

specs = [InstanceSpec(seed=s, dim=2 + s % 3, rank=2 + s % 2, n_max=30) for s in range(20)]
report = run_properties(specs)
for st in report.properties:
    print(f"{st.name:26s} pass={st.passed:3d} fail={st.failed}  worst slack {st.worst_slack:.2e}")
print("exit status", report.exit_status)


# shrinking a synthetic failure that needs dim >= 2 to show up
def breaks_above_qubit(spec):
    return spec.dim < 2, 0.0


print(json.dumps(shrink(InstanceSpec(seed=0, dim=6, rank=4), breaks_above_qubit).to_json()))
print(len(REGISTRY), "registered properties")
