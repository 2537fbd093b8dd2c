"""Generate, save, and convert topologies.

Shows the three-tier synthetic generator, the native YAML round trip, and the
converter that accepts external JSON exports with flexible key names.
"""

import json
import tempfile
import os

from dsnetsim.topology import (
    NodeTier, convert_external_topology, generate_synthetic_topology,
    load_topology, save_topology,
)


def main():
    topo = generate_synthetic_topology(n_access=12, n_mixed=4, n_kernel=2,
                                       seed=7)
    per_tier = {tier.name: sum(1 for t in topo.tiers.values() if t is tier)
                for tier in NodeTier}
    print(f"synthetic topology: {topo.num_nodes} nodes, "
          f"{topo.num_links} directed links, tiers {per_tier}")

    with tempfile.TemporaryDirectory() as tmp:
        native = os.path.join(tmp, "topo.yaml")
        save_topology(topo, native)
        again = load_topology(native)
        print(f"native YAML round trip: {again.num_nodes} nodes, "
              f"{again.num_links} links")

        external = os.path.join(tmp, "export.json")
        with open(external, "w") as fh:
            json.dump({
                "nodes": [{"node_id": 0, "type": "access", "ports": 1},
                          {"node_id": 1, "type": "kernel", "ports": 1}],
                "links": [{"source": 0, "target": 1,
                           "bw": 15_000_000_000, "latency_ns": 1_000}],
            }, fh)
        native_out = os.path.join(tmp, "converted.yaml")
        convert_external_topology(external, native_out)
        converted = load_topology(native_out)
        print(f"converted external JSON: {converted.num_nodes} nodes, "
              f"{converted.num_links} directed links")


if __name__ == "__main__":
    main()
