"""Write example topology, flow and instance files for the command line tools.

    python scripts/export_examples.py out/
    mrfpreempt oracle out/instance.json --format json
"""

import argparse
import random
import sys
from pathlib import Path

from mrfpreempt.graph import build_lattice, shortest_path
from mrfpreempt.model import extract_instance
from mrfpreempt.traffic import TrafficConfig, flows_to_jsonl, generate_network_flows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--c-new", type=float, default=20.0)
    args = ap.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    t = build_lattice(4, 4, 40.0)
    flows = generate_network_flows(t, TrafficConfig(
        class_bandwidth_ranges={1: (1.25, 2.5), 2: (2.5, 37.5)},
        arrival_rates={1: 10.67, 2: 1.0}, seed=args.seed, flow_count=60))
    rng = random.Random(args.seed)
    # a 3-hop route keeps the instance small enough for the exact solver
    route = None
    while route is None or route.hops != 3:
        s, d = rng.sample(range(t.node_count), 2)
        route = shortest_path(t, s, d)
    inst = extract_instance(t, flows, route, args.c_new, 2)

    (args.out / "topology.json").write_text(t.to_json() + "\n")
    (args.out / "flows.jsonl").write_text(flows_to_jsonl(flows))
    (args.out / "instance.json").write_text(inst.to_json() + "\n")
    print(f"{len(flows)} flows, route {route.nodes}, {len(inst.flows)} preemptible on route")
    return 0


if __name__ == "__main__":
    sys.exit(main())
