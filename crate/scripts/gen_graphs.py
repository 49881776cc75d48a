"""Generate the bundled MaxCut fixture graphs."""

import pathlib

import networkx as nx

out = pathlib.Path(__file__).resolve().parent.parent / "crates/core/data/graphs"


def write(name, header, edges):
    body = "".join(f"{u} {v} 1.0\n" for u, v in sorted(tuple(sorted(e)) for e in edges))
    (out / name).write_text(f"# {header}\n# u v weight\n{body}")


write("k3.txt", "triangle K3, unit weights", [(0, 1), (1, 2), (0, 2)])
write("ring5.txt", "5-node ring, unit weights", [(i, (i + 1) % 5) for i in range(5)])
# nine nodes cannot all have degree 3; one node carries degree 4
g = nx.random_degree_sequence_graph([4, 3, 3, 3, 3, 3, 3, 3, 3], seed=9, tries=100)
write("near_cubic9.txt", "9 nodes, 14 edges, degrees 4,3x8 (seed 9), unit weights", g.edges())
