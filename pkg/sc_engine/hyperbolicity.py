"""
Hyperbolicity estimates on finite balls of Γ(G, X ∪ H)

The thin-triangle estimate is a lower bound on δ: every geodesic
triangle with vertices in the ball is measured, or a seeded sample of
them when the ball is large. The four-point δ is reported alongside.
"""

import itertools
import json
import logging
from math import comb
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from tqdm import tqdm

from sc_engine.groups import Ball, GroupSpec, NormalForm, ball
from sc_engine.models import GeometryEstimates
from sc_engine.parsing import canonical_spec_text, format_element
from sc_engine.settings import settings

logger = logging.getLogger(__name__)


def ball_graph(b: Ball, spec: GroupSpec) -> nx.Graph:
    """Induced subgraph of Γ(G, X ∪ H) on a ball"""
    graph = nx.Graph()
    for g in b.elements():
        graph.add_node(g, dist=b.distances[g])
    letters = spec.alphabet() if b.radius > 0 else ()
    for g in b.elements():
        for letter in letters:
            stack = list(g)
            spec.push(stack, letter)
            h = tuple(stack)
            if h in b.distances:
                graph.add_edge(g, h)
    return graph


def dump_ball(b: Ball, spec: GroupSpec, path: Path) -> Path:
    """Write the ball as node-link JSON with word literals as node ids"""
    graph = nx.relabel_nodes(ball_graph(b, spec), lambda g: format_element(g, spec))
    data = nx.node_link_data(graph)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2), encoding="utf-8")
    logger.info(f"✅ wrote ball of {len(b)} elements to {path}")
    return path


class _Metric:
    """Group distance d(g, h) = |g⁻¹h| with memoised geodesics"""

    def __init__(self, spec: GroupSpec, graph: nx.Graph):
        self.spec = spec
        self.graph = graph
        self._geodesics: Dict[Tuple[NormalForm, NormalForm], List[List[NormalForm]]] = {}

    def d(self, g: NormalForm, h: NormalForm) -> int:
        return self.spec.length(self.spec.mul(self.spec.inv(g), h))

    def geodesics(self, g: NormalForm, h: NormalForm) -> List[List[NormalForm]]:
        key = (g, h) if g <= h else (h, g)
        if key not in self._geodesics:
            self._geodesics[key] = [list(p) for p in nx.all_shortest_paths(self.graph, key[0], key[1])]
        return self._geodesics[key]


def _triangle_delta(metric: _Metric, x: NormalForm, y: NormalForm, z: NormalForm) -> int:
    sides = {
        (x, y): metric.geodesics(x, y),
        (y, z): metric.geodesics(y, z),
        (z, x): metric.geodesics(z, x),
    }
    worst = 0
    for key, paths in sides.items():
        others = {v for other, ps in sides.items() if other != key for p in ps for v in p}
        for p in paths:
            for v in p:
                worst = max(worst, min(metric.d(v, w) for w in others))
    return worst


def four_point_delta(
    elements: List[NormalForm],
    spec: GroupSpec,
    sample: int,
    rng: np.random.Generator,
) -> float:
    """Largest (S₁ − S₂)/2 over 4-tuples, exhaustive when the ball is small"""
    n = len(elements)
    if n < 4:
        return 0.0
    metric = _Metric(spec, nx.Graph())
    if comb(n, 4) <= sample:
        tuples = itertools.combinations(range(n), 4)
    else:
        tuples = (tuple(rng.choice(n, 4, replace=False)) for _ in range(sample))
    hyps = []
    for i, j, k, l in tuples:
        a, b, c, d = elements[i], elements[j], elements[k], elements[l]
        s = sorted([
            metric.d(a, b) + metric.d(c, d),
            metric.d(a, c) + metric.d(b, d),
            metric.d(a, d) + metric.d(b, c),
        ])
        hyps.append((s[-1] - s[-2]) / 2)
    return float(np.max(hyps)) if hyps else 0.0


def delta_estimate(spec: GroupSpec, radius: int, sample: int, seed: Optional[int] = None) -> GeometryEstimates:
    """
    Thin-triangle lower bound on δ over triangles in the ball.

    Raises:
        RadiusCapExceeded, InfiniteFactorInBall
    """
    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    b = ball(spec, radius)
    elements = b.elements()
    graph = ball_graph(b, spec)
    metric = _Metric(spec, graph)

    n = len(elements)
    exhaustive = comb(n, 3) <= sample
    if exhaustive:
        triangles = list(itertools.combinations(range(n), 3))
    else:
        triangles = [tuple(rng.choice(n, 3, replace=False)) for _ in range(sample)]

    delta_hat, witness = 0, []
    for i, j, k in tqdm(triangles, desc="triangles", disable=not settings.SHOW_PROGRESS):
        x, y, z = elements[i], elements[j], elements[k]
        value = _triangle_delta(metric, x, y, z)
        if value > delta_hat:
            delta_hat, witness = value, [format_element(g, spec) for g in (x, y, z)]

    four_point = four_point_delta(elements, spec, sample, rng)
    logger.info(
        f"📊 δ̂ = {delta_hat} over {len(triangles)} triangles in ball({radius}) "
        f"of {n} elements; four-point δ = {four_point}"
    )
    return GeometryEstimates(
        spec_text=canonical_spec_text(spec),
        delta_hat=float(delta_hat),
        four_point_delta=four_point,
        radius_used=radius,
        triangles_checked=len(triangles),
        exhaustive=exhaustive,
        seed=seed,
        witness=witness,
    )
