"""
OD Network Module
Aggregates zoned trips into the weighted directed network G(V, E).

Node = zone id, edge weight w_ij = number of trips from zone i to zone j.
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import networkx as nx

from src import config
from src.errors import DomainError, UnknownNode
from src.geo.geodesy import GeoCoordinate, UtmCoordinate

logger = logging.getLogger(__name__)

Endpoint = Union[GeoCoordinate, UtmCoordinate]


@dataclass(frozen=True)
class TripRecord:
    """One raw trip (or pre-aggregated survey row)."""

    origin: Endpoint
    destination: Endpoint
    multiplicity: int = 1

    def __post_init__(self):
        _check_multiplicity(self.multiplicity)


class ZonedTrip(NamedTuple):
    """Trip with both endpoints resolved to zone ids."""

    origin: str
    destination: str
    multiplicity: int = 1


class DegreeProfile(NamedTuple):
    k_in: int
    k_out: int
    strength_in: int
    strength_out: int


def _check_multiplicity(multiplicity: int):
    if isinstance(multiplicity, bool) or int(multiplicity) != multiplicity or multiplicity < 1:
        raise DomainError(f"trip multiplicity must be a positive integer, got {multiplicity!r}")


class OdNetwork:
    """
    Immutable weighted directed OD network.

    Per-node degrees and strengths are computed once at construction.
    """

    def __init__(self, graph: nx.DiGraph, discarded_self_loops: int = 0):
        self._graph = nx.freeze(graph)
        self.discarded_self_loops = discarded_self_loops

        k_in = dict(graph.in_degree())
        k_out = dict(graph.out_degree())
        s_in = dict(graph.in_degree(weight="weight"))
        s_out = dict(graph.out_degree(weight="weight"))
        self._profiles: Dict[str, DegreeProfile] = {
            node: DegreeProfile(k_in[node], k_out[node], s_in[node], s_out[node])
            for node in graph.nodes
        }
        self._total_weight = sum(w for _, _, w in graph.edges(data="weight"))

    @property
    def graph(self) -> nx.DiGraph:
        """Frozen networkx view of the network."""
        return self._graph

    @property
    def nodes(self) -> List[str]:
        return list(self._graph.nodes)

    @property
    def number_of_nodes(self) -> int:
        return self._graph.number_of_nodes()

    @property
    def number_of_edges(self) -> int:
        return self._graph.number_of_edges()

    @property
    def number_of_self_loops(self) -> int:
        return nx.number_of_selfloops(self._graph)

    @property
    def total_weight(self) -> int:
        return self._total_weight

    def edges(self) -> Iterator[Tuple[str, str, int]]:
        """(origin, destination, weight) in lexicographic order."""
        return iter(self._graph.edges(data="weight"))

    def weights(self) -> List[int]:
        return [w for _, _, w in self._graph.edges(data="weight")]

    def weight(self, origin: str, destination: str) -> int:
        """Trip count from origin to destination, 0 if there is no edge."""
        data = self._graph.get_edge_data(origin, destination)
        return data["weight"] if data else 0

    def profiles(self) -> Dict[str, DegreeProfile]:
        return dict(self._profiles)

    def degree_profile(self, node: str) -> DegreeProfile:
        try:
            return self._profiles[node]
        except KeyError:
            raise UnknownNode(f"node '{node}' is not in the network") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OdNetwork):
            return NotImplemented
        return self.nodes == other.nodes and list(self.edges()) == list(other.edges())

    def __repr__(self) -> str:
        return f"OdNetwork(N={self.number_of_nodes}, L={self.number_of_edges}, T={self.total_weight})"


def _network_from_counts(
    counts: Counter,
    discarded_self_loops: int = 0,
    extra_nodes: Iterable[str] = (),
) -> OdNetwork:
    # sorted insertion keeps node and edge iteration lexicographic
    nodes = set(extra_nodes)
    for origin, destination in counts:
        nodes.add(origin)
        nodes.add(destination)

    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(nodes))
    graph.add_weighted_edges_from(
        (origin, destination, weight) for (origin, destination), weight in sorted(counts.items())
    )
    return OdNetwork(graph, discarded_self_loops=discarded_self_loops)


def _count_shard(trips: List[ZonedTrip], include_self_loops: bool) -> Tuple[Counter, int]:
    counts: Counter = Counter()
    discarded = 0
    for origin, destination, multiplicity in trips:
        _check_multiplicity(multiplicity)
        if origin == destination and not include_self_loops:
            discarded += multiplicity
            continue
        counts[(origin, destination)] += int(multiplicity)
    return counts, discarded


def build_network(
    trips: Iterable[ZonedTrip],
    include_self_loops: bool = config.INCLUDE_SELF_LOOPS,
    extra_nodes: Iterable[str] = (),
    workers: int = 1,
    shard_size: int = config.ASSIGN_BATCH_SIZE,
) -> OdNetwork:
    """
    Aggregate zoned trips into an OD network.

    Args:
        trips: Finite stream of (origin id, destination id, multiplicity)
        include_self_loops: If False, intra-zone trips are counted in
            ``discarded_self_loops`` instead of entering the graph
        extra_nodes: Zone ids to include even without trips
        workers: Shard the stream across this many threads; counts are merged
            by exact integer summation, so the result does not depend on it
        shard_size: Trips per shard when workers > 1

    Returns:
        OdNetwork with nodes and edges in lexicographic order
    """
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")

    if workers == 1:
        counts, discarded = _count_shard(list(trips), include_self_loops)
    else:
        shards = list(_chunks(trips, shard_size))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda shard: _count_shard(shard, include_self_loops), shards))
        counts = Counter()
        discarded = 0
        for shard_counts, shard_discarded in results:
            counts.update(shard_counts)
            discarded += shard_discarded

    if discarded:
        logger.warning(f"Discarded {discarded} intra-zone trip(s) (self-loops excluded)")

    network = _network_from_counts(counts, discarded, extra_nodes)
    logger.info(f"Built network: {network!r}")
    return network


def _chunks(trips: Iterable[ZonedTrip], size: int) -> Iterator[List[ZonedTrip]]:
    chunk: List[ZonedTrip] = []
    for trip in trips:
        chunk.append(trip)
        if len(chunk) >= size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def degree_profile(net: OdNetwork, node: str) -> DegreeProfile:
    """
    In/out degree and strength of one node.

    Raises:
        UnknownNode: If the node is not in the network
    """
    return net.degree_profile(node)


def merge_networks(first: OdNetwork, second: OdNetwork) -> OdNetwork:
    """Network whose edge weights are the sums of both inputs."""
    counts: Counter = Counter()
    for network in (first, second):
        for origin, destination, weight in network.edges():
            counts[(origin, destination)] += weight
    return _network_from_counts(
        counts,
        first.discarded_self_loops + second.discarded_self_loops,
        extra_nodes=set(first.nodes) | set(second.nodes),
    )


def network_from_edges(
    edges: Iterable[Tuple[str, str, int]],
    extra_nodes: Iterable[str] = (),
) -> OdNetwork:
    """
    Rebuild a network from an edge list.

    Raises:
        DomainError: If a weight is not a positive integer or an edge repeats
    """
    counts: Counter = Counter()
    for origin, destination, weight in edges:
        _check_multiplicity(weight)
        if (origin, destination) in counts:
            raise DomainError(f"edge {origin} -> {destination} listed twice")
        counts[(origin, destination)] = int(weight)
    return _network_from_counts(counts, extra_nodes=extra_nodes)

