"""Physical connectivity graphs and logical-to-physical layouts."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..circuit import CircuitError

__all__ = ["CouplingMap", "Layout", "RoutingError"]


class RoutingError(CircuitError):
    pass


@dataclass(frozen=True)
class CouplingMap:
    """Undirected coupling graph; a two-qubit gate may act on any edge in either orientation."""

    n_physical: int
    edges: frozenset[tuple[int, int]]
    name: str = "custom"

    def __post_init__(self):
        if self.n_physical < 1:
            raise RoutingError("coupling map needs at least one physical qubit")
        norm = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b or not (0 <= a < self.n_physical and 0 <= b < self.n_physical):
                raise RoutingError(f"invalid edge ({a}, {b}) for {self.n_physical} qubits")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        if len(self._component(0)) != self.n_physical:
            raise RoutingError("coupling map is disconnected")

    @classmethod
    def from_edges(cls, n_physical: int, edges: Iterable[Sequence[int]]) -> "CouplingMap":
        return cls(n_physical, frozenset((a, b) for a, b in edges))

    @classmethod
    def linear(cls, n: int) -> "CouplingMap":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)), "linear")

    @classmethod
    def t_shape(cls, n: int = 4) -> "CouplingMap":
        """Star around physical qubit 1: edges (0,1), (1,2), (1,3)."""
        if n != 4:
            raise RoutingError("the T-shaped preset is defined for 4 qubits only")
        return cls(4, frozenset({(0, 1), (1, 2), (1, 3)}), "t")

    @classmethod
    def full(cls, n: int) -> "CouplingMap":
        return cls(n, frozenset((i, j) for i in range(n) for j in range(i + 1, n)), "full")

    @classmethod
    def preset(cls, name: str, n: int) -> "CouplingMap":
        if name == "linear":
            return cls.linear(n)
        if name in ("t", "t_shape"):
            return cls.t_shape(max(n, 4))
        if name == "full":
            return cls.full(n)
        raise RoutingError(f"unknown coupling preset {name!r}")

    def neighbors(self, q: int) -> list[int]:
        return sorted({b if a == q else a for a, b in self.edges if q in (a, b)})

    def connected(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def _component(self, start: int) -> set[int]:
        seen = {start}
        todo = [start]
        while todo:
            q = todo.pop()
            for n in self.neighbors(q):
                if n not in seen:
                    seen.add(n)
                    todo.append(n)
        return seen

    def shortest_path(self, a: int, b: int) -> list[int]:
        """BFS path from a to b; neighbours are expanded in ascending index order."""
        prev = {a: a}
        queue = deque([a])
        while queue:
            q = queue.popleft()
            if q == b:
                break
            for n in self.neighbors(q):
                if n not in prev:
                    prev[n] = q
                    queue.append(n)
        if b not in prev:
            raise RoutingError(f"no path between {a} and {b}")
        path = [b]
        while path[-1] != a:
            path.append(prev[path[-1]])
        return path[::-1]

    def to_json(self) -> dict:
        if self.name in ("linear", "full") or self.name == "t":
            return {"preset": self.name, "n": self.n_physical}
        return {"n": self.n_physical, "edges": sorted(list(e) for e in self.edges)}

    @classmethod
    def from_json(cls, doc: dict, n_default: int | None = None) -> "CouplingMap":
        n = doc.get("n", n_default)
        if "preset" in doc:
            if n is None:
                raise RoutingError("coupling preset needs a qubit count")
            return cls.preset(doc["preset"], int(n))
        if "edges" in doc:
            edges = [tuple(e) for e in doc["edges"]]
            if n is None:
                n = 1 + max(max(e) for e in edges)
            return cls.from_edges(int(n), edges)
        raise RoutingError("coupling needs 'preset' or 'edges'")


@dataclass(frozen=True)
class Layout:
    """``physical[l]`` is the physical qubit currently holding logical qubit ``l``.

    The mapping covers all physical qubits: positions past the circuit width are
    ancillas, so every SWAP keeps it a permutation.
    """

    physical: tuple[int, ...]

    def __post_init__(self):
        phys = tuple(int(p) for p in self.physical)
        if len(set(phys)) != len(phys) or any(p < 0 for p in phys):
            raise RoutingError(f"layout {phys} is not injective")
        object.__setattr__(self, "physical", phys)

    @classmethod
    def trivial(cls, n: int) -> "Layout":
        return cls(tuple(range(n)))

    @classmethod
    def complete(cls, partial: Sequence[int], n_physical: int) -> "Layout":
        """Extend an injective partial assignment with unused physical qubits in ascending order."""
        partial = list(partial)
        if len(set(partial)) != len(partial) or any(not 0 <= p < n_physical for p in partial):
            raise RoutingError(f"layout {partial} invalid for {n_physical} physical qubits")
        rest = [p for p in range(n_physical) if p not in partial]
        return cls(tuple(partial + rest))

    def __len__(self) -> int:
        return len(self.physical)

    def logical_at(self, p: int) -> int:
        return self.physical.index(p)

    def swapped(self, p1: int, p2: int) -> "Layout":
        """Layout after a SWAP between physical qubits p1 and p2."""
        phys = list(self.physical)
        i, j = phys.index(p1), phys.index(p2)
        phys[i], phys[j] = p2, p1
        return Layout(tuple(phys))
