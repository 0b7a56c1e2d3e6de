"""Per-configuration connectivity: reachability, double connections, pivotal
bonds, the events ``E(b, x; C)`` and ``E~(b_1..b_N; x)``, and disjoint
occurrence witnesses.

Everything here is a plain function of one bond configuration.  This is the
slow, literal route; ``_engine`` holds the compiled enumeration kernel that is
cross-checked against it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

from .errors import PathBudgetExceeded
from .model import Bond, BondConfig, ModelSpec, Vertex

DEFAULT_PATH_LIMIT = 100_000


@dataclass(frozen=True)
class EventContext:
    spec: ModelSpec
    config: BondConfig

    @cached_property
    def out_bonds(self) -> list[list[int]]:
        """Occupied bond indices leaving each vertex (by vertex index)."""
        tails, _ = self.spec.bond_arrays
        out: list[list[int]] = [[] for _ in range(self.spec.n_vertices)]
        mask = self.config.mask
        for i, t in enumerate(tails):
            if (mask >> i) & 1:
                out[int(t)].append(i)
        return out

    @cached_property
    def heads(self) -> list[int]:
        return [int(h) for h in self.spec.bond_arrays[1]]

    @cached_property
    def tails(self) -> list[int]:
        return [int(t) for t in self.spec.bond_arrays[0]]

    def occupied(self, b: Bond | int) -> bool:
        return self.config.occupied(b)

    def reach_mask(self, vi: int, forbidden: int | None = None) -> int:
        """Vertex-index bit mask reachable from vertex index ``vi``."""
        seen = 1 << vi
        stack = [vi]
        heads = self.heads
        while stack:
            u = stack.pop()
            for b in self.out_bonds[u]:
                if b == forbidden:
                    continue
                h = heads[b]
                if not (seen >> h) & 1:
                    seen |= 1 << h
                    stack.append(h)
        return seen

    def vertices_of(self, mask: int) -> set[Vertex]:
        return {self.spec.vertex_at(i) for i in range(self.spec.n_vertices) if (mask >> i) & 1}


@dataclass(frozen=True)
class ConnectionEvent:
    """A primitive connection event such as ``{y -> x}``, ``{b -> x}`` or
    ``{b' -> b -> u -> x}``.

    ``source`` is a vertex or a bond (a bond source means the bond is occupied
    and its witness includes it); ``via`` lists the vertices and bonds the
    witness path must pass through, in order.
    """

    source: Union[Vertex, Bond]
    target: Vertex
    via: tuple[Union[Vertex, Bond], ...] = ()


def _vi(ctx: EventContext, v: Vertex) -> int:
    return ctx.spec.vertex_index(v)


def _bond_index(b: Bond | int) -> int:
    return b if isinstance(b, int) else b.index


def reachable(ctx: EventContext, v: Vertex, forbidden: Bond | None = None) -> set[Vertex]:
    """Forward-reachable set of ``v``; with ``forbidden=b`` this is ``C~^b(v)``."""
    fb = None if forbidden is None else _bond_index(forbidden)
    return ctx.vertices_of(ctx.reach_mask(_vi(ctx, v), fb))


def connected(ctx: EventContext, v: Vertex, x: Vertex, forbidden: Bond | None = None) -> bool:
    fb = None if forbidden is None else _bond_index(forbidden)
    return bool((ctx.reach_mask(_vi(ctx, v), fb) >> _vi(ctx, x)) & 1)


def max_disjoint_paths(ctx: EventContext, v: Vertex, x: Vertex, cap: int | None = None) -> int:
    """Number of bond-disjoint occupied paths ``v -> x`` (unit-capacity max-flow).

    Augmenting paths are found by BFS in the residual graph; ``cap`` stops the
    search early once that many paths are found.
    """
    s, t = _vi(ctx, v), _vi(ctx, x)
    if s == t:
        raise ValueError("max-flow needs distinct endpoints")
    heads, tails = ctx.heads, ctx.tails
    n = ctx.spec.n_vertices
    occ = [b for lst in ctx.out_bonds for b in lst]
    into: list[list[int]] = [[] for _ in range(n)]
    for b in occ:
        into[heads[b]].append(b)
    flow = {b: 0 for b in occ}
    value = 0
    while cap is None or value < cap:
        # residual arcs: forward on unused bonds, backward on used bonds
        prev: dict[int, tuple[int, int]] = {s: (-1, 0)}
        queue = deque([s])
        while queue and t not in prev:
            u = queue.popleft()
            for b in ctx.out_bonds[u]:
                if not flow[b] and heads[b] not in prev:
                    prev[heads[b]] = (b, +1)
                    queue.append(heads[b])
            for b in into[u]:
                if flow[b] and tails[b] not in prev:
                    prev[tails[b]] = (b, -1)
                    queue.append(tails[b])
        if t not in prev:
            break
        u = t
        while u != s:
            b, direction = prev[u]
            flow[b] += direction
            u = tails[b] if direction > 0 else heads[b]
        value += 1
    return value


def double_connected(ctx: EventContext, v: Vertex, x: Vertex) -> bool:
    """``v => x``: two bond-disjoint occupied paths, or ``v == x``."""
    if v == x:
        return True
    return max_disjoint_paths(ctx, v, x, cap=2) >= 2


def pivotal_bonds(ctx: EventContext, v: Vertex, x: Vertex) -> list[Bond]:
    """Occupied bonds whose removal destroys ``v -> x``, in time order."""
    s, t = _vi(ctx, v), _vi(ctx, x)
    if s == t or not (ctx.reach_mask(s) >> t) & 1:
        return []
    out = []
    for u_lst in ctx.out_bonds:
        for b in u_lst:
            if not (ctx.reach_mask(s, b) >> t) & 1:
                out.append(b)
    out.sort()
    return [ctx.spec.bonds[b] for b in out]


def event_E(ctx: EventContext, b: Bond, x: Vertex, C: set[Vertex]) -> bool:
    """``E(b, x; C)``: ``b`` occupied, ``b_bar -> x``, ``x in C``, and no pivotal
    bond of ``{b_bar -> x}`` has its tail in ``C``."""
    if not ctx.occupied(b) or x not in C:
        return False
    if not connected(ctx, b.over, x):
        return False
    return not any(bp.under in C for bp in pivotal_bonds(ctx, b.over, x))


def event_E_tilde(ctx: EventContext, bonds: Sequence[Bond], x: Vertex) -> bool:
    """``E~^(N)_{b_1..b_N}(x)`` with ``b_bar_0 = o`` and ``b_under_{N+1} = x``."""
    if not bonds:
        raise ValueError("E~ needs at least one bond")
    o = ctx.spec.origin()
    if not double_connected(ctx, o, bonds[0].under):
        return False
    prev_over = o
    for i, b in enumerate(bonds):
        nxt = bonds[i + 1].under if i + 1 < len(bonds) else x
        C = reachable(ctx, prev_over, forbidden=b)
        if not event_E(ctx, b, nxt, C):
            return False
        prev_over = b.over
    return True


# -- disjoint occurrence ---------------------------------------------------

def _segment_paths(ctx: EventContext, s: int, t: int, limit: int) -> list[int]:
    """All occupied paths from vertex ``s`` to ``t`` as bond bit masks."""
    if s == t:
        return [0]
    n_sites = ctx.spec.n_sites
    t_tau = t // n_sites
    heads = ctx.heads
    out: list[int] = []
    stack = [(s, 0)]
    while stack:
        u, used = stack.pop()
        for b in ctx.out_bonds[u]:
            h = heads[b]
            if h == t:
                out.append(used | (1 << b))
                if len(out) > limit:
                    raise PathBudgetExceeded(f"more than {limit} witness paths")
            elif h // n_sites < t_tau:
                stack.append((h, used | (1 << b)))
    return out


def witness_paths(ctx: EventContext, event: ConnectionEvent, limit: int = DEFAULT_PATH_LIMIT) -> list[int]:
    """Bond sets (bit masks) of all minimal witnesses of ``event``."""
    # chain of waypoints: vertices are visited, bonds are traversed
    points: list[Union[Vertex, Bond]] = [event.source, *event.via, event.target]
    partial = [0]
    pos: int | None = None  # current vertex index
    for pt in points:
        if isinstance(pt, Bond):
            if not ctx.occupied(pt):
                return []
            entry, bit = _vi(ctx, pt.under), 1 << pt.index
            if pos is not None and pos != entry:
                segs = _segment_paths(ctx, pos, entry, limit)
                partial = [a | s for a in partial for s in segs if not a & s]
            partial = [a | bit for a in partial if not a & bit]
            pos = _vi(ctx, pt.over)
        else:
            vi = _vi(ctx, pt)
            if pos is not None:
                segs = _segment_paths(ctx, pos, vi, limit)
                partial = [a | s for a in partial for s in segs if not a & s]
            pos = vi
        if not partial:
            return []
        if len(partial) > limit:
            raise PathBudgetExceeded(f"more than {limit} witness paths")
    return sorted(set(partial))


def disjointly_connected(
    ctx: EventContext, events: Sequence[ConnectionEvent], limit: int = DEFAULT_PATH_LIMIT
) -> bool:
    """True iff the events have pairwise bond-disjoint occupied witnesses."""
    lists = [witness_paths(ctx, ev, limit) for ev in events]
    if any(not lst for lst in lists):
        return False
    order = sorted(range(len(lists)), key=lambda i: len(lists[i]))
    lists = [lists[i] for i in order]

    def search(i: int, used: int) -> bool:
        if i == len(lists):
            return True
        return any(not used & w and search(i + 1, used | w) for w in lists[i])

    return search(0, 0)
