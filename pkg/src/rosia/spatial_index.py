"""Circular R-tree over projected catalog patches.

Leaves hold the interior-circle images of catalog star patches together
with an opaque payload (the catalog index).  The rare exterior-circle
and half-plane images go to a flat overflow list that every query scans
linearly.  The tree is bulk-loaded once per scene with Sort-Tile-
Recursive packing and never mutated, so concurrent queries are safe.

Node MBRs bound the full disks of their circles, which makes rectangle
pruning sound for both point and patch queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .projection import (
    ExteriorCircle,
    HalfPlane,
    InteriorCircle,
    ProjectedPatch,
    patch_intersects_patch,
    point_in_patch,
)

NODE_CAPACITY = 8
MIN_FILL = 3


@dataclass(slots=True)
class _Node:
    xmin: float
    ymin: float
    xmax: float
    ymax: float
    children: list["_Node"] | None  # internal nodes
    entries: list[tuple[InteriorCircle, object]] | None  # leaves


def _balanced_chunks(items: list, capacity: int) -> list[list]:
    """Split into ceil(n/capacity) runs of near-equal size.

    Balancing keeps every run at >= MIN_FILL for capacity 8 whenever
    there is more than one run.
    """
    n = len(items)
    n_chunks = max(1, -(-n // capacity))
    base = n // n_chunks
    extra = n % n_chunks
    chunks = []
    pos = 0
    for i in range(n_chunks):
        size = base + (1 if i < extra else 0)
        chunks.append(items[pos : pos + size])
        pos += size
    return chunks


def _leaf_from_entries(entries: list[tuple[InteriorCircle, object]]) -> _Node:
    xmin = min(c.cx - c.r for c, _ in entries)
    ymin = min(c.cy - c.r for c, _ in entries)
    xmax = max(c.cx + c.r for c, _ in entries)
    ymax = max(c.cy + c.r for c, _ in entries)
    return _Node(xmin, ymin, xmax, ymax, None, entries)


def _parent_from_nodes(nodes: list[_Node]) -> _Node:
    return _Node(
        min(n.xmin for n in nodes),
        min(n.ymin for n in nodes),
        max(n.xmax for n in nodes),
        max(n.ymax for n in nodes),
        nodes,
        None,
    )


def _str_pack(keys: list[tuple[float, float]], items: list, capacity: int) -> list[list]:
    """Sort-Tile-Recursive grouping of items by their 2D keys."""
    n = len(items)
    n_groups = max(1, -(-n // capacity))
    n_slabs = math.isqrt(n_groups)
    if n_slabs * n_slabs < n_groups:
        n_slabs += 1
    order = sorted(range(n), key=lambda i: keys[i][0])
    slabs = _balanced_chunks(order, -(-n // n_slabs))
    groups = []
    for slab in slabs:
        slab.sort(key=lambda i: keys[i][1])
        groups.extend(_balanced_chunks(slab, capacity))
    return [[items[i] for i in group] for group in groups]


class CircularRTree:
    """Immutable bulk-loaded R-tree of interior circles plus overflow list."""

    __slots__ = ("root", "overflow", "size")

    def __init__(
        self,
        root: _Node | None,
        overflow: list[tuple[ProjectedPatch, object]],
        size: int,
    ):
        self.root = root
        self.overflow = overflow
        self.size = size

    @classmethod
    def build(
        cls,
        circles: list[tuple[InteriorCircle, object]],
        overflow: list[tuple[ProjectedPatch, object]] | None = None,
    ) -> "CircularRTree":
        overflow = list(overflow) if overflow else []
        if not circles:
            return cls(None, overflow, 0)
        keys = [(c.cx, c.cy) for c, _ in circles]
        leaves = [_leaf_from_entries(g) for g in _str_pack(keys, list(circles), NODE_CAPACITY)]
        level = leaves
        while len(level) > 1:
            keys = [((n.xmin + n.xmax) / 2.0, (n.ymin + n.ymax) / 2.0) for n in level]
            level = [_parent_from_nodes(g) for g in _str_pack(keys, level, NODE_CAPACITY)]
        return cls(level[0], overflow, len(circles))

    # -- point queries ---------------------------------------------------

    def query_point(self, p: tuple[float, float], stats: dict | None = None) -> list:
        """Payloads of every stored patch containing the projected point.

        Exact: descent prunes by closed point-in-MBR tests, leaves apply
        the point-in-circle predicate, and the overflow list is scanned.
        """
        px, py = p
        out = []
        if self.root is not None:
            stack = [self.root]
            while stack:
                node = stack.pop()
                if stats is not None:
                    stats["nodes_visited"] = stats.get("nodes_visited", 0) + 1
                if px < node.xmin or px > node.xmax or py < node.ymin or py > node.ymax:
                    continue
                if node.entries is not None:
                    for circle, payload in node.entries:
                        dx = px - circle.cx
                        dy = py - circle.cy
                        if dx * dx + dy * dy <= circle.r * circle.r:
                            out.append(payload)
                else:
                    stack.extend(node.children)
        for patch, payload in self.overflow:
            if point_in_patch(p, patch):
                out.append(payload)
        return out

    def query_point_any(self, p: tuple[float, float]) -> bool:
        """True iff at least one stored patch contains the point."""
        px, py = p
        for patch, _ in self.overflow:
            if point_in_patch(p, patch):
                return True
        if self.root is None:
            return False
        stack = [self.root]
        while stack:
            node = stack.pop()
            if px < node.xmin or px > node.xmax or py < node.ymin or py > node.ymax:
                continue
            if node.entries is not None:
                for circle, _ in node.entries:
                    dx = px - circle.cx
                    dy = py - circle.cy
                    if dx * dx + dy * dy <= circle.r * circle.r:
                        return True
            else:
                stack.extend(node.children)
        return False

    # -- patch queries ---------------------------------------------------

    def query_patch(self, q: ProjectedPatch, stats: dict | None = None) -> list:
        """Payloads of every stored patch intersecting the query patch.

        Subtrees whose MBR cannot meet the query are pruned; leaf circles
        and overflow entries get the exact patch-patch predicate.
        """
        out = []
        if self.root is not None:
            stack = [self.root]
            while stack:
                node = stack.pop()
                if stats is not None:
                    stats["nodes_visited"] = stats.get("nodes_visited", 0) + 1
                if not _patch_meets_rect(q, node.xmin, node.ymin, node.xmax, node.ymax):
                    continue
                if node.entries is not None:
                    for circle, payload in node.entries:
                        if patch_intersects_patch(q, circle):
                            out.append(payload)
                else:
                    stack.extend(node.children)
        for patch, payload in self.overflow:
            if patch_intersects_patch(q, patch):
                out.append(payload)
        return out

    def query_patch_any(self, q: ProjectedPatch) -> bool:
        """True iff at least one stored patch intersects the query patch.

        Hot path of the bound evaluation: the walk is specialized per
        query type with the same arithmetic as the generic predicates.
        """
        for patch, _ in self.overflow:
            if patch_intersects_patch(q, patch):
                return True
        if self.root is None:
            return False
        t = type(q)
        if t is InteriorCircle:
            return self._any_interior(q.cx, q.cy, q.r)
        if t is ExteriorCircle:
            return self._any_exterior(q.cx, q.cy, q.r)
        return self._any_half_plane(q.nx, q.ny, q.d, q.side_geq)

    def _any_interior(self, cx: float, cy: float, r: float) -> bool:
        stack = [self.root]
        pop = stack.pop
        while stack:
            node = pop()
            nx = node.xmin if cx < node.xmin else (node.xmax if cx > node.xmax else cx)
            ny = node.ymin if cy < node.ymin else (node.ymax if cy > node.ymax else cy)
            dx = cx - nx
            dy = cy - ny
            if dx * dx + dy * dy > r * r:
                continue
            entries = node.entries
            if entries is not None:
                for circle, _ in entries:
                    dx = cx - circle.cx
                    dy = cy - circle.cy
                    rs = r + circle.r
                    if dx * dx + dy * dy <= rs * rs:
                        return True
            else:
                stack.extend(node.children)
        return False

    def _any_exterior(self, cx: float, cy: float, r: float) -> bool:
        stack = [self.root]
        pop = stack.pop
        while stack:
            node = pop()
            fx = node.xmin if cx - node.xmin > node.xmax - cx else node.xmax
            fy = node.ymin if cy - node.ymin > node.ymax - cy else node.ymax
            dx = cx - fx
            dy = cy - fy
            if dx * dx + dy * dy < r * r:
                continue
            entries = node.entries
            if entries is not None:
                for circle, _ in entries:
                    gap = r - circle.r
                    if gap <= 0.0:
                        return True
                    dx = circle.cx - cx
                    dy = circle.cy - cy
                    if dx * dx + dy * dy >= gap * gap:
                        return True
            else:
                stack.extend(node.children)
        return False

    def _any_half_plane(self, hx: float, hy: float, d: float, geq: bool) -> bool:
        stack = [self.root]
        pop = stack.pop
        while stack:
            node = pop()
            if geq:
                sx = node.xmax if hx >= 0.0 else node.xmin
                sy = node.ymax if hy >= 0.0 else node.ymin
                if hx * sx + hy * sy < d:
                    continue
            else:
                sx = node.xmin if hx >= 0.0 else node.xmax
                sy = node.ymin if hy >= 0.0 else node.ymax
                if hx * sx + hy * sy >= d:
                    continue
            entries = node.entries
            if entries is not None:
                if geq:
                    for circle, _ in entries:
                        if hx * circle.cx + hy * circle.cy >= d - circle.r:
                            return True
                else:
                    for circle, _ in entries:
                        if hx * circle.cx + hy * circle.cy < d + circle.r:
                            return True
            else:
                stack.extend(node.children)
        return False


def _patch_meets_rect(
    q: ProjectedPatch, xmin: float, ymin: float, xmax: float, ymax: float
) -> bool:
    """Can the query patch intersect anything inside this rectangle?

    Conservative in the keep direction and exact for the stored-disk
    geometry: a rectangle is pruned only when no point of it lies in the
    query patch, and stored disks are contained in their rectangles.
    """
    t = type(q)
    if t is InteriorCircle:
        # Clamped nearest point of the rect to the circle center.
        nx = xmin if q.cx < xmin else (xmax if q.cx > xmax else q.cx)
        ny = ymin if q.cy < ymin else (ymax if q.cy > ymax else q.cy)
        dx = q.cx - nx
        dy = q.cy - ny
        return dx * dx + dy * dy <= q.r * q.r
    if t is ExteriorCircle:
        # The rect escapes the excluded open disk iff its farthest corner
        # does.
        fx = xmin if q.cx - xmin > xmax - q.cx else xmax
        fy = ymin if q.cy - ymin > ymax - q.cy else ymax
        dx = q.cx - fx
        dy = q.cy - fy
        return dx * dx + dy * dy >= q.r * q.r
    # Half-plane: extremal corner along the normal direction.
    if q.side_geq:
        sx = xmax if q.nx >= 0.0 else xmin
        sy = ymax if q.ny >= 0.0 else ymin
        return q.nx * sx + q.ny * sy >= q.d
    sx = xmin if q.nx >= 0.0 else xmax
    sy = ymin if q.ny >= 0.0 else ymax
    return q.nx * sx + q.ny * sy < q.d
