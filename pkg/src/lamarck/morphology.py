"""Modular robot bodies and their development from a CPPN.

Frame convention: the core faces +y (front), +x is its right side and +z is
up. Every module carries an integer forward/up frame; a child's forward axis
points away from its parent and a 90 degree rotation turns its up axis about
that forward axis, which is what lets bodies leave the z = 0 plane.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cppn import CppnGenome

MAX_MODULES = 10


class ModuleKind(str, Enum):
    CORE = "Core"
    BRICK = "Brick"
    HINGE = "ActiveHinge"


# socket name -> direction in the module's (right, forward, up) basis
_SOCKET_DIRS = {"front": (0, 1, 0), "right": (1, 0, 0), "back": (0, -1, 0), "left": (-1, 0, 0)}
SOCKETS = {
    ModuleKind.CORE: ("front", "right", "back", "left"),
    ModuleKind.BRICK: ("front", "right", "left"),
    ModuleKind.HINGE: ("front",),
}


@dataclass(frozen=True)
class Module:
    id: int
    kind: ModuleKind
    rotation: int  # degrees, 0 or 90
    grid_pos: tuple[int, int, int]
    parent: int | None
    socket: str | None
    depth: int
    forward: tuple[int, int, int]
    up: tuple[int, int, int]


@dataclass(frozen=True)
class ModuleTree:
    """Body phenotype; modules are stored in breadth-first order, root first."""

    modules: tuple[Module, ...]

    @property
    def module_count(self) -> int:
        return len(self.modules)

    @property
    def root(self) -> Module:
        return self.modules[0]

    def children(self, module_id: int) -> list[Module]:
        kids = [m for m in self.modules if m.parent == module_id]
        order = SOCKETS[self.modules[module_id].kind]
        return sorted(kids, key=lambda m: order.index(m.socket))

    def to_dict(self) -> dict:
        def record(m: Module) -> dict:
            return {
                "kind": m.kind.value,
                "rotation": m.rotation,
                "grid_pos": list(m.grid_pos),
                "socket": m.socket,
                "children": [record(c) for c in self.children(m.id)],
            }

        return record(self.root)

    @classmethod
    def from_dict(cls, data: dict) -> ModuleTree:
        """Rebuild a tree from :meth:`to_dict` output (frames are recomputed)."""
        root = Module(0, ModuleKind.CORE, 0, (0, 0, 0), None, None, 0, (0, 1, 0), (0, 0, 1))
        modules = [root]
        queue = deque([(root, data)])
        while queue:
            parent, rec = queue.popleft()
            for child in rec["children"]:
                socket = child["socket"]
                fwd, up = _child_frame(parent, socket, int(child["rotation"]))
                step = _socket_world_dir(parent, socket)
                pos = tuple(parent.grid_pos[i] + step[i] for i in range(3))
                if "grid_pos" in child and tuple(child["grid_pos"]) != pos:
                    raise ValueError(f"module at socket {socket!r} of {parent.grid_pos} must sit at {pos}")
                m = Module(
                    len(modules), ModuleKind(child["kind"]), int(child["rotation"]), pos,
                    parent.id, socket, parent.depth + 1, fwd, up,
                )
                modules.append(m)
                queue.append((m, child))
        return cls(tuple(modules))


def core_only() -> ModuleTree:
    return ModuleTree((Module(0, ModuleKind.CORE, 0, (0, 0, 0), None, None, 0, (0, 1, 0), (0, 0, 1)),))


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _socket_world_dir(module: Module, socket: str) -> tuple[int, int, int]:
    r, f, u = _SOCKET_DIRS[socket]
    right = _cross(module.forward, module.up)
    return tuple(r * right[i] + f * module.forward[i] + u * module.up[i] for i in range(3))


def _child_frame(parent: Module, socket: str, rotation: int):
    forward = _socket_world_dir(parent, socket)
    up = parent.up
    if rotation == 90:
        up = _cross(forward, up)
    return forward, up


def _argmax(values, priority) -> int:
    best = priority[0]
    for idx in priority[1:]:
        if values[idx] > values[best]:
            best = idx
    return best


# output index priorities for ties: empty > brick > joint, rot0 > rot90
_TYPE_PRIORITY = (2, 0, 1)
_ROT_PRIORITY = (3, 4)


def develop(genome: CppnGenome, max_modules: int = MAX_MODULES) -> ModuleTree:
    """Grow a body breadth-first from the core by querying ``genome``."""
    if max_modules < 1:
        raise ValueError("max_modules must be >= 1")
    root = core_only().root
    modules = [root]
    occupied = {root.grid_pos}
    queue = deque((root, s) for s in SOCKETS[root.kind])
    while queue and len(modules) < max_modules:
        parent, socket = queue.popleft()
        step = _socket_world_dir(parent, socket)
        pos = tuple(parent.grid_pos[i] + step[i] for i in range(3))
        if pos in occupied:
            continue
        depth = parent.depth + 1
        out = genome.evaluate((float(pos[0]), float(pos[1]), float(pos[2]), float(depth)))
        choice = _argmax(out, _TYPE_PRIORITY)
        if choice == 2:
            continue
        kind = ModuleKind.BRICK if choice == 0 else ModuleKind.HINGE
        rotation = 0 if _argmax(out, _ROT_PRIORITY) == 3 else 90
        forward, up = _child_frame(parent, socket, rotation)
        child = Module(len(modules), kind, rotation, pos, parent.id, socket, depth, forward, up)
        modules.append(child)
        occupied.add(pos)
        queue.extend((child, s) for s in SOCKETS[kind])
    return ModuleTree(tuple(modules))


def joints_of(tree: ModuleTree) -> list[tuple[int, tuple[int, int]]]:
    """Active hinges in breadth-first order with their (x, y) grid coordinate."""
    return [(m.id, (m.grid_pos[0], m.grid_pos[1])) for m in tree.modules if m.kind is ModuleKind.HINGE]


def tree_distance(tree: ModuleTree, a: int, b: int) -> int:
    """Number of edges on the tree path between modules ``a`` and ``b``."""
    n = tree.module_count
    if not (0 <= a < n and 0 <= b < n):
        raise KeyError(f"unknown module id {a if not 0 <= a < n else b}")
    mods = tree.modules
    steps = 0
    while a != b:
        if mods[a].depth >= mods[b].depth:
            a = mods[a].parent
        else:
            b = mods[b].parent
        steps += 1
    return steps


def distance_matrix(tree: ModuleTree) -> np.ndarray:
    n = tree.module_count
    dist = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = tree_distance(tree, i, j)
    return dist
