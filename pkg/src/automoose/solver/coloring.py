"""Map grain labels onto the available order parameters."""

from __future__ import annotations


class ColoringError(ValueError):
    pass


def color_grains(adjacency: set, op_num: int, algo: str = "jp",
                 labels=None) -> dict:
    """Assign each grain label an order-parameter index.

    ``jp``: greedy coloring in descending-degree order; fails up front if
    more colors than op_num would be needed.  ``bt``: identity map, which
    requires exactly one order parameter per grain.
    """
    if labels is None:
        labels = sorted({l for pair in adjacency for l in pair})
    labels = sorted(labels)
    if algo == "bt":
        if len(labels) != op_num:
            raise ColoringError(
                f"bt coloring requires grain_num == op_num, got {len(labels)} grains "
                f"and {op_num} order parameters"
            )
        return {label: i for i, label in enumerate(labels)}
    if algo != "jp":
        raise ColoringError(f"unknown coloring algorithm {algo!r}")
    neighbours: dict = {label: set() for label in labels}
    for a, b in adjacency:
        neighbours.setdefault(a, set()).add(b)
        neighbours.setdefault(b, set()).add(a)
    order = sorted(neighbours, key=lambda l: (-len(neighbours[l]), l))
    assignment: dict = {}
    for label in order:
        used = {assignment[n] for n in neighbours[label] if n in assignment}
        color = next(c for c in range(len(order) + 1) if c not in used)
        if color >= op_num:
            raise ColoringError(
                f"jp coloring needs more than {op_num} order parameters for this adjacency"
            )
        assignment[label] = color
    return assignment
