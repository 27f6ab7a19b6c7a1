"""Plain-text world rendering for debugging and demos.

Cell glyphs (two characters each):
    --   crown cell                 E. / E!  entry point (! = ready item)
    ..   empty storage cell         D. / D!  delivery point (! = open ready order)
    xx   restricted empty cell      a3       box: material letter + age bucket
    a#   restricted box             @@ / &a  agent (empty-handed / carrying 'a')
"""

from __future__ import annotations

import string

from .simcore import SimState


def _box_glyph(material: int, age: int, restricted: bool, age_cap: int) -> str:
    letter = string.ascii_lowercase[material - 1]
    if restricted:
        return letter + "#"
    bucket = min(9, age * 10 // max(age_cap, 1))
    return letter + str(bucket)


def render_state(state: SimState) -> str:
    cfg = state.cfg
    rows = []
    reach = state.reachability
    for r in range(cfg.rows):
        cells = []
        for c in range(cfg.cols):
            cell = (r, c)
            if cell == state.agent_pos:
                if state.carried is None:
                    glyph = "@@"
                else:
                    glyph = "&" + string.ascii_lowercase[state.carried.material - 1]
            elif cell in cfg.entry_points:
                glyph = "E!" if state.head_ready(cell) else "E."
            elif cell in cfg.delivery_points:
                order = state.order_at(cell)
                glyph = "D!" if order is not None and order.ready_at <= state.step else "D."
            elif cell in state.grid:
                box = state.grid[cell]
                glyph = _box_glyph(box.material, box.age, cell in reach.restricted,
                                   cfg.age_cap)
            elif cfg.is_crown(cell):
                glyph = "--"
            elif cell in reach.restricted:
                glyph = "xx"
            else:
                glyph = ".."
            cells.append(glyph)
        rows.append(" ".join(cells))

    lines = rows
    lines.append("")
    carried = (
        "nothing"
        if state.carried is None
        else f"{string.ascii_uppercase[state.carried.material - 1]} (age {state.carried.age})"
    )
    lines.append(f"step {state.step}  agent at {state.agent_pos}  carrying {carried}")
    for order in state.open_orders:
        status = "ready" if order.ready_at <= state.step else f"ready at {order.ready_at}"
        lines.append(
            f"order #{order.id}: {order.remaining}/{order.quantity} of "
            f"{string.ascii_uppercase[order.material - 1]} at {order.delivery_point} ({status})"
        )
    for entry in cfg.entry_points:
        q = state.queues[entry]
        ready = sum(1 for item in q if item.ready_at <= state.step)
        lines.append(f"entry {entry}: {len(q)} queued, {ready} ready")
    return "\n".join(lines)
