"""Deterministic SVG rendering of transport graphs and measure curves.

Coordinates are intrinsic: the canvas auto-fits the drawing with a 5% margin
and the vertical axis is flipped so y grows upward. Stroke widths follow
max(0.3, 3 * weight^alpha) in user units. Output is a plain string built in a
fixed order, so identical inputs give identical bytes.
"""

CANVAS = 800.0
SOURCE_COLOR = "#1f6fb4"
SINK_COLOR = "#c23b22"
BRANCH_COLOR = "#555555"
EDGE_COLOR = "#333333"


def _fmt(x):
    return f"{x:.4f}"


def _fit(points, canvas=CANVAS, margin=0.05):
    xs = [p[0] for p in points]
    ys = [p[1] if len(p) > 1 else 0.0 for p in points]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-9)
    pad = margin * span
    scale = canvas / (span + 2 * pad)
    width = (hi_x - lo_x + 2 * pad) * scale
    height = (hi_y - lo_y + 2 * pad) * scale

    def to_px(p):
        x = (p[0] - lo_x + pad) * scale
        y = ((p[1] if len(p) > 1 else 0.0) - lo_y + pad) * scale
        return x, height - y

    return to_px, width, height


def render_graph(g, alpha, stroke_base=3.0):
    """SVG of a transport graph: edges widened by weight^alpha, terminals marked."""
    pts = g.points()
    everything = list(pts.values())
    everything += [p for p, _ in g.source.atoms] + [p for p, _ in g.target.atoms]
    to_px, width, height = _fit(everything)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
    ]
    for tail, head, w in g.edges:
        x1, y1 = to_px(pts[tail])
        x2, y2 = to_px(pts[head])
        sw = max(0.3, stroke_base * w ** alpha)
        lines.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="{EDGE_COLOR}" '
            f'stroke-width="{_fmt(sw)}" stroke-linecap="round"/>'
        )
    terminal_coords = {p for p, _ in g.source.atoms} | {p for p, _ in g.target.atoms}
    for v, p in g.vertices:
        if p in terminal_coords:
            continue
        x, y = to_px(p)
        lines.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.0" '
            f'fill="{BRANCH_COLOR}"/>'
        )
    for p, m in g.source.atoms:
        x, y = to_px(p)
        r = max(2.5, 12.0 * m ** 0.5)
        lines.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
            f'fill="{SOURCE_COLOR}" fill-opacity="0.85"/>'
        )
    for p, m in g.target.atoms:
        x, y = to_px(p)
        r = max(2.5, 12.0 * m ** 0.5)
        lines.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" '
            f'fill="{SINK_COLOR}" fill-opacity="0.85"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_curve_animation(c, alpha, seconds=6.0):
    """Looping SVG animation: one dot per move sliding along its segment."""
    everything = [p for p, _ in c.base.atoms]
    for mv in c.moves:
        everything += [mv.src, mv.dst]
    to_px, width, height = _fit(everything)
    lo, hi = c.domain
    span = max(hi - lo, 1e-12)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}">',
        f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="white"/>',
    ]
    for mv in c.moves:
        x1, y1 = to_px(mv.src)
        x2, y2 = to_px(mv.dst)
        lines.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" '
            f'y2="{_fmt(y2)}" stroke="#dddddd" stroke-width="1.0"/>'
        )
    for p, m in c.base.atoms:
        x, y = to_px(p)
        lines.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" '
            f'r="{_fmt(max(2.0, 10.0 * m ** 0.5))}" fill="{SOURCE_COLOR}" '
            f'fill-opacity="0.35"/>'
        )
    for mv in c.moves:
        x1, y1 = to_px(mv.src)
        x2, y2 = to_px(mv.dst)
        begin = (mv.t0 - lo) / span * seconds
        dur = max((mv.t1 - mv.t0) / span * seconds, 1e-3)
        r = max(2.0, 10.0 * mv.weight ** 0.5)
        lines.append(
            f'<circle cx="{_fmt(x1)}" cy="{_fmt(y1)}" r="{_fmt(r)}" '
            f'fill="{SINK_COLOR}" fill-opacity="0.9">'
            f'<animate attributeName="cx" from="{_fmt(x1)}" to="{_fmt(x2)}" '
            f'begin="{_fmt(begin)}s" dur="{_fmt(dur)}s" fill="freeze" '
            f'repeatCount="1"/>'
            f'<animate attributeName="cy" from="{_fmt(y1)}" to="{_fmt(y2)}" '
            f'begin="{_fmt(begin)}s" dur="{_fmt(dur)}s" fill="freeze" '
            f'repeatCount="1"/>'
            f'</circle>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
