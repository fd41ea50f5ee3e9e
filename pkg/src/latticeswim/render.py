"""Static vector renders of trial outputs.

The scene SVG is written directly with its viewBox in meters (y flipped
via a scale transform), so the drawing maps 1:1 onto world coordinates:
lattice posts as circles, a handful of body snapshots, and the head
trajectory colored by time.  The speed-vs-time and G-vs-time plots use
matplotlib's SVG backend.
"""

import math

import numpy as np

from .cables import RobotGeometry
from .lattice import Lattice


def _time_color(frac: float) -> str:
    """Blue (start) to red (end)."""
    r = int(40 + 200 * frac)
    b = int(240 - 200 * frac)
    return f"#{r:02x}50{b:02x}"


def body_polyline(head_x, head_y, head_theta, alphas, g: RobotGeometry) -> np.ndarray:
    """Chain of link endpoints from a logged sample, (n_links+1, 2)."""
    n = g.n_links
    hl = 0.5 * g.link_length
    pts = np.zeros((n + 1, 2))
    pts[0] = (head_x, head_y)
    x, y, th = head_x, head_y, head_theta
    for k in range(n):
        x -= 2 * hl * math.cos(th)
        y -= 2 * hl * math.sin(th)
        pts[k + 1] = (x, y)
        if k < n - 1:
            th = th + float(alphas[k])
    return pts


def render_scene_svg(traj: dict, lat: Lattice, g: RobotGeometry, out_path,
                     n_snapshots: int = 8):
    """Write the trajectory scene as a standalone SVG (viewBox in meters)."""
    t = traj["t_s"]
    if len(t) == 0:
        raise ValueError("empty trajectory")
    hx, hy = traj["head_x_m"], traj["head_y_m"]
    xmin, ymin, xmax, ymax = lat.bounds
    xmin = min(xmin, hx.min()) - 0.1
    xmax = max(xmax, hx.max()) + 0.1
    ymin = min(ymin, hy.min()) - 0.1
    ymax = max(ymax, hy.max()) + 0.1
    w, h = xmax - xmin, ymax - ymin
    lines = []
    lines.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{xmin:.4f} {-ymax:.4f} {w:.4f} {h:.4f}" '
        f'width="{int(w * 400)}" height="{int(h * 400)}">')
    lines.append('<g transform="scale(1,-1)">')
    bx0, by0, bx1, by1 = lat.bounds
    lines.append(f'<rect x="{bx0}" y="{by0}" width="{bx1 - bx0}" '
                 f'height="{by1 - by0}" fill="#f4f8fb" stroke="#99aabb" '
                 f'stroke-width="0.005"/>')
    for px, py in lat.post_centers:
        lines.append(f'<circle cx="{px:.4f}" cy="{py:.4f}" r="{lat.post_radius}" '
                     f'fill="#8899aa" stroke="#556677" stroke-width="0.003"/>')
    # body snapshots
    idx = np.linspace(0, len(t) - 1, min(n_snapshots, len(t))).astype(int)
    for j, i in enumerate(idx):
        pts = body_polyline(hx[i], hy[i], traj["head_theta_rad"][i],
                            traj["alpha_rad"][i], g)
        d = " ".join(f"{x:.4f},{y:.4f}" for x, y in pts)
        frac = j / max(1, len(idx) - 1)
        lines.append(f'<polyline points="{d}" fill="none" '
                     f'stroke="{_time_color(frac)}" stroke-width="{g.link_width}" '
                     f'stroke-opacity="0.35" stroke-linecap="round" '
                     f'stroke-linejoin="round"/>')
    # head path, colored by time
    for i in range(len(t) - 1):
        frac = i / max(1, len(t) - 2)
        lines.append(f'<line x1="{hx[i]:.4f}" y1="{hy[i]:.4f}" '
                     f'x2="{hx[i + 1]:.4f}" y2="{hy[i + 1]:.4f}" '
                     f'stroke="{_time_color(frac)}" stroke-width="0.008"/>')
    lines.append(f'<circle cx="{hx[0]:.4f}" cy="{hy[0]:.4f}" r="0.02" fill="#1040d0"/>')
    lines.append(f'<circle cx="{hx[-1]:.4f}" cy="{hy[-1]:.4f}" r="0.02" fill="#d02010"/>')
    lines.append("</g></svg>")
    with open(out_path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def render_speed_plot(traj: dict, out_path):
    """Head speed magnitude vs time (finite differences of the head path)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = traj["t_s"]
    if len(t) < 2:
        raise ValueError("trajectory too short for a speed plot")
    dx = np.diff(traj["head_x_m"])
    dy = np.diff(traj["head_y_m"])
    dt = np.diff(t)
    speed = np.hypot(dx, dy) / np.where(dt > 0, dt, np.inf)
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t[1:], speed, lw=1.0, color="#205080")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("head speed (m/s)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)


def render_g_plot(traj: dict, out_path):
    """Per-joint compliance G vs time, head joint first."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = traj["t_s"]
    G = traj["G"]
    fig, ax = plt.subplots(figsize=(6, 3))
    n = G.shape[1]
    for j in range(n):
        ax.step(t, G[:, j], where="post", lw=1.0,
                label=f"joint {j + 1}" + (" (head)" if j == 0 else
                                          " (tail)" if j == n - 1 else ""))
    ax.set_xlabel("time (s)")
    ax.set_ylabel("G")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
