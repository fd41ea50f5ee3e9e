"""Compiled inner loop of the planar multibody simulator.

Maximal-coordinate chain: every link is a free rigid body (x, y, theta)
and the joints are realized as stiff penalty attachments between the
parent link's tail point and the child link's head point, sharing the
one-sided penalty machinery used for the cables.  Forces per step:

  * anisotropic quadratic surface drag (tangential/normal/rotational),
  * one-sided cable tension springs driving each joint toward its
    commanded set lengths,
  * capsule-vs-circle post contacts (penalty normal + regularized
    Coulomb friction),
  * joint attachment springs/dampers and mechanical joint-limit stops.

Integration is semi-implicit Euler with normal-direction added mass; the
joint-limit is enforced exactly after the pose update by rotating the
child link about its head attachment point with zero restitution.

Everything here is plain float64 math over preallocated arrays so numba
can compile it once; the friendly API lives in dynamics.py.
"""

import math

import numpy as np
from numba import njit

# diagnostics slot layout for the diag array
DIAG_DRAG_POWER_MAX = 0    # max over steps of total drag power (should be <= ~0)
DIAG_MAX_PENETRATION = 1   # max post penetration depth, m
DIAG_MAX_JOINT_DRIFT = 2   # max attachment-point separation, m
DIAG_CONTACT_COUNT = 3     # link-post contact count at the END of the block
DIAG_CONTACT_ANY = 4       # 1.0 if any contact occurred during the block
DIAG_SIZE = 5

STATUS_OK = 0
STATUS_NONFINITE = 1


@njit(cache=True)
def _wrap_pi(a):
    """Wrap an angle difference into [-pi, pi]."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@njit(cache=True)
def run_block(pose, vel, n_steps, dt,
              # link properties
              link_len, link_w, m_link, i_link, m_add_n, i_add,
              # cable geometry / penalties
              anchor_r, anchor_phi, mech_limit, k_cable, c_cable, max_tension,
              set_len_l, set_len_r,
              # joint attachment + limit penalties
              k_joint, c_joint, k_lim, c_lim,
              # hydrodynamics
              rho, c_normal, c_tangent, c_rot,
              # contacts
              posts, post_r, k_con, c_con, mu, v_reg,
              # outputs
              max_tension_l, max_tension_r, contact_flags, diag):
    """Advance the chain n_steps of dt with fixed cable commands.

    pose (n,3) and vel (n,3) are updated in place.  max_tension_* collect
    the largest cable tensions per joint over the block (for the torque
    feedback), contact_flags marks links touching a post at the last
    step, diag collects the diagnostics listed above.  Returns STATUS_OK
    or STATUS_NONFINITE.
    """
    n = pose.shape[0]
    n_joints = n - 1
    n_posts = posts.shape[0]
    hl = 0.5 * link_len
    wr = 0.5 * link_w
    side_area = link_len * link_w
    rot_drag_const = 0.5 * rho * c_rot * link_w * link_len ** 4 / 32.0
    reach = hl + wr + post_r          # broad-phase radius for contacts
    fx = np.zeros(n)
    fy = np.zeros(n)
    tq = np.zeros(n)
    n_contacts = 0

    for _ in range(n_steps):
        for k in range(n):
            fx[k] = 0.0
            fy[k] = 0.0
            tq[k] = 0.0
        drag_power = 0.0
        n_contacts = 0

        # --- drag ---------------------------------------------------
        for k in range(n):
            c = math.cos(pose[k, 2])
            s = math.sin(pose[k, 2])
            vt = vel[k, 0] * c + vel[k, 1] * s
            vn = -vel[k, 0] * s + vel[k, 1] * c
            w = vel[k, 2]
            ft = -0.5 * rho * c_tangent * side_area * abs(vt) * vt
            fn = -0.5 * rho * c_normal * side_area * abs(vn) * vn
            td = -rot_drag_const * abs(w) * w
            fx[k] += ft * c - fn * s
            fy[k] += ft * s + fn * c
            tq[k] += td
            drag_power += ft * vt + fn * vn + td * w

        # --- joints: attachment, cables, mechanical limit -------------
        for j in range(n_joints):
            p = j
            ch = j + 1
            cp = math.cos(pose[p, 2])
            sp = math.sin(pose[p, 2])
            cc = math.cos(pose[ch, 2])
            sc = math.sin(pose[ch, 2])

            # attachment penalty between parent tail and child head
            rpx = -hl * cp
            rpy = -hl * sp
            rcx = hl * cc
            rcy = hl * sc
            ax = pose[p, 0] + rpx
            ay = pose[p, 1] + rpy
            bx = pose[ch, 0] + rcx
            by = pose[ch, 1] + rcy
            dx = bx - ax
            dy = by - ay
            drift = math.hypot(dx, dy)
            if drift > diag[DIAG_MAX_JOINT_DRIFT]:
                diag[DIAG_MAX_JOINT_DRIFT] = drift
            vax = vel[p, 0] - vel[p, 2] * rpy
            vay = vel[p, 1] + vel[p, 2] * rpx
            vbx = vel[ch, 0] - vel[ch, 2] * rcy
            vby = vel[ch, 1] + vel[ch, 2] * rcx
            fjx = -k_joint * dx - c_joint * (vbx - vax)
            fjy = -k_joint * dy - c_joint * (vby - vay)
            fx[ch] += fjx
            fy[ch] += fjy
            tq[ch] += rcx * fjy - rcy * fjx
            fx[p] -= fjx
            fy[p] -= fjy
            tq[p] -= rpx * fjy - rpy * fjx

            # cable tensions -> joint torque on alpha = theta_child - theta_parent
            alpha = _wrap_pi(pose[ch, 2] - pose[p, 2])
            arate = vel[ch, 2] - vel[p, 2]
            two_r = 2.0 * anchor_r
            len_l = two_r * math.cos(-0.5 * alpha + anchor_phi)
            len_r = two_r * math.cos(0.5 * alpha + anchor_phi)
            dlen_l = anchor_r * math.sin(anchor_phi - 0.5 * alpha)
            dlen_r = -anchor_r * math.sin(anchor_phi + 0.5 * alpha)
            torque = 0.0
            excess = len_l - set_len_l[j]
            if excess > 0.0:
                rate = dlen_l * arate
                tension = k_cable * excess + (c_cable * rate if rate > 0.0 else 0.0)
                if tension > max_tension:
                    tension = max_tension     # motor stall limit
                torque -= tension * dlen_l
                if tension > max_tension_l[j]:
                    max_tension_l[j] = tension
            excess = len_r - set_len_r[j]
            if excess > 0.0:
                rate = dlen_r * arate
                tension = k_cable * excess + (c_cable * rate if rate > 0.0 else 0.0)
                if tension > max_tension:
                    tension = max_tension
                torque -= tension * dlen_r
                if tension > max_tension_r[j]:
                    max_tension_r[j] = tension

            # one-sided mechanical stop (backed up by exact projection below)
            if alpha > mech_limit:
                torque += -k_lim * (alpha - mech_limit)
                if arate > 0.0:
                    torque -= c_lim * arate
            elif alpha < -mech_limit:
                torque += -k_lim * (alpha + mech_limit)
                if arate < 0.0:
                    torque -= c_lim * arate

            tq[ch] += torque
            tq[p] -= torque

        # --- post contacts -------------------------------------------
        for k in range(n):
            contact_flags[k] = 0
        for k in range(n):
            c = math.cos(pose[k, 2])
            s = math.sin(pose[k, 2])
            ax = pose[k, 0] - hl * c
            ay = pose[k, 1] - hl * s
            for q in range(n_posts):
                px = posts[q, 0]
                py = posts[q, 1]
                ddx = pose[k, 0] - px
                ddy = pose[k, 1] - py
                if ddx * ddx + ddy * ddy > reach * reach:
                    continue
                # closest point on the link segment to the post center
                tpar = (px - ax) * c + (py - ay) * s
                if tpar < 0.0:
                    tpar = 0.0
                elif tpar > link_len:
                    tpar = link_len
                qx = ax + tpar * c
                qy = ay + tpar * s
                nx = qx - px
                ny = qy - py
                dist = math.hypot(nx, ny)
                rsum = post_r + wr
                if dist >= rsum:
                    continue
                if dist > 1.0e-12:
                    nx /= dist
                    ny /= dist
                else:
                    nx, ny = 1.0, 0.0
                pen = rsum - dist
                if pen > diag[DIAG_MAX_PENETRATION]:
                    diag[DIAG_MAX_PENETRATION] = pen
                # material point on the link surface facing the post
                rx = qx - wr * nx - pose[k, 0]
                ry = qy - wr * ny - pose[k, 1]
                vpx = vel[k, 0] - vel[k, 2] * ry
                vpy = vel[k, 1] + vel[k, 2] * rx
                vn = vpx * nx + vpy * ny
                f_norm = k_con * pen + (c_con * (-vn) if vn < 0.0 else 0.0)
                fcx = f_norm * nx
                fcy = f_norm * ny
                if mu > 0.0:
                    vtx = vpx - vn * nx
                    vty = vpy - vn * ny
                    vt = math.hypot(vtx, vty)
                    if vt > 1.0e-12:
                        scale = vt / v_reg
                        if scale > 1.0:
                            scale = 1.0
                        f_fric = mu * f_norm * scale
                        fcx -= f_fric * vtx / vt
                        fcy -= f_fric * vty / vt
                fx[k] += fcx
                fy[k] += fcy
                tq[k] += rx * fcy - ry * fcx
                n_contacts += 1
                contact_flags[k] = 1
                diag[DIAG_CONTACT_ANY] = 1.0

        if drag_power > diag[DIAG_DRAG_POWER_MAX]:
            diag[DIAG_DRAG_POWER_MAX] = drag_power

        # --- integrate (semi-implicit, anisotropic added mass) ---------
        for k in range(n):
            c = math.cos(pose[k, 2])
            s = math.sin(pose[k, 2])
            ft = fx[k] * c + fy[k] * s
            fn = -fx[k] * s + fy[k] * c
            vt = vel[k, 0] * c + vel[k, 1] * s + dt * ft / m_link
            vn = -vel[k, 0] * s + vel[k, 1] * c + dt * fn / (m_link + m_add_n)
            vel[k, 0] = vt * c - vn * s
            vel[k, 1] = vt * s + vn * c
            vel[k, 2] += dt * tq[k] / (i_link + i_add)
            pose[k, 0] += dt * vel[k, 0]
            pose[k, 1] += dt * vel[k, 1]
            pose[k, 2] += dt * vel[k, 2]

        # --- exact joint-limit projection (restitution 0) --------------
        for j in range(n_joints):
            p = j
            ch = j + 1
            alpha = _wrap_pi(pose[ch, 2] - pose[p, 2])
            if alpha > mech_limit:
                over = alpha - mech_limit
            elif alpha < -mech_limit:
                over = alpha + mech_limit
            else:
                continue
            hx = pose[ch, 0] + hl * math.cos(pose[ch, 2])
            hy = pose[ch, 1] + hl * math.sin(pose[ch, 2])
            pose[ch, 2] -= over
            pose[ch, 0] = hx - hl * math.cos(pose[ch, 2])
            pose[ch, 1] = hy - hl * math.sin(pose[ch, 2])
            if over > 0.0 and vel[ch, 2] > vel[p, 2]:
                vel[ch, 2] = vel[p, 2]
            elif over < 0.0 and vel[ch, 2] < vel[p, 2]:
                vel[ch, 2] = vel[p, 2]

        # --- health check ----------------------------------------------
        ok = True
        for k in range(n):
            for c3 in range(3):
                if not (math.isfinite(pose[k, c3]) and math.isfinite(vel[k, c3])):
                    ok = False
        if not ok:
            return STATUS_NONFINITE

    diag[DIAG_CONTACT_COUNT] = float(n_contacts)
    return STATUS_OK
