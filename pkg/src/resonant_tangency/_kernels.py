"""Scalar inner loops of the map family.

Every kernel works on plain floats and a packed parameter vector
``prm = [alpha, a10, c20, d50, mu1, mu2, mu3, mu4]``.  The same source is
built twice: once under ``numba.njit`` and once undecorated.  The public names
are bound to the compiled set unless numba is missing or the environment sets
``RESONANT_TANGENCY_NUMBA=0``.  Both sets stay importable as ``PY`` and ``NB``
so the benchmark can time them side by side.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
_flag = os.environ.get("RESONANT_TANGENCY_NUMBA", "1").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag not in ("0", "false", "no", "off")


def _identity(func):
    return func


def _build(jit):
    @jit
    def step(x, y, prm, v):
        """f(x, y), its Jacobian and the derivative of f along ``v`` in mu."""
        alpha = prm[0]
        a10 = prm[1]
        c20 = prm[2]
        d50 = prm[3]
        mu1 = prm[4]
        mu2 = prm[5]
        mu3 = prm[6]
        mu4 = prm[7]
        h0 = (2.0 * alpha + 1.0) / 3.0
        h1 = (alpha + 2.0) / 3.0

        lam = alpha + mu2
        a1 = a10 + mu4
        sig = 1.0 / alpha
        xy = x * y

        u0x = lam * x * (1.0 + a1 * xy)
        u0y = sig * y * (1.0 - a10 * xy)
        # d U0 / d mu along v: only mu2 and mu4 enter
        g0x = v[1] * x * (1.0 + a1 * xy) + v[3] * lam * x * xy
        if y <= h0:
            return (
                u0x,
                u0y,
                lam * (1.0 + 2.0 * a1 * xy),
                lam * a1 * x * x,
                -sig * a10 * y * y,
                sig * (1.0 - 2.0 * a10 * xy),
                g0x,
                0.0,
            )

        u0x_x = lam * (1.0 + 2.0 * a1 * xy)
        u0x_y = lam * a1 * x * x
        u0y_x = -sig * a10 * y * y
        u0y_y = sig * (1.0 - 2.0 * a10 * xy)

        ym1 = y - 1.0
        u1x = 1.0 + c20 * ym1
        u1y = mu1 + (1.0 + mu3) * x + d50 * ym1 * ym1
        u1y_x = 1.0 + mu3
        u1y_y = 2.0 * d50 * ym1
        g1y = v[0] + v[2] * x
        if y >= h1:
            return u1x, u1y, 0.0, c20, u1y_x, u1y_y, 0.0, g1y

        width = h1 - h0
        z = (y - h0) / width
        # clamp against seam overshoot
        if z < 0.0:
            z = 0.0
        elif z > 1.0:
            z = 1.0
        r = 3.0 * z * z - 2.0 * z * z * z
        dr = (6.0 * z - 6.0 * z * z) / width
        q = 1.0 - r
        return (
            q * u0x + r * u1x,
            q * u0y + r * u1y,
            q * u0x_x,
            q * u0x_y + r * c20 + dr * (u1x - u0x),
            q * u0y_x + r * u1y_x,
            q * u0y_y + r * u1y_y + dr * (u1y - u0y),
            q * g0x,
            r * g1y,
        )

    @jit
    def iterate(x, y, n, prm, v, bound):
        """Iterate ``n`` steps from (x, y).

        Returns ``(x_n, y_n, m00, m01, m10, m11, dx, dy, ok)``: the end point,
        the accumulated Jacobian (later steps multiply on the left), the
        derivative of the end point along the parameter direction ``v``, and
        ``ok`` which is false once an iterate leaves ``|x|, |y| <= bound``.
        """
        m00 = 1.0
        m01 = 0.0
        m10 = 0.0
        m11 = 1.0
        dx = 0.0
        dy = 0.0
        for _ in range(n):
            fx, fy, j00, j01, j10, j11, gx, gy = step(x, y, prm, v)
            ndx = j00 * dx + j01 * dy + gx
            ndy = j10 * dx + j11 * dy + gy
            n00 = j00 * m00 + j01 * m10
            n01 = j00 * m01 + j01 * m11
            n10 = j10 * m00 + j11 * m10
            n11 = j10 * m01 + j11 * m11
            m00, m01, m10, m11 = n00, n01, n10, n11
            dx, dy = ndx, ndy
            x, y = fx, fy
            if not (abs(x) <= bound and abs(y) <= bound):
                return x, y, m00, m01, m10, m11, dx, dy, False
        return x, y, m00, m01, m10, m11, dx, dy, True

    @jit
    def trajectory(x, y, n, prm):
        """The ``(n + 1, 2)`` array of iterates starting with (x, y)."""
        v = np.zeros(4)
        out = np.empty((n + 1, 2))
        out[0, 0] = x
        out[0, 1] = y
        for i in range(n):
            res = step(x, y, prm, v)
            x = res[0]
            y = res[1]
            out[i + 1, 0] = x
            out[i + 1, 1] = y
        return out

    @jit
    def map_many(xs, ys, prm):
        """Apply f once to every point of two equal-length arrays."""
        v = np.zeros(4)
        n = xs.shape[0]
        ox = np.empty(n)
        oy = np.empty(n)
        for i in range(n):
            res = step(xs[i], ys[i], prm, v)
            ox[i] = res[0]
            oy[i] = res[1]
        return ox, oy

    @jit
    def newton(x, y, n, prm, tol, max_iter, max_halvings, bound):
        """Newton iteration on F(p) = f^n(p) - p.

        Returns ``(x, y, residual, iterations, status)``; status is 0 on
        convergence, 1 when ``max_iter`` ran out, 2 on escape, a singular
        Jacobian or a failed line search.  ``max_halvings = 0`` gives plain
        Newton.  Converged means residual and last step both below ``tol``,
        or residual below ``tol`` and a further full step no longer reduces
        it (the seed may already be a converged point).
        """
        v = np.zeros(4)
        fx, fy, m00, m01, m10, m11, _, _, ok = iterate(x, y, n, prm, v, bound)
        if not ok:
            return x, y, np.inf, 0, 2
        rx = fx - x
        ry = fy - y
        res = max(abs(rx), abs(ry))
        for it in range(1, max_iter + 1):
            a = m00 - 1.0
            b = m01
            c = m10
            d = m11 - 1.0
            det = a * d - b * c
            if det == 0.0 or not math.isfinite(det):
                if res <= tol:
                    return x, y, res, it, 0
                return x, y, res, it, 2
            sx = -(d * rx - b * ry) / det
            sy = -(a * ry - c * rx) / det
            polishing = res <= tol
            t = 1.0
            accepted = False
            nx = x
            ny = y
            nrx = rx
            nry = ry
            nres = res
            n00 = m00
            n01 = m01
            n10 = m10
            n11 = m11
            tries = 1 if polishing else max_halvings + 1
            for h in range(tries):
                nx = x + t * sx
                ny = y + t * sy
                fx, fy, n00, n01, n10, n11, _, _, ok = iterate(nx, ny, n, prm, v, bound)
                if ok:
                    nrx = fx - nx
                    nry = fy - ny
                    nres = max(abs(nrx), abs(nry))
                    if nres < res or (not polishing and (max_halvings == 0 or nres <= 10.0 * tol)):
                        accepted = True
                        break
                t *= 0.5
            if not accepted:
                if polishing:
                    # the step no longer helps: already at round-off level
                    return x, y, res, it, 0
                return x, y, res, it, 2
            stepsize = t * max(abs(sx), abs(sy))
            x = nx
            y = ny
            rx = nrx
            ry = nry
            res = nres
            m00 = n00
            m01 = n01
            m10 = n10
            m11 = n11
            if not math.isfinite(res):
                return x, y, res, it, 2
            if res <= tol and stepsize <= tol:
                return x, y, res, it, 0
        if res <= tol:
            return x, y, res, max_iter, 0
        return x, y, res, max_iter, 1

    return SimpleNamespace(
        step=step, iterate=iterate, trajectory=trajectory, map_many=map_many, newton=newton
    )


PY = _build(_identity)
NB = _build(numba.njit(cache=True, nogil=True)) if HAVE_NUMBA else None

_active = NB if USE_NUMBA else PY
step = _active.step
iterate = _active.iterate
trajectory = _active.trajectory
map_many = _active.map_many
newton = _active.newton


def backend() -> str:
    """Name of the active kernel set, ``"numba"`` or ``"python"``."""
    return "numba" if USE_NUMBA else "python"
