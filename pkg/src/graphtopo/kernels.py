"""Hot inner loops.

Four kernels carry most of the runtime:

* :func:`group_bcd` -- exact block coordinate descent for
  ``0.5 x'Gx - c'x + sum_g pen_g ||x_g||_2`` with equal-size contiguous groups.
  With group size 1 it is plain lasso coordinate descent; the graphical lasso,
  SEM, VARM, kernel SVARM and JISG solvers all reduce to it.
* :func:`factored_group_bcd` -- the same problem written against a design
  whose blocks have orthogonal columns, used by the kernel regressions.
* :func:`admm_lasso` -- ADMM for a strongly convex lasso given the
  eigendecomposition of its quadratic, used by the JISG topology step.
* :func:`fista_dual` -- the accelerated dual iteration for smooth-signal graph
  learning, working directly on edge index arrays so the degree operator is
  never materialized.

Each has a numba loop implementation and a numpy implementation with the same
signature; the module-level names point at whichever ``_accel.USE_NUMBA``
selects.  Both variants are importable explicitly for testing/benchmarking.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

_BISECT_STEPS = 200


# --------------------------------------------------------------------------
# group block coordinate descent
# --------------------------------------------------------------------------

def _group_solve_py(r, pen, lam, vec, out):
    """argmin_x 0.5 x'Ax - r'x + pen ||x|| with A = vec diag(lam) vec'."""
    gs = r.shape[0]
    rn = 0.0
    for k in range(gs):
        rn += r[k] * r[k]
    rn = np.sqrt(rn)
    if rn <= pen:
        for k in range(gs):
            out[k] = 0.0
        return
    rt = np.zeros(gs)
    for a in range(gs):
        s = 0.0
        for b in range(gs):
            s += vec[b, a] * r[b]
        rt[a] = s
    lmax = 0.0
    for k in range(gs):
        if lam[k] > lmax:
            lmax = lam[k]
    if lmax <= 0.0:
        for k in range(gs):
            out[k] = 0.0
        return
    tau = 0.0
    if pen > 0.0:
        lo = 0.0
        hi = pen * lmax / (rn - pen)
        # phi(tau) = sum (tau rt/(lam+tau))^2 is increasing; solve phi = pen^2
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            phi = 0.0
            for k in range(gs):
                v = mid * rt[k] / (lam[k] + mid)
                phi += v * v
            if phi > pen * pen:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-16 * hi:
                break
        tau = 0.5 * (lo + hi)
    coef = np.zeros(gs)
    for k in range(gs):
        den = lam[k] + tau
        if den > 1e-300:
            coef[k] = rt[k] / den
    for a in range(gs):
        s = 0.0
        for b in range(gs):
            s += vec[a, b] * coef[b]
        out[a] = s


def _group_bcd_loop(G, c, gsize, pens, eigval, eigvec, x0, tol, max_iter):
    n = c.shape[0]
    ng = n // gsize
    x = x0.copy()
    q = G @ x
    trace = np.zeros(max_iter + 1)
    r = np.zeros(gsize)
    xn = np.zeros(gsize)

    def objective(x, q):
        f = 0.0
        for i in range(n):
            f += 0.5 * x[i] * q[i] - c[i] * x[i]
        for g in range(ng):
            s = 0.0
            for k in range(gsize):
                s += x[g * gsize + k] ** 2
            f += pens[g] * np.sqrt(s)
        return f

    trace[0] = objective(x, q)
    it = 0
    for it in range(1, max_iter + 1):
        dmax = 0.0
        xmax = 0.0
        for g in range(ng):
            o = g * gsize
            if gsize == 1:
                a = G[o, o]
                rr = c[o] - q[o] + a * x[o]
                if a <= 0.0:
                    new = 0.0
                elif rr > pens[g]:
                    new = (rr - pens[g]) / a
                elif rr < -pens[g]:
                    new = (rr + pens[g]) / a
                else:
                    new = 0.0
                d = new - x[o]
                if d != 0.0:
                    for i in range(n):
                        q[i] += G[i, o] * d
                    x[o] = new
                if abs(d) > dmax:
                    dmax = abs(d)
                if abs(new) > xmax:
                    xmax = abs(new)
            else:
                for k in range(gsize):
                    s = c[o + k] - q[o + k]
                    for m in range(gsize):
                        s += G[o + k, o + m] * x[o + m]
                    r[k] = s
                _group_solve_kernel(r, pens[g], eigval[g], eigvec[g], xn)
                for k in range(gsize):
                    d = xn[k] - x[o + k]
                    if d != 0.0:
                        for i in range(n):
                            q[i] += G[i, o + k] * d
                        x[o + k] = xn[k]
                    if abs(d) > dmax:
                        dmax = abs(d)
                    if abs(xn[k]) > xmax:
                        xmax = abs(xn[k])
        trace[it] = objective(x, q)
        if dmax <= tol * max(1.0, xmax):
            break
    return x, it, trace[: it + 1]


def _group_solve_np(r, pen, lam, vec):
    rn = np.linalg.norm(r)
    if rn <= pen or lam.max() <= 0.0:
        return np.zeros_like(r)
    rt = vec.T @ r
    tau = 0.0
    if pen > 0.0:
        lo, hi = 0.0, max(pen * lam.max() / (rn - pen), 1e-300)
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            phi = np.sum((mid * rt / (lam + mid)) ** 2)
            if phi > pen * pen:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-16 * hi:
                break
        tau = 0.5 * (lo + hi)
    den = lam + tau
    coef = np.where(den > 1e-300, rt / np.where(den > 1e-300, den, 1.0), 0.0)
    return vec @ coef


def _group_bcd_np(G, c, gsize, pens, eigval, eigvec, x0, tol, max_iter):
    n = c.shape[0]
    ng = n // gsize
    x = x0.copy()
    q = G @ x
    diag = np.diag(G).copy()

    def objective():
        norms = np.sqrt((x.reshape(ng, gsize) ** 2).sum(axis=1))
        return 0.5 * x @ q - c @ x + pens @ norms

    trace = [objective()]
    it = 0
    for it in range(1, max_iter + 1):
        dmax = 0.0
        for g in range(ng):
            sl = slice(g * gsize, (g + 1) * gsize)
            if gsize == 1:
                o = g
                a = diag[o]
                rr = c[o] - q[o] + a * x[o]
                new = 0.0 if a <= 0.0 else np.sign(rr) * max(abs(rr) - pens[g], 0.0) / a
                d = new - x[o]
                if d != 0.0:
                    q += G[:, o] * d
                    x[o] = new
                dmax = max(dmax, abs(d))
            else:
                r = c[sl] - q[sl] + G[sl, sl] @ x[sl]
                xn = _group_solve_np(r, pens[g], eigval[g], eigvec[g])
                d = xn - x[sl]
                if np.any(d != 0.0):
                    q += G[:, sl] @ d
                    x[sl] = xn
                dmax = max(dmax, float(np.max(np.abs(d))))
        trace.append(objective())
        if dmax <= tol * max(1.0, float(np.max(np.abs(x))) if n else 0.0):
            break
    return x, it, np.asarray(trace)


_group_solve_kernel = njit(_group_solve_py)
group_bcd_numba = njit(_group_bcd_loop)


def group_eigs(G, gsize):
    """Per-group eigendecomposition of the diagonal blocks of ``G``."""
    n = G.shape[0]
    ng = n // gsize
    if gsize == 1:
        return np.diag(G).reshape(ng, 1).copy(), np.ones((ng, 1, 1))
    vals = np.empty((ng, gsize))
    vecs = np.empty((ng, gsize, gsize))
    for g in range(ng):
        sl = slice(g * gsize, (g + 1) * gsize)
        w, v = np.linalg.eigh(G[sl, sl])
        vals[g] = np.clip(w, 0.0, None)
        vecs[g] = v
    return vals, vecs


def group_bcd(G, c, pens, gsize=1, x0=None, tol=1e-12, max_iter=10000, eigs=None, backend=None):
    """Minimize ``0.5 x'Gx - c'x + sum_g pens[g] * ||x_g||_2``.

    ``G`` must be symmetric PSD, groups are the contiguous blocks of length
    ``gsize``. Each block is minimized exactly. Returns ``(x, sweeps, trace)``
    where ``trace[k]`` is the objective after ``k`` sweeps (monotone).
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    n = c.shape[0]
    if n % gsize:
        raise ValueError("length not a multiple of the group size")
    pens = np.ascontiguousarray(np.broadcast_to(np.asarray(pens, dtype=np.float64), (n // gsize,)))
    x0 = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    if n == 0:
        return x0, 0, np.zeros(1)
    vals, vecs = group_eigs(G, gsize) if eigs is None else eigs
    use = USE_NUMBA if backend is None else backend == "numba"
    fn = group_bcd_numba if use else _group_bcd_np
    return fn(G, c, int(gsize), pens, np.ascontiguousarray(vals), np.ascontiguousarray(vecs),
              x0, float(tol), int(max_iter))


# --------------------------------------------------------------------------
# group BCD on an orthogonal-column design (kernel regressions)
# --------------------------------------------------------------------------

def _diag_group_solve(r, pen, lam, out):
    """argmin_x 0.5 x'diag(lam)x - r'x + pen ||x|| for lam >= 0."""
    gs = r.shape[0]
    rn = 0.0
    lmax = 0.0
    for k in range(gs):
        rn += r[k] * r[k]
        if lam[k] > lmax:
            lmax = lam[k]
    rn = np.sqrt(rn)
    if rn <= pen or lmax <= 0.0:
        for k in range(gs):
            out[k] = 0.0
        return
    tau = 0.0
    if pen > 0.0:
        lo = 0.0
        hi = pen * lmax / (rn - pen)
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            phi = 0.0
            for k in range(gs):
                v = mid * r[k] / (lam[k] + mid)
                phi += v * v
            if phi > pen * pen:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-16 * hi:
                break
        tau = 0.5 * (lo + hi)
    for k in range(gs):
        den = lam[k] + tau
        out[k] = r[k] / den if den > 1e-300 else 0.0


def _factored_bcd_loop(C, s, y, pens, x0, tol, max_iter):
    ng, T, d = C.shape
    x = x0.copy()
    res = y.copy()
    for g in range(ng):
        for k in range(d):
            if x[g, k] != 0.0:
                for t in range(T):
                    res[t] -= C[g, t, k] * x[g, k]
    trace = np.zeros(max_iter + 1)
    r = np.zeros(d)
    xn = np.zeros(d)

    def objective(x, res):
        f = 0.0
        for t in range(T):
            f += 0.5 * res[t] * res[t]
        for g in range(ng):
            q = 0.0
            for k in range(d):
                q += x[g, k] * x[g, k]
            f += pens[g] * np.sqrt(q)
        return f

    trace[0] = objective(x, res)
    it = 0
    for it in range(1, max_iter + 1):
        dmax = 0.0
        xmax = 0.0
        for g in range(ng):
            for k in range(d):
                acc = s[g, k] * x[g, k]
                for t in range(T):
                    acc += C[g, t, k] * res[t]
                r[k] = acc
            _diag_group_solve_kernel(r, pens[g], s[g], xn)
            for k in range(d):
                dk = xn[k] - x[g, k]
                if dk != 0.0:
                    for t in range(T):
                        res[t] -= C[g, t, k] * dk
                    x[g, k] = xn[k]
                if abs(dk) > dmax:
                    dmax = abs(dk)
                if abs(xn[k]) > xmax:
                    xmax = abs(xn[k])
        trace[it] = objective(x, res)
        if dmax <= tol * max(1.0, xmax):
            break
    return x, it, trace[: it + 1]


def _factored_bcd_np(C, s, y, pens, x0, tol, max_iter):
    ng, T, d = C.shape
    x = x0.copy()
    res = y - np.einsum("gtk,gk->t", C, x)

    def objective():
        return 0.5 * res @ res + pens @ np.sqrt((x * x).sum(axis=1))

    trace = [objective()]
    it = 0
    for it in range(1, max_iter + 1):
        dmax = 0.0
        for g in range(ng):
            r = s[g] * x[g] + C[g].T @ res
            rn = np.linalg.norm(r)
            lam = s[g]
            if rn <= pens[g] or lam.max() <= 0.0:
                xn = np.zeros(d)
            else:
                tau = 0.0
                if pens[g] > 0.0:
                    lo, hi = 0.0, pens[g] * lam.max() / (rn - pens[g])
                    for _ in range(_BISECT_STEPS):
                        mid = 0.5 * (lo + hi)
                        if np.sum((mid * r / (lam + mid)) ** 2) > pens[g] ** 2:
                            hi = mid
                        else:
                            lo = mid
                        if hi - lo <= 1e-16 * hi:
                            break
                    tau = 0.5 * (lo + hi)
                den = lam + tau
                xn = np.where(den > 1e-300, r / np.where(den > 1e-300, den, 1.0), 0.0)
            dx = xn - x[g]
            if np.any(dx != 0.0):
                res -= C[g] @ dx
                x[g] = xn
            dmax = max(dmax, float(np.max(np.abs(dx))))
        trace.append(objective())
        if dmax <= tol * max(1.0, float(np.max(np.abs(x)))):
            break
    return x, it, np.asarray(trace)


_diag_group_solve_kernel = njit(_diag_group_solve)
factored_bcd_numba = njit(_factored_bcd_loop)


def factored_group_bcd(C, s, y, pens, x0=None, tol=1e-12, max_iter=10000, backend=None):
    """Minimize ``0.5 ||y - sum_g C_g x_g||^2 + sum_g pens[g] ||x_g||``.

    ``C`` has shape ``(groups, T, d)`` and every ``C_g' C_g`` must equal
    ``diag(s[g])``, so each block minimization is a scalar bisection.
    Works on the residual, never forming the full Gram matrix.
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    s = np.ascontiguousarray(s, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    ng, _, d = C.shape
    pens = np.ascontiguousarray(np.broadcast_to(np.asarray(pens, dtype=np.float64), (ng,)))
    x0 = np.zeros((ng, d)) if x0 is None else np.array(x0, dtype=np.float64).reshape(ng, d)
    use = USE_NUMBA if backend is None else backend == "numba"
    fn = factored_bcd_numba if use else _factored_bcd_np
    return fn(C, s, y, pens, x0, float(tol), int(max_iter))


# --------------------------------------------------------------------------
# ADMM lasso with a free penalty parameter (JISG topology rows)
# --------------------------------------------------------------------------

def _admm_lasso_loop(vals, vecs, vecs_t, c, pen, rho, v0, u0, tol, max_iter):
    """Minimize ``0.5 x'Qx - c'x + pen ||x||_1`` with ``Q = vecs diag(vals) vecs'``.

    Scaled-form ADMM on ``x = v`` with residual balancing of ``rho``.
    Returns ``(v, u, rho, iterations)``.
    """
    n = c.shape[0]
    v = v0.copy()
    u = u0.copy()
    k = 0
    while k < max_iter:
        k += 1
        rhs = vecs_t @ (c + rho * (v - u))
        x = vecs @ (rhs / (vals + rho))
        thr = pen / rho
        r_prim = 0.0
        r_dual = 0.0
        vn = 0.0
        for j in range(n):
            a = x[j] + u[j]
            nv = 0.0
            if a > thr:
                nv = a - thr
            elif a < -thr:
                nv = a + thr
            r_dual += (nv - v[j]) ** 2
            v[j] = nv
            u[j] = a - nv
            r_prim += (x[j] - nv) ** 2
            vn += nv * nv
        r_prim = np.sqrt(r_prim)
        r_dual = rho * np.sqrt(r_dual)
        scale = max(1.0, np.sqrt(vn))
        if r_prim <= tol * scale and r_dual <= tol * scale:
            break
        # the eigenbasis makes a new rho free
        if r_prim > 10.0 * r_dual:
            rho *= 2.0
            u /= 2.0
        elif r_dual > 10.0 * r_prim:
            rho /= 2.0
            u *= 2.0
    return v, u, rho, k


def _admm_lasso_np(vals, vecs, vecs_t, c, pen, rho, v0, u0, tol, max_iter):
    v = v0.copy()
    u = u0.copy()
    k = 0
    while k < max_iter:
        k += 1
        x = vecs @ ((vecs_t @ (c + rho * (v - u))) / (vals + rho))
        a = x + u
        nv = np.sign(a) * np.maximum(np.abs(a) - pen / rho, 0.0)
        r_dual = rho * np.linalg.norm(nv - v)
        v = nv
        u = a - nv
        r_prim = np.linalg.norm(x - v)
        scale = max(1.0, float(np.linalg.norm(v)))
        if r_prim <= tol * scale and r_dual <= tol * scale:
            break
        if r_prim > 10.0 * r_dual:
            rho *= 2.0
            u = u / 2.0
        elif r_dual > 10.0 * r_prim:
            rho /= 2.0
            u = u * 2.0
    return v, u, rho, k


admm_lasso_numba = njit(_admm_lasso_loop)


def admm_lasso(vals, vecs, c, pen, rho=None, v0=None, u0=None, tol=1e-12, max_iter=20000,
               backend=None):
    """ADMM for ``0.5 x'Qx - c'x + pen ||x||_1`` given ``Q``'s eigenpairs."""
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    vecs = np.ascontiguousarray(vecs, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    n = c.shape[0]
    if rho is None:
        rho = float(np.sqrt(max(vals[0], 1e-12) * vals[-1])) if n else 1.0
    v0 = np.zeros(n) if v0 is None else np.array(v0, dtype=np.float64)
    u0 = np.zeros(n) if u0 is None else np.array(u0, dtype=np.float64)
    if n == 0:
        return v0, u0, rho, 0
    use = USE_NUMBA if backend is None else backend == "numba"
    fn = admm_lasso_numba if use else _admm_lasso_np
    return fn(vals, vecs, np.ascontiguousarray(vecs.T), c, float(pen), float(rho), v0, u0,
              float(tol), int(max_iter))


# --------------------------------------------------------------------------
# dual FISTA for smooth-signal graph learning
# --------------------------------------------------------------------------

def _fista_dual_loop(e, rows, cols, n_nodes, alpha, beta, lam0, tol, max_iter, n_record):
    m = e.shape[0]
    lip = (n_nodes - 1) / beta
    lam_prev = lam0.copy()
    lam = lam0.copy()
    omega = lam0.copy()
    t = 1.0
    hist = np.zeros((n_record, m))
    wbar = np.zeros(m)
    sw = np.zeros(n_nodes)
    k = 0
    for k in range(1, max_iter + 1):
        for i in range(n_nodes):
            sw[i] = 0.0
        for p in range(m):
            v = (omega[rows[p]] + omega[cols[p]] - 2.0 * e[p]) / (2.0 * beta)
            wbar[p] = v if v > 0.0 else 0.0
            sw[rows[p]] += wbar[p]
            sw[cols[p]] += wbar[p]
        diff = 0.0
        nrm = 0.0
        for i in range(n_nodes):
            a = sw[i] - lip * omega[i]
            u = 0.5 * (a + np.sqrt(a * a + 4.0 * alpha * lip))
            new = omega[i] - (sw[i] - u) / lip
            lam_prev[i] = lam[i]
            lam[i] = new
            diff += (new - lam_prev[i]) ** 2
            nrm += new * new
        if k <= n_record:
            for p in range(m):
                v = (lam[rows[p]] + lam[cols[p]] - 2.0 * e[p]) / (2.0 * beta)
                hist[k - 1, p] = v if v > 0.0 else 0.0
        t_next = 0.5 + np.sqrt(0.25 + t * t)
        mom = (t - 1.0) / t_next
        for i in range(n_nodes):
            omega[i] = lam[i] + mom * (lam[i] - lam_prev[i])
        t = t_next
        if np.sqrt(diff) <= tol * max(1.0, np.sqrt(nrm)):
            break
    return lam, omega, t, k, hist[: min(k, n_record)]


def _fista_dual_np(e, rows, cols, n_nodes, alpha, beta, lam0, tol, max_iter, n_record):
    lip = (n_nodes - 1) / beta
    lam = lam0.copy()
    omega = lam0.copy()
    t = 1.0
    hist = []
    k = 0
    for k in range(1, max_iter + 1):
        wbar = np.maximum(0.0, (omega[rows] + omega[cols] - 2.0 * e) / (2.0 * beta))
        sw = np.bincount(rows, wbar, n_nodes) + np.bincount(cols, wbar, n_nodes)
        a = sw - lip * omega
        u = 0.5 * (a + np.sqrt(a * a + 4.0 * alpha * lip))
        lam_prev = lam
        lam = omega - (sw - u) / lip
        if k <= n_record:
            hist.append(np.maximum(0.0, (lam[rows] + lam[cols] - 2.0 * e) / (2.0 * beta)))
        t_next = 0.5 + np.sqrt(0.25 + t * t)
        omega = lam + ((t - 1.0) / t_next) * (lam - lam_prev)
        t = t_next
        if np.linalg.norm(lam - lam_prev) <= tol * max(1.0, np.linalg.norm(lam)):
            break
    hist = np.asarray(hist) if hist else np.zeros((0, e.shape[0]))
    return lam, omega, t, k, hist


fista_dual_numba = njit(_fista_dual_loop)


def fista_dual(e, rows, cols, n_nodes, alpha, beta, lam0, tol, max_iter, n_record=0, backend=None):
    """Run the dual FISTA loop; returns ``(lam, omega, t, iterations, history)``.

    ``history[k-1]`` is the primal iterate recovered from ``lam_k``.
    """
    use = USE_NUMBA if backend is None else backend == "numba"
    fn = fista_dual_numba if use else _fista_dual_np
    return fn(np.ascontiguousarray(e, dtype=np.float64), rows, cols, int(n_nodes), float(alpha),
              float(beta), np.array(lam0, dtype=np.float64), float(tol), int(max_iter), int(n_record))
