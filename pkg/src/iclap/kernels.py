"""Numeric inner loops, compiled with numba when available.

Every kernel is written in nopython-compatible style and works both as
plain Python over numpy arrays and under ``numba.njit``.  The compiled
path is the default; set ``ICLAP_NUMBA=0`` in the environment to force
the pure-numpy fallback (useful for debugging and as the baseline in
``benchmarks/bench_kernels.py``).

Kernels are self-contained on purpose: the ICP loop inlines its own
nearest-neighbor search and rigid solve so the whole registration runs
as one compiled, cacheable function.
"""

import os

import numpy as np


def _numba_requested() -> bool:
    value = os.environ.get("ICLAP_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "no", "off")


# ---------------------------------------------------------------------------
# image moments


def _moments_upto3(frame):
    """Raw image moments m[p, q] = sum v * x^p * y^q for p + q <= 3.

    x is the column index, y the row index, both 0-based.  Entries with
    p + q > 3 stay zero.
    """
    rows, cols = frame.shape
    m = np.zeros((4, 4), np.float64)
    for r in range(rows):
        y = float(r)
        for c in range(cols):
            v = frame[r, c]
            if v == 0.0:
                continue
            x = float(c)
            xp = 1.0
            for p in range(4):
                yq = 1.0
                for q in range(4 - p):
                    m[p, q] += v * xp * yq
                    yq *= y
                xp *= x
    return m


def _zernike_accumulate(frame, cx, cy, radius, n_arr, m_arr, coefs):
    """Magnitudes |A_nm| of the listed Zernike moments.

    Pixels are mapped into the unit disk centered on (cx, cy) with the
    given radius; the angular factor is computed from integer powers of
    the normalized conjugate offset so that point symmetry is exact.
    """
    rows, cols = frame.shape
    k = n_arr.shape[0]
    nmax = 0
    for j in range(k):
        if n_arr[j] > nmax:
            nmax = n_arr[j]
    acc = np.zeros(k, np.complex128)
    rho_pow = np.empty(nmax + 1, np.float64)
    ang_pow = np.empty(nmax + 1, np.complex128)
    for r in range(rows):
        for c in range(cols):
            v = frame[r, c]
            if v == 0.0:
                continue
            dx = (c - cx) / radius
            dy = (r - cy) / radius
            rho2 = dx * dx + dy * dy
            if rho2 > 1.0 + 1e-9:
                continue
            rho = np.sqrt(rho2)
            rho_pow[0] = 1.0
            for e in range(1, nmax + 1):
                rho_pow[e] = rho_pow[e - 1] * rho
            if rho > 0.0:
                unit = complex(dx / rho, -dy / rho)
            else:
                unit = complex(1.0, 0.0)
            ang_pow[0] = complex(1.0, 0.0)
            for e in range(1, nmax + 1):
                ang_pow[e] = ang_pow[e - 1] * unit
            for j in range(k):
                n = n_arr[j]
                mm = m_arr[j]
                radial = 0.0
                for s in range((n - mm) // 2 + 1):
                    radial += coefs[j, s] * rho_pow[n - 2 * s]
                acc[j] += v * radial * ang_pow[mm]
    out = np.empty(k, np.float64)
    for j in range(k):
        out[j] = abs(acc[j]) * (n_arr[j] + 1.0) / np.pi
    return out


# ---------------------------------------------------------------------------
# codebook assignment


def _assign_nearest(X, C):
    """Index of the nearest row of C for every row of X (0-based).

    Ties go to the lowest index.  Returns (labels, squared distances).
    """
    n, d = X.shape
    k = C.shape[0]
    labels = np.empty(n, np.int64)
    dist2 = np.empty(n, np.float64)
    for i in range(n):
        best = np.inf
        bj = 0
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = X[i, t] - C[j, t]
                s += diff * diff
            if s < best:
                best = s
                bj = j
        labels[i] = bj
        dist2[i] = best
    return labels, dist2


# ---------------------------------------------------------------------------
# k-d tree query

_STACK_CAP = 96  # one pending branch per tree level; fits any realistic n


def _kd_query(points, node_point, node_axis, node_left, node_right, queries):
    """Exact nearest neighbor for each query row.

    Traverses the median-split tree iteratively.  Equal distances are
    resolved toward the lowest point index, and subtrees at exactly the
    pruning bound are still visited, so results match a linear scan
    even in tie cases.  Returns (indices, squared distances).
    """
    nq, d = queries.shape
    out_idx = np.empty(nq, np.int64)
    out_d2 = np.empty(nq, np.float64)
    stack_node = np.empty(_STACK_CAP, np.int64)
    stack_key = np.empty(_STACK_CAP, np.float64)
    for qi in range(nq):
        best = np.inf
        bidx = -1
        stack_node[0] = 0
        stack_key[0] = 0.0
        top = 1
        while top > 0:
            top -= 1
            node = stack_node[top]
            if stack_key[top] > best:
                continue
            while node != -1:
                p = node_point[node]
                s = 0.0
                for t in range(d):
                    diff = queries[qi, t] - points[p, t]
                    s += diff * diff
                if s < best or (s == best and p < bidx):
                    best = s
                    bidx = p
                ax = node_axis[node]
                diff = queries[qi, ax] - points[p, ax]
                if diff < 0.0:
                    near = node_left[node]
                    far = node_right[node]
                else:
                    near = node_right[node]
                    far = node_left[node]
                dd = diff * diff
                if dd <= best and far != -1:
                    stack_node[top] = far
                    stack_key[top] = dd
                    top += 1
                node = near
        out_idx[qi] = bidx
        out_d2[qi] = best
    return out_idx, out_d2


# ---------------------------------------------------------------------------
# rigid alignment


def _kabsch_solve(P, Q):
    """Least-squares proper rotation R and translation T mapping P onto Q.

    Cross-covariance of the centered sets is factored by SVD; the last
    column of V is flipped when V U^T would be a reflection.  A zero
    cross-covariance (single point, coincident points) yields R = I.
    """
    n, d = P.shape
    pbar = np.zeros(d, np.float64)
    qbar = np.zeros(d, np.float64)
    for i in range(n):
        for t in range(d):
            pbar[t] += P[i, t]
            qbar[t] += Q[i, t]
    for t in range(d):
        pbar[t] /= n
        qbar[t] /= n
    H = np.zeros((d, d), np.float64)
    for i in range(n):
        for a in range(d):
            pa = P[i, a] - pbar[a]
            for b in range(d):
                H[a, b] += pa * (Q[i, b] - qbar[b])
    if not np.any(H):
        R = np.eye(d)
    else:
        U, _, Vt = np.linalg.svd(H)
        V = np.ascontiguousarray(Vt.T)
        Ut = np.ascontiguousarray(U.T)
        D = np.eye(d)
        D[d - 1, d - 1] = np.linalg.det(V @ Ut)
        R = V @ D @ Ut
    T = qbar - R @ pbar
    return R, T


def _icp_run(test, model, node_point, node_axis, node_left, node_right,
             R0, T0, max_iters, abs_tol, rel_thr, rel_eps):
    """Full ICP loop: match, solve, re-evaluate, until a stop rule fires.

    Each iteration matches the currently transformed test points to
    their nearest model points through the k-d tree, re-solves the
    rigid transform from the original test points to the matched model
    points, and records the RMS distance of the matched pairs under the
    new transform.  Stop codes: 0 absolute tolerance, 1 max iterations,
    2 relative change.
    """
    n, d = test.shape
    R = R0.copy()
    T = T0.copy()
    matched = np.empty((n, d), np.float64)
    trace = np.empty(max_iters, np.float64)
    stack_node = np.empty(_STACK_CAP, np.int64)
    stack_key = np.empty(_STACK_CAP, np.float64)
    prev = 0.0
    code = 1
    iters = 0
    for it in range(max_iters):
        X = test @ np.ascontiguousarray(R.T)
        for i in range(n):
            for t in range(d):
                X[i, t] += T[t]
        for i in range(n):
            best = np.inf
            bidx = -1
            stack_node[0] = 0
            stack_key[0] = 0.0
            top = 1
            while top > 0:
                top -= 1
                node = stack_node[top]
                if stack_key[top] > best:
                    continue
                while node != -1:
                    p = node_point[node]
                    s = 0.0
                    for t in range(d):
                        diff = X[i, t] - model[p, t]
                        s += diff * diff
                    if s < best or (s == best and p < bidx):
                        best = s
                        bidx = p
                    ax = node_axis[node]
                    diff = X[i, ax] - model[p, ax]
                    if diff < 0.0:
                        near = node_left[node]
                        far = node_right[node]
                    else:
                        near = node_right[node]
                        far = node_left[node]
                    dd = diff * diff
                    if dd <= best and far != -1:
                        stack_node[top] = far
                        stack_key[top] = dd
                        top += 1
                    node = near
            for t in range(d):
                matched[i, t] = model[bidx, t]
        # rigid solve from the original test points to the matched points
        pbar = np.zeros(d, np.float64)
        qbar = np.zeros(d, np.float64)
        for i in range(n):
            for t in range(d):
                pbar[t] += test[i, t]
                qbar[t] += matched[i, t]
        for t in range(d):
            pbar[t] /= n
            qbar[t] /= n
        H = np.zeros((d, d), np.float64)
        for i in range(n):
            for a in range(d):
                pa = test[i, a] - pbar[a]
                for b in range(d):
                    H[a, b] += pa * (matched[i, b] - qbar[b])
        if not np.any(H):
            R = np.eye(d)
        else:
            U, _, Vt = np.linalg.svd(H)
            V = np.ascontiguousarray(Vt.T)
            Ut = np.ascontiguousarray(U.T)
            D = np.eye(d)
            D[d - 1, d - 1] = np.linalg.det(V @ Ut)
            R = V @ D @ Ut
        T = qbar - R @ pbar
        s2 = 0.0
        for i in range(n):
            for a in range(d):
                v = T[a] - matched[i, a]
                for b in range(d):
                    v += R[a, b] * test[i, b]
                s2 += v * v
        e = np.sqrt(s2 / n)
        trace[it] = e
        iters = it + 1
        if e <= abs_tol:
            code = 0
            break
        if it == max_iters - 1:
            code = 1
            break
        if it >= 1:
            denom = prev if prev > rel_eps else rel_eps
            if abs(prev - e) / denom < rel_thr:
                code = 2
                break
        prev = e
    return R, T, trace, iters, code


# ---------------------------------------------------------------------------
# implementation selection

NUMPY_IMPL = {
    "moments_upto3": _moments_upto3,
    "zernike_accumulate": _zernike_accumulate,
    "assign_nearest": _assign_nearest,
    "kd_query": _kd_query,
    "kabsch_solve": _kabsch_solve,
    "icp_run": _icp_run,
}

NUMBA_IMPL = None
if _numba_requested():
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_IMPL = None
    else:
        NUMBA_IMPL = {
            name: njit(cache=True)(fn) for name, fn in NUMPY_IMPL.items()
        }

if NUMBA_IMPL is not None:
    ACTIVE = "numba"
    _impl = NUMBA_IMPL
else:
    ACTIVE = "numpy"
    _impl = NUMPY_IMPL

USING_NUMBA = ACTIVE == "numba"

moments_upto3 = _impl["moments_upto3"]
zernike_accumulate = _impl["zernike_accumulate"]
assign_nearest = _impl["assign_nearest"]
kd_query = _impl["kd_query"]
kabsch_solve = _impl["kabsch_solve"]
icp_run = _impl["icp_run"]


def implementations():
    """Available kernel sets by name ("numpy" always, "numba" when compiled)."""
    out = {"numpy": NUMPY_IMPL}
    if NUMBA_IMPL is not None:
        out["numba"] = NUMBA_IMPL
    return out
