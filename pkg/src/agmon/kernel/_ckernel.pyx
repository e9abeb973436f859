# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled replay kernel; same contract as ``_pykernel``."""

NAME = "native"

cdef enum:
    GUARD_ALARM = 1
    STRUCTURAL_ALARM = 2
    MAX_SLOTS = 256


cdef struct Prog:
    int n_chan
    const int* dispatch
    const int* target
    const int* g_start
    const int* g_end
    const int* u_start
    const int* u_end
    const int* c_start
    const int* c_end
    const int* a_lk
    const int* a_lr
    const double* a_lv
    const int* a_op
    const int* a_rk
    const int* a_rr
    const double* a_rv
    const int* u_dst
    const int* u_k
    const int* u_r
    const double* u_v


cdef class _Views:
    # holds the memoryviews alive while raw pointers into them are used
    cdef const int[::1] dispatch, target, g_start, g_end, u_start, u_end
    cdef const int[::1] c_start, c_end, a_lk, a_lr, a_op, a_rk, a_rr, u_dst, u_k, u_r
    cdef const double[::1] a_lv, a_rv, u_v, init
    cdef Prog prog

    def __cinit__(self, p):
        self.dispatch = p.dispatch
        self.target = p.target
        self.g_start = p.g_start
        self.g_end = p.g_end
        self.u_start = p.u_start
        self.u_end = p.u_end
        self.c_start = p.c_start
        self.c_end = p.c_end
        self.a_lk = p.a_lk
        self.a_lr = p.a_lr
        self.a_lv = p.a_lv
        self.a_op = p.a_op
        self.a_rk = p.a_rk
        self.a_rr = p.a_rr
        self.a_rv = p.a_rv
        self.u_dst = p.u_dst
        self.u_k = p.u_k
        self.u_r = p.u_r
        self.u_v = p.u_v
        self.init = p.init
        self.prog.n_chan = p.n_chan
        self.prog.dispatch = &self.dispatch[0]
        self.prog.target = &self.target[0]
        self.prog.g_start = &self.g_start[0]
        self.prog.g_end = &self.g_end[0]
        self.prog.u_start = &self.u_start[0]
        self.prog.u_end = &self.u_end[0]
        self.prog.c_start = &self.c_start[0]
        self.prog.c_end = &self.c_end[0]
        self.prog.a_lk = &self.a_lk[0]
        self.prog.a_lr = &self.a_lr[0]
        self.prog.a_lv = &self.a_lv[0]
        self.prog.a_op = &self.a_op[0]
        self.prog.a_rk = &self.a_rk[0]
        self.prog.a_rr = &self.a_rr[0]
        self.prog.a_rv = &self.a_rv[0]
        self.prog.u_dst = &self.u_dst[0]
        self.prog.u_k = &self.u_k[0]
        self.prog.u_r = &self.u_r[0]
        self.prog.u_v = &self.u_v[0]


cdef _Views _views(p):
    v = getattr(p, "_native_views", None)
    if v is None:
        if len(p.init) > MAX_SLOTS:
            raise ValueError("too many variables for the native kernel")
        v = _Views(p)
        p._native_views = v
    return <_Views>v


cdef inline double _val(int kind, int ref, double const_, const double* slots, double v) noexcept nogil:
    if kind == 0:
        return v
    if kind == 1:
        return slots[ref]
    return const_


cdef inline bint _cmp(int op, double x, double y) noexcept nogil:
    if op == 0:
        return x < y
    if op == 1:
        return x <= y
    if op == 2:
        return x > y
    if op == 3:
        return x >= y
    if op == 4:
        return x == y
    return x != y


cdef inline long long _failed_mask(const Prog* p, int t, const double* slots, double v) noexcept nogil:
    cdef long long mask = 0
    cdef long long bit = 1
    cdef int cl, a
    cdef bint ok
    for cl in range(p.g_start[t], p.g_end[t]):
        ok = False
        for a in range(p.c_start[cl], p.c_end[cl]):
            if _cmp(p.a_op[a],
                    _val(p.a_lk[a], p.a_lr[a], p.a_lv[a], slots, v),
                    _val(p.a_rk[a], p.a_rr[a], p.a_rv[a], slots, v)):
                ok = True
                break
        if not ok:
            mask |= bit
        bit <<= 1
    return mask


cdef inline void _apply(const Prog* p, int t, double* slots, double v) noexcept nogil:
    cdef double tmp[MAX_SLOTS]
    cdef int u, lo = p.u_start[t], hi = p.u_end[t]
    if lo == hi:
        return
    for u in range(lo, hi):
        tmp[u - lo] = _val(p.u_k[u], p.u_r[u], p.u_v[u], slots, v)
    for u in range(lo, hi):
        slots[p.u_dst[u]] = tmp[u - lo]


def first_reject(p, chans, vals):
    """Index of the first rejected event, or -1 if the trace is accepted."""
    cdef _Views views = _views(p)
    cdef const Prog* prog = &views.prog
    cdef const int[::1] cs = chans
    cdef const double[::1] vs = vals
    cdef double slots[MAX_SLOTS]
    cdef Py_ssize_t n = cs.shape[0], pos
    cdef int loc = p.start, t, i
    cdef Py_ssize_t result = -1
    cdef double v
    for i in range(views.init.shape[0]):
        slots[i] = views.init[i]
    with nogil:
        for pos in range(n):
            t = prog.dispatch[loc * prog.n_chan + cs[pos]]
            if t < 0:
                result = pos
                break
            v = vs[pos]
            if prog.g_start[t] != prog.g_end[t] and _failed_mask(prog, t, slots, v):
                result = pos
                break
            _apply(prog, t, slots, v)
            loc = prog.target[t]
    return result


def monitor(p, chans, vals, bint halt):
    """Replay with forced transitions on guard failure (see ``_pykernel.monitor``)."""
    cdef _Views views = _views(p)
    cdef const Prog* prog = &views.prog
    cdef const int[::1] cs = chans
    cdef const double[::1] vs = vals
    cdef double slots[MAX_SLOTS]
    cdef Py_ssize_t n = cs.shape[0], pos
    cdef int loc = p.start, t, i
    cdef long long mask
    cdef double v
    alarms = []
    for i in range(views.init.shape[0]):
        slots[i] = views.init[i]
    for pos in range(n):
        t = prog.dispatch[loc * prog.n_chan + cs[pos]]
        if t < 0:
            alarms.append((pos, STRUCTURAL_ALARM, 0, loc))
            if halt:
                return alarms, loc, pos + 1, True
            continue
        v = vs[pos]
        if prog.g_start[t] != prog.g_end[t]:
            mask = _failed_mask(prog, t, slots, v)
            if mask:
                alarms.append((pos, GUARD_ALARM, mask, loc))
        _apply(prog, t, slots, v)
        loc = prog.target[t]
    return alarms, loc, n, False
