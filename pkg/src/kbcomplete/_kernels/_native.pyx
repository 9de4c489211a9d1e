# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Native body-satisfaction kernel; mirror of `pure.py` (see its docstring
for the encoding). The candidate loop runs without the GIL, so threaded
callers get real parallelism."""

from libc.stdint cimport int64_t, uint8_t

BACKEND = "native"

DEF MAX_VARS = 32
DEF MAX_ATOMS = 64

cdef int K_REL = 0
cdef int K_COUNT = 1
cdef int K_SET = 2
cdef int K_BIND = 3


cdef inline bint _contains(const int64_t[::1] arr, int64_t lo, int64_t hi,
                           int64_t val) noexcept nogil:
    cdef int64_t mid, end = hi
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < val:
            lo = mid + 1
        else:
            hi = mid
    return lo < end and arr[lo] == val


def satisfy_mask(int64_t n_slots,
                 const int64_t[::1] sp_indptr, const int64_t[::1] sp_vals,
                 const int64_t[::1] op_indptr, const int64_t[::1] op_vals,
                 const int64_t[::1] rs_indptr, const int64_t[::1] rs_vals,
                 const int64_t[::1] set_indptr, const int64_t[::1] set_vals,
                 const int64_t[:, ::1] atoms, int64_t n_vars,
                 const int64_t[:, ::1] rows, uint8_t[::1] out):
    cdef int64_t m = atoms.shape[0]
    cdef int64_t n_rows = rows.shape[0]
    cdef int64_t n_bound = rows.shape[1] if n_rows > 0 else 0
    if n_vars > MAX_VARS or m > MAX_ATOMS:
        raise ValueError("rule too large for the native kernel")

    cdef int64_t var_val[MAX_VARS]
    cdef bint var_set[MAX_VARS]
    cdef int64_t f_pos[MAX_ATOMS]
    cdef int64_t f_end[MAX_ATOMS]
    cdef int64_t f_var[MAX_ATOMS]
    cdef int f_src[MAX_ATOMS]
    cdef bint f_enum[MAX_ATOMS]

    cdef int64_t i, j, d, kind, p1, c1, c2, v1, v2, base, deg, lo, hi, pos, var
    cdef int src
    cdef bint advancing, ok, b1, b2
    cdef uint8_t result

    with nogil:
        for i in range(n_rows):
            for j in range(n_vars):
                var_set[j] = False
            for j in range(n_bound):
                var_val[j] = rows[i, j]
                var_set[j] = True

            d = 0
            advancing = True
            result = 0
            while True:
                if advancing:
                    if d == m:
                        result = 1
                        break
                    kind = atoms[d, 0]
                    p1 = atoms[d, 1]
                    c1 = atoms[d, 2]
                    if kind == K_COUNT:
                        v1 = c1 if c1 >= 0 else var_val[-c1 - 1]
                        base = p1 * n_slots + v1
                        deg = sp_indptr[base + 1] - sp_indptr[base]
                        if atoms[d, 3] == 0:
                            ok = deg < atoms[d, 4]
                        else:
                            ok = deg > atoms[d, 4]
                        f_enum[d] = False
                        if ok:
                            d += 1
                        else:
                            advancing = False
                            d -= 1
                        continue
                    if kind == K_SET:
                        v1 = c1 if c1 >= 0 else var_val[-c1 - 1]
                        ok = _contains(set_vals, set_indptr[p1], set_indptr[p1 + 1], v1)
                        if atoms[d, 3] != 0:
                            ok = not ok
                        f_enum[d] = False
                        if ok:
                            d += 1
                        else:
                            advancing = False
                            d -= 1
                        continue
                    if kind == K_BIND:
                        lo = rs_indptr[p1]
                        hi = rs_indptr[p1 + 1]
                        src = 2
                        var = -c1 - 1
                    else:  # K_REL
                        c2 = atoms[d, 3]
                        b1 = c1 >= 0 or var_set[-c1 - 1]
                        b2 = c2 >= 0 or var_set[-c2 - 1]
                        v1 = c1 if c1 >= 0 else var_val[-c1 - 1]
                        v2 = c2 if c2 >= 0 else var_val[-c2 - 1]
                        if b1 and b2:
                            base = p1 * n_slots + v1
                            ok = _contains(sp_vals, sp_indptr[base],
                                           sp_indptr[base + 1], v2)
                            f_enum[d] = False
                            if ok:
                                d += 1
                            else:
                                advancing = False
                                d -= 1
                            continue
                        if b1:
                            base = p1 * n_slots + v1
                            lo = sp_indptr[base]
                            hi = sp_indptr[base + 1]
                            src = 0
                            var = -c2 - 1
                        else:
                            base = p1 * n_slots + v2
                            lo = op_indptr[base]
                            hi = op_indptr[base + 1]
                            src = 1
                            var = -c1 - 1
                    if lo < hi:
                        f_enum[d] = True
                        f_pos[d] = lo
                        f_end[d] = hi
                        f_var[d] = var
                        f_src[d] = src
                        if src == 0:
                            var_val[var] = sp_vals[lo]
                        elif src == 1:
                            var_val[var] = op_vals[lo]
                        else:
                            var_val[var] = rs_vals[lo]
                        var_set[var] = True
                        d += 1
                    else:
                        advancing = False
                        d -= 1
                else:
                    if d < 0:
                        result = 0
                        break
                    if f_enum[d]:
                        pos = f_pos[d] + 1
                        if pos < f_end[d]:
                            f_pos[d] = pos
                            var = f_var[d]
                            if f_src[d] == 0:
                                var_val[var] = sp_vals[pos]
                            elif f_src[d] == 1:
                                var_val[var] = op_vals[pos]
                            else:
                                var_val[var] = rs_vals[pos]
                            advancing = True
                            d += 1
                        else:
                            var_set[f_var[d]] = False
                            d -= 1
                    else:
                        d -= 1
            out[i] = result
