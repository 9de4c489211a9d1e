"""Pure-Python body-satisfaction kernel.

Reference implementation of the satisfaction search; `_native.pyx` is a
line-for-line Cython mirror of this logic. Both evaluate, for each candidate
binding of the head variables, whether an encoded rule body has at least one
satisfying assignment of its remaining variables.

Atom rows are int64 sextuples:

    kind 0 (relational):   [0, rel, arg1, arg2, 0, 0]
    kind 1 (object count): [1, rel, arg1, op, bound, 0]   op: 0 = less, 1 = more
    kind 2 (membership):   [2, set_index, arg1, negate, 0, 0]
    kind 3 (bind subject): [3, rel, arg1, 0, 0, 0]

Argument codes: a variable v is stored as -(v + 1); constants are term ids.
The plan compiler orders atoms so that count/membership checks only run once
their argument is bound, and prefixes a bind-subject row before a relational
atom whose arguments are both unbound.
"""

BACKEND = "python"

K_REL, K_COUNT, K_SET, K_BIND = 0, 1, 2, 3


def _contains(arr, lo, hi, val):
    end = hi
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] < val:
            lo = mid + 1
        else:
            hi = mid
    return lo < end and arr[lo] == val


def satisfy_mask(
    n_slots,
    sp_indptr,
    sp_vals,
    op_indptr,
    op_vals,
    rs_indptr,
    rs_vals,
    set_indptr,
    set_vals,
    atoms,
    n_vars,
    rows,
    out,
):
    m = len(atoms)
    n_rows = len(rows)
    n_bound = rows.shape[1] if n_rows else 0
    var_val = [0] * max(n_vars, 1)
    var_set = [False] * max(n_vars, 1)
    f_pos = [0] * max(m, 1)
    f_end = [0] * max(m, 1)
    f_var = [0] * max(m, 1)
    f_src = [0] * max(m, 1)
    f_enum = [False] * max(m, 1)
    srcs = (sp_vals, op_vals, rs_vals)

    for i in range(n_rows):
        for v in range(n_vars):
            var_set[v] = False
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
                    assert c1 >= 0 or var_set[-c1 - 1], "unbound count argument"
                    v1 = c1 if c1 >= 0 else var_val[-c1 - 1]
                    base = p1 * n_slots + v1
                    deg = sp_indptr[base + 1] - sp_indptr[base]
                    ok = deg < atoms[d, 4] if atoms[d, 3] == 0 else deg > atoms[d, 4]
                    f_enum[d] = False
                    if ok:
                        d += 1
                    else:
                        advancing = False
                        d -= 1
                    continue
                if kind == K_SET:
                    assert c1 >= 0 or var_set[-c1 - 1], "unbound membership argument"
                    v1 = c1 if c1 >= 0 else var_val[-c1 - 1]
                    found = _contains(set_vals, set_indptr[p1], set_indptr[p1 + 1], v1)
                    ok = found != bool(atoms[d, 3])
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
                        ok = _contains(sp_vals, sp_indptr[base], sp_indptr[base + 1], v2)
                        f_enum[d] = False
                        if ok:
                            d += 1
                        else:
                            advancing = False
                            d -= 1
                        continue
                    assert b1 or b2, "relational atom with two unbound arguments"
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
                    var_val[var] = srcs[src][lo]
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
                        var_val[f_var[d]] = srcs[f_src[d]][pos]
                        advancing = True
                        d += 1
                    else:
                        var_set[f_var[d]] = False
                        d -= 1
                else:
                    d -= 1
        out[i] = result
