"""Pure-Python evaluation kernels.

Same arithmetic, same operation order as the compiled kernels, so both
produce bit-identical values.  ``ev`` holds one value index per evidence
variable, -1 meaning unknown.
"""

import heapq

BACKEND = "python"


def new_values(prog):
    return [0.0] * prog.size


def new_scratch(prog):
    return None


def evaluate(prog, ev, values):
    """Fill ``values`` for every reachable node; returns nodes visited."""
    L = prog.as_lists()
    kind, num, esn_var, esn_val = L["kind"], L["num"], L["esn_var"], L["esn_val"]
    in_ptr, in_idx = L["in_ptr"], L["in_idx"]
    for nid in L["order"]:
        k = kind[nid]
        if k == 0:
            values[nid] = num[nid]
        elif k == 1:
            e = ev[esn_var[nid]]
            values[nid] = 1.0 if (e < 0 or e == esn_val[nid]) else 0.0
        elif k == 2:
            acc = 1.0
            for j in range(in_ptr[nid], in_ptr[nid + 1]):
                acc *= values[in_idx[j]]
            values[nid] = acc
        else:
            acc = 0.0
            for j in range(in_ptr[nid], in_ptr[nid + 1]):
                acc += values[in_idx[j]]
            values[nid] = acc
    return len(L["order"])


def propagate(prog, ev, var, values, scratch=None):
    """Refresh ``values`` after ``ev[var]`` changed.

    Flips the variable's evidence nodes, then recomputes dirty consumers in
    ascending id order so each node is recomputed at most once.  Returns the
    number of nodes whose value was recomputed (flipped ESNs included).
    """
    L = prog.as_lists()
    kind, esn_val = L["kind"], L["esn_val"]
    in_ptr, in_idx, out_ptr, out_idx = L["in_ptr"], L["in_idx"], L["out_ptr"], L["out_idx"]
    e = ev[var]
    heap = []
    queued = set()
    touched = 0
    var_ptr, var_idx = L["var_ptr"], L["var_idx"]
    for j in range(var_ptr[var], var_ptr[var + 1]):
        nid = var_idx[j]
        v = 1.0 if (e < 0 or e == esn_val[nid]) else 0.0
        if v != values[nid]:
            values[nid] = v
            touched += 1
            for k in range(out_ptr[nid], out_ptr[nid + 1]):
                c = out_idx[k]
                if c not in queued:
                    queued.add(c)
                    heapq.heappush(heap, c)
    while heap:
        nid = heapq.heappop(heap)
        touched += 1
        if kind[nid] == 2:
            acc = 1.0
            for j in range(in_ptr[nid], in_ptr[nid + 1]):
                acc *= values[in_idx[j]]
        else:
            acc = 0.0
            for j in range(in_ptr[nid], in_ptr[nid + 1]):
                acc += values[in_idx[j]]
        if acc == values[nid]:
            continue
        values[nid] = acc
        for k in range(out_ptr[nid], out_ptr[nid + 1]):
            c = out_idx[k]
            if c not in queued:
                queued.add(c)
                heapq.heappush(heap, c)
    return touched


def evaluate_batch(prog, ev, out):
    """Row b of ``out`` gets the query values under evidence row b of ``ev``."""
    qids = prog.as_lists()["query_ids"]
    vals = new_values(prog)
    n = 0
    for b, row in enumerate(ev):
        n = evaluate(prog, list(row), vals)
        out[b, :] = [vals[q] for q in qids]
    return n
