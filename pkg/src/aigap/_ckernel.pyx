# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled board kernel. Same API and results as ``_pykernel``."""

from libc.string cimport memcpy, memset

cdef enum:
    MAXP = 625  # 25 x 25

cdef int W_STONES = 8
cdef int W_LIBERTIES = 2
cdef int W_CENTRE = 1


cdef inline int _nbrs(int idx, int size, int* out) noexcept nogil:
    cdef int r = idx // size
    cdef int c = idx - r * size
    cdef int k = 0
    if r > 0:
        out[k] = idx - size
        k += 1
    if r < size - 1:
        out[k] = idx + size
        k += 1
    if c > 0:
        out[k] = idx - 1
        k += 1
    if c < size - 1:
        out[k] = idx + 1
        k += 1
    return k


cdef int _group(unsigned char* g, int size, int start, int* stones,
                unsigned char* mark, unsigned char* libmark) noexcept nogil:
    """Flood fill from ``start``. Fills ``stones`` (returns count via
    stones[MAXP]) and returns the liberty count. ``mark`` and ``libmark``
    must be zeroed by the caller and are left dirty."""
    cdef int color = g[start]
    cdef int n_st = 1
    cdef int top = 0
    cdef int libs = 0
    cdef int nb[4]
    cdef int k, j, p, q
    stones[0] = start
    mark[start] = 1
    while top < n_st:
        p = stones[top]
        top += 1
        k = _nbrs(p, size, nb)
        for j in range(k):
            q = nb[j]
            if g[q] == color:
                if not mark[q]:
                    mark[q] = 1
                    stones[n_st] = q
                    n_st += 1
            elif g[q] == 0:
                if not libmark[q]:
                    libmark[q] = 1
                    libs += 1
    stones[MAXP] = n_st
    return libs


cdef int _place(unsigned char* g, int size, int idx, int color,
                int* captured, int* n_cap) noexcept nogil:
    """In-place play. Returns ko point (>= -1) or -2 on suicide."""
    cdef int stones[MAXP + 1]
    cdef unsigned char mark[MAXP]
    cdef unsigned char seen[MAXP]
    cdef unsigned char libmark[MAXP]
    cdef int nb[4]
    cdef int k, j, s, libs, q
    cdef int npts = size * size
    cdef int opp = 3 - color
    g[idx] = color
    n_cap[0] = 0
    memset(seen, 0, npts)
    k = _nbrs(idx, size, nb)
    for j in range(k):
        q = nb[j]
        if g[q] == opp and not seen[q]:
            memset(mark, 0, npts)
            memset(libmark, 0, npts)
            libs = _group(g, size, q, stones, mark, libmark)
            for s in range(stones[MAXP]):
                seen[stones[s]] = 1
            if libs == 0:
                for s in range(stones[MAXP]):
                    captured[n_cap[0]] = stones[s]
                    n_cap[0] += 1
    for s in range(n_cap[0]):
        g[captured[s]] = 0
    memset(mark, 0, npts)
    memset(libmark, 0, npts)
    libs = _group(g, size, idx, stones, mark, libmark)
    if libs == 0:
        return -2
    if n_cap[0] == 1 and stones[MAXP] == 1 and libs == 1:
        return captured[0]
    return -1


cdef int _score(const unsigned char* g, int size, int color) noexcept nogil:
    cdef int npts = size * size
    cdef int span = size - 1
    cdef int opp = 3 - color
    cdef int stones = 0, libs = 0, close = 0
    cdef int i, j, k, v, w, r, c, cw, mine, theirs
    cdef int nb[4]
    for i in range(npts):
        v = g[i]
        if v == 0:
            mine = 0
            theirs = 0
            k = _nbrs(i, size, nb)
            for j in range(k):
                w = g[nb[j]]
                if w == color:
                    mine = 1
                elif w == opp:
                    theirs = 1
            libs += mine - theirs
        else:
            r = i // size
            c = i - r * size
            cw = 2 * span - abs(2 * c - span) - abs(2 * r - span)
            if v == color:
                stones += 1
                close += cw
            else:
                stones -= 1
                close -= cw
    return W_STONES * stones + W_LIBERTIES * libs + W_CENTRE * close


def neighbors(int size):
    cdef int nb[4]
    cdef int k, idx
    out = []
    for idx in range(size * size):
        k = _nbrs(idx, size, nb)
        out.append(tuple(nb[j] for j in range(k)))
    return tuple(out)


def centre_weights(int size):
    cdef int span = size - 1
    return tuple(
        2 * span - abs(2 * c - span) - abs(2 * r - span)
        for r in range(size)
        for c in range(size)
    )


def place_stone(bytes grid, int size, int idx, int color):
    cdef unsigned char g[MAXP]
    cdef int captured[MAXP]
    cdef int n_cap = 0
    cdef int ko
    memcpy(g, <const unsigned char*>grid, size * size)
    ko = _place(g, size, idx, color, captured, &n_cap)
    if ko == -2:
        return None
    caps = sorted([captured[j] for j in range(n_cap)])
    return (<char*>g)[:size * size], tuple(caps), ko


cdef bint _is_legal(const unsigned char* grid, int size, int idx, int color, int ko) noexcept nogil:
    cdef unsigned char g[MAXP]
    cdef int captured[MAXP]
    cdef int n_cap = 0
    cdef int nb[4]
    cdef int k, j
    if grid[idx] != 0 or idx == ko:
        return False
    k = _nbrs(idx, size, nb)
    for j in range(k):
        if grid[nb[j]] == 0:
            return True
    memcpy(g, grid, size * size)
    return _place(g, size, idx, color, captured, &n_cap) != -2


def is_legal(bytes grid, int size, int idx, int color, int ko):
    return bool(_is_legal(<const unsigned char*>grid, size, idx, color, ko))


def legal_points(bytes grid, int size, int color, int ko):
    cdef const unsigned char* g = grid
    cdef int i
    return [i for i in range(size * size) if _is_legal(g, size, i, color, ko)]


def dead_groups(bytes grid, int size):
    cdef unsigned char g[MAXP]
    cdef unsigned char seen[MAXP]
    cdef unsigned char mark[MAXP]
    cdef unsigned char libmark[MAXP]
    cdef int stones[MAXP + 1]
    cdef int npts = size * size
    cdef int i, s, libs
    cdef int dead = 0
    memcpy(g, <const unsigned char*>grid, npts)
    memset(seen, 0, npts)
    for i in range(npts):
        if g[i] != 0 and not seen[i]:
            memset(mark, 0, npts)
            memset(libmark, 0, npts)
            libs = _group(g, size, i, stones, mark, libmark)
            for s in range(stones[MAXP]):
                seen[stones[s]] = 1
            if libs == 0:
                dead += 1
    return dead


def state_score(bytes grid, int size, int color):
    return _score(<const unsigned char*>grid, size, color)


def successor_scores(bytes grid, int size, int color, int ko):
    cdef const unsigned char* src = grid
    cdef unsigned char g[MAXP]
    cdef int captured[MAXP]
    cdef int n_cap = 0
    cdef int npts = size * size
    cdef int i, r
    out = []
    for i in range(npts):
        if src[i] != 0 or i == ko:
            continue
        memcpy(g, src, npts)
        r = _place(g, size, i, color, captured, &n_cap)
        if r == -2:
            continue
        out.append((i, _score(g, size, 3 - color)))
    return out
