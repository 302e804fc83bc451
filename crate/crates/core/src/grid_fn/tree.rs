//! Row-major indexing of the levels of a rooted `2^d`-ary tree.

/// Number of cubes at relative level `k`.
#[inline]
pub fn level_len(dim: usize, k: u32) -> usize {
    1usize << (k as usize * dim)
}

/// Lattice coordinates of index `idx` at level `k`.
#[inline]
pub fn decode(dim: usize, k: u32, idx: usize) -> Vec<u64> {
    let mask = (1usize << k) - 1;
    (0..dim)
        .map(|i| ((idx >> (k as usize * (dim - 1 - i))) & mask) as u64)
        .collect()
}

#[inline]
pub fn encode(k: u32, coords: &[u64]) -> usize {
    coords
        .iter()
        .fold(0usize, |acc, &c| (acc << k) | c as usize)
}

/// Index of the parent (level `k-1`) of cube `idx` at level `k >= 1`.
#[inline]
pub fn parent_index(dim: usize, k: u32, idx: usize) -> usize {
    let k = k as usize;
    let mask = (1usize << k) - 1;
    let mut out = 0usize;
    for i in 0..dim {
        let c = (idx >> (k * (dim - 1 - i))) & mask;
        out = (out << (k - 1)) | (c >> 1);
    }
    out
}

/// Index of child `e` (bit `d-1-i` of `e` is the offset along axis `i`) of cube `idx` at level `k`.
#[inline]
pub fn child_index(dim: usize, k: u32, idx: usize, e: usize) -> usize {
    let k = k as usize;
    let mask = (1usize << k) - 1;
    let mut out = 0usize;
    for i in 0..dim {
        let c = (idx >> (k * (dim - 1 - i))) & mask;
        let b = (e >> (dim - 1 - i)) & 1;
        out = (out << (k + 1)) | (2 * c + b);
    }
    out
}

/// Index at level `k` of the ancestor of finest cell `cell` (level `depth`).
#[inline]
pub fn ancestor_index(dim: usize, depth: u32, cell: usize, k: u32) -> usize {
    let shift = (depth - k) as usize;
    let mask = (1usize << depth) - 1;
    let mut out = 0usize;
    for i in 0..dim {
        let c = (cell >> (depth as usize * (dim - 1 - i))) & mask;
        out = (out << k) | (c >> shift);
    }
    out
}

/// Child offset (as `e` bitmask) of the level-`k+1` ancestor of `cell` inside its level-`k` ancestor.
#[inline]
pub fn child_offset(dim: usize, depth: u32, cell: usize, k: u32) -> usize {
    let shift = (depth - k - 1) as usize;
    let mask = (1usize << depth) - 1;
    let mut e = 0usize;
    for i in 0..dim {
        let c = (cell >> (depth as usize * (dim - 1 - i))) & mask;
        e = (e << 1) | ((c >> shift) & 1);
    }
    e
}

/// Finest-cell indices covered by cube `idx` at level `k`, in row-major order.
pub fn cells_of(dim: usize, depth: u32, k: u32, idx: usize) -> Vec<usize> {
    let base = decode(dim, k, idx);
    let s = depth - k;
    let side = 1u64 << s;
    let count = level_len(dim, s);
    let mut out = Vec::with_capacity(count);
    let mut local = vec![0u64; dim];
    for _ in 0..count {
        let coords: Vec<u64> = base.iter().zip(&local).map(|(b, l)| (b << s) + l).collect();
        out.push(encode(depth, &coords));
        for i in (0..dim).rev() {
            local[i] += 1;
            if local[i] < side {
                break;
            }
            local[i] = 0;
        }
    }
    out
}
