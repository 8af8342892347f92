//! Dense tensors on `ell^d` grids stored with the first axis varying fastest.

/// Applies `M_0 ⊗ M_1 ⊗ ... ⊗ M_{d-1}` to a tensor of shape `ell^d`.
/// Each `mats[j]` is an `ell × ell` row-major matrix acting on axis `j`.
pub fn kron_apply(t: &[f64], ell: usize, mats: &[&[f64]]) -> Vec<f64> {
    let d = mats.len();
    debug_assert_eq!(t.len(), ell.pow(d as u32));
    let mut cur = t.to_vec();
    let mut next = vec![0.0; cur.len()];
    for (axis, m) in mats.iter().enumerate() {
        debug_assert_eq!(m.len(), ell * ell);
        let stride = ell.pow(axis as u32);
        let outer = cur.len() / (stride * ell);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * stride * ell + inner;
                for a in 0..ell {
                    let row = &m[a * ell..(a + 1) * ell];
                    let mut acc = 0.0;
                    for (b, mab) in row.iter().enumerate() {
                        acc += mab * cur[base + b * stride];
                    }
                    next[base + a * stride] = acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Splits a flat index into its `d` coordinates in `0..ell`.
pub fn unflatten(mut index: usize, ell: usize, d: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        out.push(index % ell);
        index /= ell;
    }
    out
}

pub fn flatten(coords: &[usize], ell: usize) -> usize {
    coords.iter().rev().fold(0, |acc, &c| acc * ell + c)
}
