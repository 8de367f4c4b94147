//! Flat row-major matrix kernels for the dense-net engine.
//!
//! All three products (forward, weight gradient, input gradient) reduce to
//! one register-tiled C = A * B microkernel with 4x8 accumulator tiles.
//! Every output element is produced by exactly one task with a fixed inner
//! summation order, so results are bit-identical for any worker count, and
//! the tile and edge paths share that order, so results do not depend on
//! where in the batch a row lands.

use rayon::prelude::*;

/// C rows below this stay single-threaded; splitting tiny matrices costs
/// more than it saves.
const PAR_ROW_THRESHOLD: usize = 64;

const TILE_ROWS: usize = 4;
const TILE_COLS: usize = 8;

/// C (n, p) = A (n, q) * B (q, p), all row-major. With `init`, every C row
/// starts from it (bias broadcast); otherwise from zero.
fn gemm(a: &[f64], b: &[f64], init: Option<&[f64]>, n: usize, q: usize, p: usize, c: &mut [f64]) {
    debug_assert_eq!(a.len(), n * q);
    debug_assert_eq!(b.len(), q * p);
    debug_assert_eq!(c.len(), n * p);

    let block = |c_block: &mut [f64], a_block: &[f64]| {
        let rows = c_block.len() / p;
        if rows == TILE_ROWS {
            gemm_block4(a_block, b, init, q, p, c_block);
        } else {
            gemm_edge(a_block, b, init, rows, q, p, c_block);
        }
    };

    if n >= PAR_ROW_THRESHOLD {
        c.par_chunks_mut(TILE_ROWS * p)
            .zip(a.par_chunks(TILE_ROWS * q))
            .for_each(|(cb, ab)| block(cb, ab));
    } else {
        for (cb, ab) in c.chunks_mut(TILE_ROWS * p).zip(a.chunks(TILE_ROWS * q)) {
            block(cb, ab);
        }
    }
}

/// Four full C rows: 4x8 register tiles, B streamed once per tile column.
fn gemm_block4(a: &[f64], b: &[f64], init: Option<&[f64]>, q: usize, p: usize, c: &mut [f64]) {
    let mut j0 = 0;
    while j0 + TILE_COLS <= p {
        let seed: [f64; TILE_COLS] = match init {
            Some(bias) => bias[j0..j0 + TILE_COLS].try_into().unwrap(),
            None => [0.0; TILE_COLS],
        };
        let mut acc0 = seed;
        let mut acc1 = seed;
        let mut acc2 = seed;
        let mut acc3 = seed;
        for kk in 0..q {
            let brow: &[f64; TILE_COLS] =
                b[kk * p + j0..kk * p + j0 + TILE_COLS].try_into().unwrap();
            let a0 = a[kk];
            let a1 = a[q + kk];
            let a2 = a[2 * q + kk];
            let a3 = a[3 * q + kk];
            for j in 0..TILE_COLS {
                acc0[j] += a0 * brow[j];
                acc1[j] += a1 * brow[j];
                acc2[j] += a2 * brow[j];
                acc3[j] += a3 * brow[j];
            }
        }
        c[j0..j0 + TILE_COLS].copy_from_slice(&acc0);
        c[p + j0..p + j0 + TILE_COLS].copy_from_slice(&acc1);
        c[2 * p + j0..2 * p + j0 + TILE_COLS].copy_from_slice(&acc2);
        c[3 * p + j0..3 * p + j0 + TILE_COLS].copy_from_slice(&acc3);
        j0 += TILE_COLS;
    }
    if j0 < p {
        gemm_edge_cols(a, b, init, TILE_ROWS, q, p, j0, c);
    }
}

/// Fewer than four rows: full-width scalar path, same summation order.
fn gemm_edge(a: &[f64], b: &[f64], init: Option<&[f64]>, rows: usize, q: usize, p: usize, c: &mut [f64]) {
    for r in 0..rows {
        let cr = &mut c[r * p..(r + 1) * p];
        match init {
            Some(bias) => cr.copy_from_slice(bias),
            None => cr.fill(0.0),
        }
        let ar = &a[r * q..(r + 1) * q];
        for (kk, &av) in ar.iter().enumerate() {
            let brow = &b[kk * p..(kk + 1) * p];
            for (cv, &bv) in cr.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
}

/// Trailing columns of a four-row block.
#[allow(clippy::too_many_arguments)]
fn gemm_edge_cols(
    a: &[f64],
    b: &[f64],
    init: Option<&[f64]>,
    rows: usize,
    q: usize,
    p: usize,
    j0: usize,
    c: &mut [f64],
) {
    for r in 0..rows {
        for j in j0..p {
            let mut acc = init.map(|bias| bias[j]).unwrap_or(0.0);
            for kk in 0..q {
                acc += a[r * q + kk] * b[kk * p + j];
            }
            c[r * p + j] = acc;
        }
    }
}

fn transpose(src: &[f64], rows: usize, cols: usize, dst: &mut Vec<f64>) {
    dst.clear();
    dst.resize(rows * cols, 0.0);
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// z = x * w + bias broadcast, where x is (n, k) and w is (k, m).
pub fn forward_affine(x: &[f64], w: &[f64], bias: &[f64], n: usize, k: usize, m: usize, z: &mut [f64]) {
    debug_assert_eq!(bias.len(), m);
    gemm(x, w, Some(bias), n, k, m, z);
}

/// dw = x^T * dz, where x is (n, k) and dz is (n, m); dw is (k, m).
/// Overwrites dw.
pub fn grad_weights(x: &[f64], dz: &[f64], n: usize, k: usize, m: usize, dw: &mut [f64]) {
    let mut xt = Vec::new();
    transpose(x, n, k, &mut xt);
    gemm(&xt, dz, None, k, n, m, dw);
}

/// db = column sums of dz (n, m).
pub fn grad_bias(dz: &[f64], n: usize, m: usize, db: &mut [f64]) {
    debug_assert_eq!(db.len(), m);
    db.fill(0.0);
    for r in 0..n {
        let dzr = &dz[r * m..(r + 1) * m];
        for (b, &g) in db.iter_mut().zip(dzr) {
            *b += g;
        }
    }
}

/// dx = dz * w^T, where dz is (n, m) and w is (k, m); dx is (n, k).
pub fn grad_input(dz: &[f64], w: &[f64], n: usize, k: usize, m: usize, dx: &mut [f64]) {
    let mut wt = Vec::new();
    transpose(w, k, m, &mut wt);
    gemm(dz, &wt, None, n, m, k, dx);
}

/// Eight-lane dot product: fixed association, SIMD-friendly.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (ac, bc) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for i in 0..8 {
            lanes[i] += ac[i] * bc[i];
        }
    }
    let mut acc = 0.0;
    for (x, y) in a[chunks * 8..].iter().zip(&b[chunks * 8..]) {
        acc += x * y;
    }
    for l in lanes {
        acc += l;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], init: Option<&[f64]>, n: usize, q: usize, p: usize) -> Vec<f64> {
        let mut c = vec![0.0; n * p];
        for r in 0..n {
            for j in 0..p {
                let mut acc = init.map(|bias| bias[j]).unwrap_or(0.0);
                for kk in 0..q {
                    acc += a[r * q + kk] * b[kk * p + j];
                }
                c[r * p + j] = acc;
            }
        }
        c
    }

    #[test]
    fn affine_matches_naive_across_shapes() {
        for (n, k, m) in [(1, 3, 2), (3, 5, 4), (4, 7, 8), (6, 13, 11), (32, 21, 17)] {
            let x: Vec<f64> = (0..n * k).map(|i| (i as f64) * 0.37 - 2.0).collect();
            let w: Vec<f64> = (0..k * m).map(|i| (i as f64) * -0.21 + 1.0).collect();
            let b: Vec<f64> = (0..m).map(|i| i as f64 * 0.5).collect();
            let mut z = vec![0.0; n * m];
            forward_affine(&x, &w, &b, n, k, m, &mut z);
            let expect = naive(&x, &w, Some(&b), n, k, m);
            for (got, want) in z.iter().zip(&expect) {
                assert!((got - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_kernels_match_naive() {
        let (n, k, m) = (11, 9, 14);
        let x: Vec<f64> = (0..n * k).map(|i| (i as f64).sin()).collect();
        let w: Vec<f64> = (0..k * m).map(|i| (i as f64).cos()).collect();
        let dz: Vec<f64> = (0..n * m).map(|i| (i as f64 * 0.3).sin()).collect();

        let mut dw = vec![0.0; k * m];
        grad_weights(&x, &dz, n, k, m, &mut dw);
        for kk in 0..k {
            for j in 0..m {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += x[r * k + kk] * dz[r * m + j];
                }
                assert!((dw[kk * m + j] - acc).abs() < 1e-12);
            }
        }

        let mut dx = vec![0.0; n * k];
        grad_input(&dz, &w, n, k, m, &mut dx);
        for r in 0..n {
            for kk in 0..k {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += dz[r * m + j] * w[kk * m + j];
                }
                assert!((dx[r * k + kk] - acc).abs() < 1e-12);
            }
        }

        let mut db = vec![0.0; m];
        grad_bias(&dz, n, m, &mut db);
        for j in 0..m {
            let mut acc = 0.0;
            for r in 0..n {
                acc += dz[r * m + j];
            }
            assert_eq!(db[j], acc);
        }
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn tile_and_edge_paths_agree_per_row() {
        // A row's result must not depend on its position in the batch.
        let (k, m) = (19, 23);
        let w: Vec<f64> = (0..k * m).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..m).map(|i| i as f64 * 0.01).collect();
        let row: Vec<f64> = (0..k).map(|i| (i as f64 * 1.3).cos()).collect();

        for n in [1usize, 4, 5, 6, 9] {
            let x: Vec<f64> = (0..n).flat_map(|_| row.clone()).collect();
            let mut z = vec![0.0; n * m];
            forward_affine(&x, &w, &b, n, k, m, &mut z);
            for r in 1..n {
                assert_eq!(z[..m], z[r * m..(r + 1) * m], "row {r} of batch {n}");
            }
        }
    }
}
