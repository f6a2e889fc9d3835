//! Deterministic dense vector kernels.
//!
//! Every reduction here splits the index range into fixed-size chunks,
//! reduces each chunk in index order and folds the per-chunk partials in
//! chunk order. The result is bitwise identical for any rayon thread
//! count, which is what makes sweep output byte-reproducible across
//! `--workers` settings.

use rayon::prelude::*;

/// Chunk length for partial reductions and parallel updates.
const CHUNK: usize = 8192;

/// Vectors shorter than this are not worth scheduling on the pool.
const PAR_MIN: usize = 1 << 14;

fn chunk_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let quads = a.len() / 4 * 4;
    for i in (0..quads).step_by(4) {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in quads..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Deterministic dot product, parallel over fixed chunks.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot of mismatched lengths");
    if a.len() < PAR_MIN {
        let partials: Vec<f64> = a
            .chunks(CHUNK)
            .zip(b.chunks(CHUNK))
            .map(|(ca, cb)| chunk_dot(ca, cb))
            .collect();
        partials.into_iter().sum()
    } else {
        let partials: Vec<f64> = a
            .par_chunks(CHUNK)
            .zip(b.par_chunks(CHUNK))
            .map(|(ca, cb)| chunk_dot(ca, cb))
            .collect();
        partials.into_iter().sum()
    }
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len());
    if y.len() < PAR_MIN {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    } else {
        y.par_chunks_mut(CHUNK)
            .zip(x.par_chunks(CHUNK))
            .for_each(|(cy, cx)| {
                for (yi, xi) in cy.iter_mut().zip(cx) {
                    *yi += alpha * xi;
                }
            });
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    if x.len() < PAR_MIN {
        for xi in x.iter_mut() {
            *xi *= a;
        }
    } else {
        x.par_chunks_mut(CHUNK).for_each(|c| {
            for xi in c.iter_mut() {
                *xi *= a;
            }
        });
    }
}

/// Normalize in place; returns the norm the vector had before scaling.
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}

/// coeffs[j] = <basis[j], w> for every stored basis vector.
///
/// Parallel over j; each inner dot is itself deterministic.
pub fn project_coeffs(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    if basis.len() >= 4 && w.len() >= PAR_MIN {
        basis.par_iter().map(|v| dot(v, w)).collect()
    } else {
        basis.iter().map(|v| dot(v, w)).collect()
    }
}

/// w -= sum_j coeffs[j] * basis[j]
///
/// Parallel over index blocks of w; the inner j loop runs in a fixed
/// order so the update is deterministic for any partition.
pub fn subtract_projections(w: &mut [f64], basis: &[Vec<f64>], coeffs: &[f64]) {
    assert_eq!(basis.len(), coeffs.len());
    if basis.is_empty() {
        return;
    }
    let dim = w.len();
    let apply = |offset: usize, cw: &mut [f64]| {
        for (v, &c) in basis.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            let cv = &v[offset..offset + cw.len()];
            for (wi, vi) in cw.iter_mut().zip(cv) {
                *wi -= c * vi;
            }
        }
    };
    if dim < PAR_MIN {
        apply(0, w);
    } else {
        w.par_chunks_mut(CHUNK).enumerate().for_each(|(i, cw)| {
            apply(i * CHUNK, cw);
        });
    }
}

/// out = sum_j weights[j] * basis[j], computed blockwise in fixed order.
pub fn linear_combination(basis: &[Vec<f64>], weights: &[f64], out: &mut [f64]) {
    assert_eq!(basis.len(), weights.len());
    out.iter_mut().for_each(|x| *x = 0.0);
    let dim = out.len();
    let apply = |offset: usize, co: &mut [f64]| {
        for (v, &c) in basis.iter().zip(weights) {
            let cv = &v[offset..offset + co.len()];
            for (oi, vi) in co.iter_mut().zip(cv) {
                *oi += c * vi;
            }
        }
    };
    if dim < PAR_MIN {
        apply(0, out);
    } else {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(i, co)| {
            apply(i * CHUNK, co);
        });
    }
}
