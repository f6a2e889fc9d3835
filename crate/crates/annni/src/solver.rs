//! Lowest eigenpairs of the implicit chain Hamiltonian.
//!
//! `lanczos_lowest` runs a thick-restart Lanczos iteration with full
//! reorthogonalization: every new Krylov vector is explicitly projected
//! against the whole stored basis (twice), and the projected matrix
//! `T = V^T H V` is kept as a small dense symmetric matrix. Full
//! reorthogonalization is what keeps ghost copies out of the spectrum
//! when a sweep passes near-degeneracies.
//!
//! Exact degeneracies (the field-free chain is diagonal) exhaust a
//! Krylov space early; the iteration then reseeds with a fresh
//! deterministic random direction orthogonal to the current basis, which
//! is how repeated eigenvalues acquire their full multiplicity.
//!
//! `dense_lowest` is the small-N oracle: a full dense symmetric
//! eigendecomposition truncated to the k lowest pairs.

use crate::chain::{self, ChainSpec, StateVector};
use crate::error::{Error, Result};
use crate::vecops;
use nalgebra::{DMatrix, SymmetricEigen};

/// Options for the Lanczos eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Number of lowest eigenpairs to return.
    pub k: usize,
    /// Residual tolerance ||H v - E v|| for a converged pair.
    pub tol: f64,
    /// Maximum Krylov basis size before a thick restart.
    pub max_krylov: usize,
    /// Seed of the deterministic start vector.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 6,
            tol: 1e-10,
            max_krylov: 400,
            seed: 42,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidSolverConfig("k must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidSolverConfig("tol must be > 0".into()));
        }
        if self.max_krylov < 3 * self.k {
            return Err(Error::InvalidSolverConfig(format!(
                "max_krylov = {} must be >= 3k = {}",
                self.max_krylov,
                3 * self.k
            )));
        }
        Ok(())
    }
}

/// The k lowest eigenpairs with convergence metadata.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<StateVector>,
    residual_norms: Vec<f64>,
    iterations_used: usize,
    converged: bool,
}

impl Spectrum {
    /// Eigenvalues in ascending order (ties permitted).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[StateVector] {
        &self.eigenvectors
    }

    /// Ground-state vector (lowest eigenvalue).
    pub fn ground_state(&self) -> &StateVector {
        &self.eigenvectors[0]
    }

    /// Explicit per-pair residuals ||H v - E v||.
    pub fn residual_norms(&self) -> &[f64] {
        &self.residual_norms
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    /// False when any returned pair missed the residual tolerance.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Indices of the eigenvalues degenerate with the ground state,
    /// using an absolute clustering tolerance.
    pub fn ground_multiplet(&self, tol: f64) -> std::ops::Range<usize> {
        let e0 = self.eigenvalues[0];
        let mut end = 1;
        while end < self.eigenvalues.len() && (self.eigenvalues[end] - e0).abs() <= tol {
            end += 1;
        }
        0..end
    }
}

/// Flip each vector so its largest-magnitude component is positive.
fn sign_canonicalize(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        let a = x.abs();
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if v[best] < 0.0 {
        vecops::scale(-1.0, v);
    }
}

/// Deterministic order inside a degenerate tie: by the index of the
/// largest-magnitude component, then lexicographically on the first
/// component where the vectors visibly differ.
fn canonical_vector_order(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    let argmax = |v: &[f64]| {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, &x) in v.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        best
    };
    let (ia, ib) = (argmax(a), argmax(b));
    if ia != ib {
        return ia.cmp(&ib);
    }
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > 1e-6 {
            return x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal);
        }
    }
    std::cmp::Ordering::Equal
}

/// Order eigenpairs ascending; within numerically tied eigenvalues fall
/// back to the canonical vector order so degenerate multiplets come out
/// in a reproducible sequence.
fn order_pairs(values: &mut [f64], vectors: &mut [Vec<f64>], tie_tol: f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    let sorted_vals: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mut sorted_vecs: Vec<Vec<f64>> = idx.iter().map(|&i| std::mem::take(&mut vectors[i])).collect();

    // Reorder inside tie groups.
    let mut start = 0;
    while start < sorted_vals.len() {
        let mut end = start + 1;
        while end < sorted_vals.len() && (sorted_vals[end] - sorted_vals[start]).abs() <= tie_tol {
            end += 1;
        }
        if end - start > 1 {
            sorted_vecs[start..end].sort_by(|a, b| canonical_vector_order(a, b));
        }
        start = end;
    }

    values.copy_from_slice(&sorted_vals);
    for (dst, src) in vectors.iter_mut().zip(sorted_vecs) {
        *dst = src;
    }
}

struct Workspace {
    spec: ChainSpec,
    diag: Vec<f64>,
    matvecs: usize,
}

impl Workspace {
    fn new(spec: &ChainSpec) -> Self {
        Workspace {
            spec: *spec,
            diag: chain::diagonal_energies(spec),
            matvecs: 0,
        }
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        chain::apply_with_diagonal(&self.spec, &self.diag, v, out);
        self.matvecs += 1;
    }
}

/// Draw a fresh deterministic direction orthogonal to the current basis.
/// Returns None when the basis already spans every random draw.
fn fresh_orthonormal(
    dim: usize,
    seed: u64,
    stream: &mut u64,
    basis: &[Vec<f64>],
) -> Option<Vec<f64>> {
    for _ in 0..6 {
        let mut w = StateVector::random_unit(dim, seed, *stream).into_vec();
        *stream += 1;
        for _ in 0..2 {
            let c = vecops::project_coeffs(basis, &w);
            vecops::subtract_projections(&mut w, basis, &c);
        }
        let n = vecops::norm(&w);
        if n > 1e-8 {
            vecops::scale(1.0 / n, &mut w);
            return Some(w);
        }
    }
    None
}

/// Lowest-k eigenpairs via thick-restart Lanczos with full
/// reorthogonalization. Deterministic for a fixed (spec, cfg); results
/// are bitwise independent of the rayon thread count.
pub fn lanczos_lowest(spec: &ChainSpec, cfg: &SolverConfig) -> Result<Spectrum> {
    cfg.validate()?;
    let dim = spec.dim();
    let k = cfg.k.min(dim);

    // Full reorthogonalization keeps the whole basis in memory; cap the
    // cycle length for the largest chains (2 GiB of basis at N = 28
    // would not fit a restart-free run anyway).
    let mut ncv = cfg.max_krylov;
    if spec.n_sites() >= 20 {
        ncv = ncv.min(200);
    }
    ncv = ncv.min(dim).max(k + 2).min(dim);

    let mut ws = Workspace::new(spec);

    // After the k lowest pairs first converge, keep iterating this many
    // steps so slowly-surfacing degenerate copies can displace them.
    // Small spaces are cheap enough to be patient with.
    let stability_window = if dim <= 4096 { 192.min(dim) } else { 48 };

    let breakdown_tol = 1e-13 * (spec.n_sites() as f64) * (1.0 + spec.alpha() + spec.bx());

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(ncv);
    let mut proj = DMatrix::<f64>::zeros(ncv, ncv);
    basis.push(StateVector::random_unit(dim, cfg.seed, 0).into_vec());
    let mut reseed_stream: u64 = 1;

    let mut hv = vec![0.0; dim];
    let mut processed: usize = 0; // columns of `proj` that are filled
    let mut last_beta: f64 = 0.0;
    let mut exhausted = false;

    let mut stable_since_converged: usize = 0;
    let mut prev_lowest: Vec<f64> = Vec::new();

    let max_restarts = 80usize;
    let mut restarts = 0usize;

    // Ritz data refreshed at every check.
    let mut ritz_vals: Vec<f64> = Vec::new();
    let mut ritz_vecs: DMatrix<f64> = DMatrix::zeros(0, 0);

    let est_tol = cfg.tol * 0.25;

    'outer: loop {
        // Expand until the basis fills the cycle or the space is exhausted.
        while basis.len() < ncv && !exhausted {
            let j = basis.len() - 1;
            ws.apply(&basis[j], &mut hv);
            let mut w = hv.clone();
            let mut col = vecops::project_coeffs(&basis, &w);
            vecops::subtract_projections(&mut w, &basis, &col);
            let col2 = vecops::project_coeffs(&basis, &w);
            vecops::subtract_projections(&mut w, &basis, &col2);
            for (c, c2) in col.iter_mut().zip(&col2) {
                *c += c2;
            }
            for (i, &c) in col.iter().enumerate() {
                proj[(i, j)] = c;
                proj[(j, i)] = c;
            }
            processed = j + 1;

            let beta = vecops::norm(&w);
            if beta > breakdown_tol {
                vecops::scale(1.0 / beta, &mut w);
                last_beta = beta;
                if basis.len() < ncv {
                    proj[(j + 1, j)] = beta;
                    proj[(j, j + 1)] = beta;
                    basis.push(w);
                }
            } else {
                // Invariant subspace found; continue in a fresh direction.
                last_beta = 0.0;
                match fresh_orthonormal(dim, cfg.seed, &mut reseed_stream, &basis) {
                    Some(fresh) => {
                        if basis.len() < ncv {
                            proj[(j + 1, j)] = 0.0;
                            proj[(j, j + 1)] = 0.0;
                            basis.push(fresh);
                        }
                    }
                    None => {
                        exhausted = true;
                    }
                }
            }

            // Periodic convergence check; small eigenproblems are cheap
            // relative to the dim-sized vector work.
            let check_every = if processed > 220 { 25 } else { 10 };
            let due = processed % check_every == 0
                || basis.len() == ncv
                || exhausted
                || processed == dim;
            if !due || processed < k {
                continue;
            }

            let t = proj.view((0, 0), (processed, processed)).into_owned();
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..processed).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
            ritz_vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            ritz_vecs = DMatrix::from_fn(processed, processed, |r, c| {
                eig.eigenvectors[(r, order[c])]
            });

            let tail = processed - 1;
            let all_converged = (0..k).all(|i| {
                let est = if exhausted || processed == dim {
                    0.0
                } else {
                    (last_beta * ritz_vecs[(tail, i)]).abs()
                };
                est <= est_tol
            });

            if all_converged {
                let lowest: Vec<f64> = ritz_vals[..k].to_vec();
                let unchanged = prev_lowest.len() == k
                    && prev_lowest
                        .iter()
                        .zip(&lowest)
                        .all(|(a, b)| (a - b).abs() <= 10.0 * cfg.tol);
                if unchanged {
                    stable_since_converged += check_every;
                } else {
                    stable_since_converged = 0;
                    prev_lowest = lowest;
                }
                if stable_since_converged >= stability_window || exhausted || processed == dim {
                    break 'outer;
                }
            } else {
                stable_since_converged = 0;
                prev_lowest.clear();
            }

            if exhausted || processed == dim {
                break 'outer;
            }
        }

        if exhausted || processed == dim {
            break;
        }

        // Thick restart: keep the lowest Ritz vectors (converged ones plus
        // a block of unconverged candidates) and the trailing direction.
        restarts += 1;
        if restarts > max_restarts {
            break;
        }
        let keep = (2 * k + 4).min(processed.saturating_sub(2)).max(k.min(processed));

        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(keep + 1);
        let mut out = vec![0.0; dim];
        for i in 0..keep {
            let coeffs: Vec<f64> = (0..processed).map(|r| ritz_vecs[(r, i)]).collect();
            vecops::linear_combination(&basis[..processed], &coeffs, &mut out);
            vecops::normalize(&mut out);
            kept.push(out.clone());
        }
        let trailing = basis.pop().expect("basis nonempty");
        basis = kept;
        basis.push(trailing);

        proj.fill(0.0);
        for (i, &theta) in ritz_vals[..keep].iter().enumerate() {
            proj[(i, i)] = theta;
        }
        processed = keep;
        last_beta = 0.0;
    }

    if processed == 0 {
        return Err(Error::Unconverged("no Lanczos steps taken".into()));
    }

    // Assemble the k lowest Ritz pairs from the final projection.
    let t = proj.view((0, 0), (processed, processed)).into_owned();
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..processed).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let k_out = k.min(processed);
    let mut values: Vec<f64> = (0..k_out).map(|i| eig.eigenvalues[order[i]]).collect();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k_out);
    let mut out = vec![0.0; dim];
    for i in 0..k_out {
        let coeffs: Vec<f64> = (0..processed).map(|r| eig.eigenvectors[(r, order[i])]).collect();
        vecops::linear_combination(&basis[..processed], &coeffs, &mut out);
        vecops::normalize(&mut out);
        sign_canonicalize(&mut out);
        vectors.push(out.clone());
    }

    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    order_pairs(&mut values, &mut vectors, 1e-10 * scale);

    // Explicit residuals decide the convergence flag.
    let mut residuals = Vec::with_capacity(k_out);
    for (theta, v) in values.iter().zip(&vectors) {
        ws.apply(v, &mut hv);
        vecops::axpy(-theta, v, &mut hv);
        residuals.push(vecops::norm(&hv));
    }
    let converged = residuals.iter().all(|&r| r <= cfg.tol) && values.len() == k;

    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors.into_iter().map(StateVector::from_vec).collect(),
        residual_norms: residuals,
        iterations_used: ws.matvecs,
        converged,
    })
}

/// Full dense symmetric eigendecomposition truncated to the k lowest
/// pairs. Ground truth for N <= 12 and the full-spectrum source for the
/// fidelity completeness identity.
pub fn dense_lowest(spec: &ChainSpec, k: usize) -> Result<Spectrum> {
    if k < 1 {
        return Err(Error::InvalidSolverConfig("k must be >= 1".into()));
    }
    let h = chain::build_dense(spec)?;
    let dim = spec.dim();
    let k = k.min(dim);
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut values: Vec<f64> = (0..k).map(|i| eig.eigenvalues[order[i]]).collect();
    let mut vectors: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut v: Vec<f64> = eig.eigenvectors.column(order[i]).iter().copied().collect();
            vecops::normalize(&mut v);
            sign_canonicalize(&mut v);
            v
        })
        .collect();

    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    order_pairs(&mut values, &mut vectors, 1e-10 * scale);

    let mut residuals = Vec::with_capacity(k);
    for (theta, v) in values.iter().zip(&vectors) {
        let dv = nalgebra::DVector::from_column_slice(v);
        let r = &h * &dv - dv * *theta;
        residuals.push(r.norm());
    }

    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors.into_iter().map(StateVector::from_vec).collect(),
        residual_norms: residuals,
        iterations_used: dim,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.k = 0;
        assert!(cfg.validate().is_err());
        cfg.k = 6;
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tol = 1e-10;
        cfg.max_krylov = 17;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn field_free_ferromagnet_is_twofold_degenerate() {
        let spec = ChainSpec::new(8, 0.0, 0.0).unwrap();
        let cfg = SolverConfig {
            k: 2,
            ..SolverConfig::default()
        };
        let s = lanczos_lowest(&spec, &cfg).unwrap();
        assert!(s.converged());
        assert!((s.eigenvalues()[0] - (-8.0)).abs() < 1e-9, "{:?}", s.eigenvalues());
        assert!((s.eigenvalues()[1] - (-8.0)).abs() < 1e-9, "{:?}", s.eigenvalues());
    }

    #[test]
    fn lanczos_matches_dense_at_paper_point() {
        let spec = ChainSpec::new(10, 0.47, 0.2).unwrap();
        let cfg = SolverConfig::default();
        let lz = lanczos_lowest(&spec, &cfg).unwrap();
        let dn = dense_lowest(&spec, cfg.k).unwrap();
        assert!(lz.converged());
        for (a, b) in lz.eigenvalues().iter().zip(dn.eigenvalues()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn eigenvectors_unit_norm_orthogonal_and_sorted() {
        let spec = ChainSpec::new(8, 0.6, 0.3).unwrap();
        let cfg = SolverConfig::default();
        let s = lanczos_lowest(&spec, &cfg).unwrap();
        for w in s.eigenvalues().windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        for (i, vi) in s.eigenvectors().iter().enumerate() {
            assert!((vi.norm() - 1.0).abs() < 1e-12);
            for vj in s.eigenvectors().iter().skip(i + 1) {
                assert!(vi.dot(vj).abs() < 1e-8);
            }
        }
        for &r in s.residual_norms() {
            assert!(r <= cfg.tol, "residual {r}");
        }
    }

    #[test]
    fn degeneracy_stable_across_seeds() {
        // alpha = 1/2, Bx = 0: ferromagnetic and antiphase manifolds cross.
        let spec = ChainSpec::new(8, 0.5, 0.0).unwrap();
        for seed in [1u64, 42, 1234] {
            let cfg = SolverConfig {
                k: 2,
                seed,
                ..SolverConfig::default()
            };
            let s = lanczos_lowest(&spec, &cfg).unwrap();
            assert!(
                (s.eigenvalues()[1] - s.eigenvalues()[0]).abs() < 1e-10,
                "seed {seed}: {:?}",
                s.eigenvalues()
            );
        }
    }

    #[test]
    fn dense_field_free_ground_state() {
        let spec = ChainSpec::new(4, 0.3, 0.0).unwrap();
        let s = dense_lowest(&spec, 2).unwrap();
        assert!((s.eigenvalues()[0] - (-2.8)).abs() < 1e-12);
    }

    #[test]
    fn dense_alpha_half_degeneracy() {
        let spec = ChainSpec::new(4, 0.5, 0.0).unwrap();
        let s = dense_lowest(&spec, 2).unwrap();
        assert!((s.eigenvalues()[1] - s.eigenvalues()[0]).abs() < 1e-12);
    }

    #[test]
    fn variational_bound() {
        let spec = ChainSpec::new(8, 0.47, 0.2).unwrap();
        let cfg = SolverConfig::default();
        let lz = lanczos_lowest(&spec, &cfg).unwrap();
        let dn = dense_lowest(&spec, 1).unwrap();
        assert!(lz.eigenvalues()[0] >= dn.eigenvalues()[0] - 1e-9);
        // Any test vector's Rayleigh quotient bounds E0 from above.
        let t = StateVector::random_unit(spec.dim(), 3, 17);
        let ht = chain::apply_hamiltonian(&spec, &t).unwrap();
        assert!(lz.eigenvalues()[0] <= t.dot(&ht) + 1e-12);
    }

    #[test]
    fn determinism_same_config_same_bits() {
        let spec = ChainSpec::new(8, 0.47, 0.2).unwrap();
        let cfg = SolverConfig::default();
        let a = lanczos_lowest(&spec, &cfg).unwrap();
        let b = lanczos_lowest(&spec, &cfg).unwrap();
        assert_eq!(a.eigenvalues(), b.eigenvalues());
        for (va, vb) in a.eigenvectors().iter().zip(b.eigenvectors()) {
            assert_eq!(va.as_slice(), vb.as_slice());
        }
    }
}
