//! Spin-1/2 computational basis and the matrix-free ANNNI Hamiltonian.
//!
//! The chain Hamiltonian is
//!
//! ```text
//!   H = sum_n ( -J1 s^z_n s^z_{n+1} + J2 s^z_n s^z_{n+2} ) - Bx sum_n s^x_n
//! ```
//!
//! with periodic boundaries (site N+1 = 1, N+2 = 2) and J2 = alpha * J1.
//! Basis convention: bit `n` of a basis index is the s^z eigenvalue of
//! site `n`, with bit value 1 meaning s^z = +1. In this basis H is real
//! symmetric: the Ising couplings are diagonal and each s^x term connects
//! a state to its single-bit-flip partner with amplitude -Bx, so real
//! amplitude vectors are sufficient throughout.

use crate::error::{Error, Result};
use crate::vecops;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Smallest chain for which periodic NNN bonds are distinct from NN bonds.
pub const MIN_SITES: u32 = 4;
/// Largest supported chain: one amplitude vector is 2 GiB at 8 bytes each.
pub const MAX_SITES: u32 = 28;
/// Dense-matrix operations are capped at this size.
pub const MAX_DENSE_SITES: u32 = 12;

/// Boundary condition of the chain. Only periodic chains are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Boundary {
    Periodic,
}

/// Physical parameters of one ANNNI Hamiltonian instance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainSpec {
    n_sites: u32,
    j1: f64,
    alpha: f64,
    bx: f64,
    boundary: Boundary,
}

impl ChainSpec {
    /// Build a chain with the conventional J1 = 1 energy unit.
    pub fn new(n_sites: u32, alpha: f64, bx: f64) -> Result<Self> {
        if !(MIN_SITES..=MAX_SITES).contains(&n_sites) {
            return Err(Error::Capacity {
                n_sites,
                min: MIN_SITES,
                max: MAX_SITES,
            });
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::InvalidChain(format!("alpha = {alpha} must be >= 0")));
        }
        if !bx.is_finite() || bx < 0.0 {
            return Err(Error::InvalidChain(format!("bx = {bx} must be >= 0")));
        }
        Ok(ChainSpec {
            n_sites,
            j1: 1.0,
            alpha,
            bx,
            boundary: Boundary::Periodic,
        })
    }

    pub fn n_sites(&self) -> u32 {
        self.n_sites
    }

    pub fn j1(&self) -> f64 {
        self.j1
    }

    /// Frustration parameter J2/J1.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Next-nearest-neighbor coupling J2 = alpha * J1.
    pub fn j2(&self) -> f64 {
        self.alpha * self.j1
    }

    pub fn bx(&self) -> f64 {
        self.bx
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1usize << self.n_sites
    }

    /// Same chain at a different frustration parameter.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        ChainSpec::new(self.n_sites, alpha, self.bx)
    }

    /// Same chain at a different transverse field.
    pub fn with_bx(&self, bx: f64) -> Result<Self> {
        ChainSpec::new(self.n_sites, self.alpha, bx)
    }
}

/// Real amplitude vector over the 2^N computational basis.
///
/// Bit `n` of an amplitude index is the s^z value of site `n`
/// (bit 1 means up).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<f64>,
}

impl StateVector {
    pub fn from_vec(amplitudes: Vec<f64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn zeros(dim: usize) -> Self {
        StateVector {
            amplitudes: vec![0.0; dim],
        }
    }

    /// Computational basis state |index>.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut amplitudes = vec![0.0; dim];
        amplitudes[index] = 1.0;
        Ok(StateVector { amplitudes })
    }

    /// Deterministic pseudo-random unit vector. `stream` distinguishes
    /// independent draws for the same seed.
    pub fn random_unit(dim: usize, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut amplitudes: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        vecops::normalize(&mut amplitudes);
        StateVector { amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.amplitudes
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.amplitudes
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        vecops::dot(&self.amplitudes, &other.amplitudes)
    }

    pub fn norm(&self) -> f64 {
        vecops::norm(&self.amplitudes)
    }

    /// Scale to unit Euclidean norm; returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        vecops::normalize(&mut self.amplitudes)
    }
}

#[inline]
fn rotate_left(bits: usize, by: u32, n: u32) -> usize {
    let mask = (1usize << n) - 1;
    ((bits << by) | (bits >> (n - by))) & mask
}

/// Ising part of the basis-state energy:
/// sum_n (-J1 s_n s_{n+1} + J2 s_n s_{n+2}) with s_n = +-1 from bit n.
pub fn diagonal_energy(spec: &ChainSpec, basis_index: usize) -> Result<f64> {
    let dim = spec.dim();
    if basis_index >= dim {
        return Err(Error::IndexOutOfRange {
            index: basis_index,
            dim,
        });
    }
    Ok(diagonal_energy_unchecked(spec, basis_index))
}

#[inline]
fn diagonal_energy_unchecked(spec: &ChainSpec, idx: usize) -> f64 {
    let n = spec.n_sites;
    // sum_n s_n s_{n+m} = N - 2 * popcount(idx ^ rotl(idx, m)):
    // aligned pairs contribute +1, anti-aligned -1.
    let nn = n as i32 - 2 * (idx ^ rotate_left(idx, 1, n)).count_ones() as i32;
    let nnn = n as i32 - 2 * (idx ^ rotate_left(idx, 2, n)).count_ones() as i32;
    -spec.j1 * nn as f64 + spec.j2() * nnn as f64
}

/// All 2^N diagonal energies; the matvec kernel consumes this table.
pub fn diagonal_energies(spec: &ChainSpec) -> Vec<f64> {
    let dim = spec.dim();
    let mut diag = vec![0.0; dim];
    if dim >= 1 << 14 {
        diag.par_iter_mut().enumerate().for_each(|(i, d)| {
            *d = diagonal_energy_unchecked(spec, i);
        });
    } else {
        for (i, d) in diag.iter_mut().enumerate() {
            *d = diagonal_energy_unchecked(spec, i);
        }
    }
    diag
}

/// w = H v using a precomputed diagonal table. Each output entry depends
/// only on its own row, so any partition of the output range produces
/// bitwise identical results.
pub fn apply_with_diagonal(spec: &ChainSpec, diag: &[f64], v: &[f64], out: &mut [f64]) {
    let dim = spec.dim();
    assert_eq!(diag.len(), dim);
    assert_eq!(v.len(), dim);
    assert_eq!(out.len(), dim);
    let n = spec.n_sites as usize;
    let bx = spec.bx;

    let row_block = |base: usize, chunk: &mut [f64]| {
        if bx == 0.0 {
            for (off, o) in chunk.iter_mut().enumerate() {
                let i = base + off;
                *o = diag[i] * v[i];
            }
        } else {
            for (off, o) in chunk.iter_mut().enumerate() {
                let i = base + off;
                let mut flips = 0.0;
                for b in 0..n {
                    flips += v[i ^ (1usize << b)];
                }
                *o = diag[i] * v[i] - bx * flips;
            }
        }
    };

    if dim >= 1 << 14 {
        const BLOCK: usize = 8192;
        out.par_chunks_mut(BLOCK)
            .enumerate()
            .for_each(|(bi, chunk)| row_block(bi * BLOCK, chunk));
    } else {
        row_block(0, out);
    }
}

/// w = H v. Output is intentionally not normalized.
pub fn apply_hamiltonian(spec: &ChainSpec, v: &StateVector) -> Result<StateVector> {
    let dim = spec.dim();
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: v.len(),
        });
    }
    let diag = diagonal_energies(spec);
    let mut out = vec![0.0; dim];
    apply_with_diagonal(spec, &diag, v.as_slice(), &mut out);
    Ok(StateVector::from_vec(out))
}

/// Dense symmetric matrix of H, usable as an exact oracle for small N.
pub fn build_dense(spec: &ChainSpec) -> Result<DMatrix<f64>> {
    if spec.n_sites > MAX_DENSE_SITES {
        return Err(Error::Capacity {
            n_sites: spec.n_sites,
            min: MIN_SITES,
            max: MAX_DENSE_SITES,
        });
    }
    let dim = spec.dim();
    let n = spec.n_sites as usize;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = diagonal_energy_unchecked(spec, i);
        for b in 0..n {
            h[(i ^ (1usize << b), i)] = -spec.bx;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent bond-loop reference for the diagonal energy: walks
    /// every bond explicitly with +-1 spin arrays instead of bit tricks.
    fn diagonal_energy_bond_loop(spec: &ChainSpec, idx: usize) -> f64 {
        let n = spec.n_sites as usize;
        let spin = |site: usize| -> f64 {
            if (idx >> (site % n)) & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        };
        let mut e = 0.0;
        for site in 0..n {
            e += -spec.j1 * spin(site) * spin(site + 1);
            e += spec.j2() * spin(site) * spin(site + 2);
        }
        e
    }

    #[test]
    fn rejects_out_of_range_sites() {
        assert!(ChainSpec::new(3, 0.0, 0.0).is_err());
        assert!(ChainSpec::new(29, 0.0, 0.0).is_err());
        assert!(ChainSpec::new(4, -0.1, 0.0).is_err());
        assert!(ChainSpec::new(4, 0.0, -0.1).is_err());
    }

    #[test]
    fn ferromagnet_diagonal_values() {
        // |[up x 4]> = index 15: four satisfied NN bonds at alpha = 0.
        let spec = ChainSpec::new(4, 0.0, 0.0).unwrap();
        assert_eq!(diagonal_energy(&spec, 15).unwrap(), -4.0);

        // alpha = 0.3: -4 + 4 * 0.3.
        let spec = ChainSpec::new(4, 0.3, 0.0).unwrap();
        assert!((diagonal_energy(&spec, 15).unwrap() - (-2.8)).abs() < 1e-14);
    }

    #[test]
    fn antiphase_degeneracy_at_half() {
        // At alpha = 1/2, Bx = 0 the ferromagnet and the up-up-down-down
        // configuration are degenerate at -2 for N = 4.
        let spec = ChainSpec::new(4, 0.5, 0.0).unwrap();
        let ferro = diagonal_energy(&spec, 0b1111).unwrap();
        let antiphase = diagonal_energy(&spec, 0b0011).unwrap();
        assert!((ferro - (-2.0)).abs() < 1e-14);
        assert!((antiphase - (-2.0)).abs() < 1e-14);
    }

    #[test]
    fn diagonal_matches_bond_loop_reference() {
        for &(n, alpha) in &[(4u32, 0.3), (4, 0.5), (6, 0.47), (8, 0.64)] {
            let spec = ChainSpec::new(n, alpha, 0.0).unwrap();
            for idx in 0..spec.dim() {
                let fast = diagonal_energy(&spec, idx).unwrap();
                let slow = diagonal_energy_bond_loop(&spec, idx);
                assert!(
                    (fast - slow).abs() < 1e-12,
                    "N={n} alpha={alpha} idx={idx}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn diagonal_translation_and_spin_flip_invariance() {
        for n in [4u32, 6, 8, 10] {
            let spec = ChainSpec::new(n, 0.6, 0.2).unwrap();
            let mask = spec.dim() - 1;
            for idx in 0..spec.dim() {
                let e = diagonal_energy(&spec, idx).unwrap();
                let rot = rotate_left(idx, 1, n);
                assert_eq!(e, diagonal_energy(&spec, rot).unwrap(), "translation");
                assert_eq!(e, diagonal_energy(&spec, !idx & mask).unwrap(), "spin flip");
            }
        }
    }

    #[test]
    fn apply_on_ferromagnet_is_diagonal() {
        let spec = ChainSpec::new(4, 0.0, 0.0).unwrap();
        let v = StateVector::basis_state(16, 15).unwrap();
        let w = apply_hamiltonian(&spec, &v).unwrap();
        for (i, &wi) in w.as_slice().iter().enumerate() {
            let expect = if i == 15 { -4.0 } else { 0.0 };
            assert!((wi - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn apply_rejects_wrong_length() {
        let spec = ChainSpec::new(4, 0.0, 0.0).unwrap();
        let v = StateVector::zeros(8);
        assert!(matches!(
            apply_hamiltonian(&spec, &v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dense_is_exactly_symmetric_and_field_free_diagonal() {
        let spec = ChainSpec::new(4, 0.0, 0.0).unwrap();
        let h = build_dense(&spec).unwrap();
        assert_eq!(h, h.transpose());
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert_eq!(h[(i, j)], 0.0);
                }
            }
            // NN bond count parity only allows -4, 0, +4 at alpha = Bx = 0.
            let d = h[(i, i)];
            assert!(d == -4.0 || d == 0.0 || d == 4.0, "diag {d}");
        }
    }

    #[test]
    fn dense_off_diagonal_row_sums() {
        let spec = ChainSpec::new(4, 0.0, 1.0).unwrap();
        let h = build_dense(&spec).unwrap();
        for i in 0..16 {
            let mut s = 0.0;
            for j in 0..16 {
                if i != j {
                    s += h[(i, j)];
                }
            }
            assert!((s - (-4.0)).abs() < 1e-14, "row {i} off-diagonal sum {s}");
        }
    }

    #[test]
    fn dense_capacity_error() {
        let spec = ChainSpec::new(13, 0.0, 0.0).unwrap();
        assert!(matches!(build_dense(&spec), Err(Error::Capacity { .. })));
    }

    #[test]
    fn matvec_matches_dense_on_random_vectors() {
        let spec = ChainSpec::new(10, 0.6, 0.2).unwrap();
        let h = build_dense(&spec).unwrap();
        for stream in 0..100 {
            let v = StateVector::random_unit(spec.dim(), 7, stream);
            let w = apply_hamiltonian(&spec, &v).unwrap();
            let dense_w = &h * nalgebra::DVector::from_column_slice(v.as_slice());
            let max_err = w
                .as_slice()
                .iter()
                .zip(dense_w.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_err <= 1e-12, "stream {stream}: max err {max_err}");
        }
    }

    proptest! {
        #[test]
        fn hamiltonian_is_symmetric(su in 0u64..1000, sv in 1000u64..2000) {
            let spec = ChainSpec::new(8, 0.6, 0.2).unwrap();
            let u = StateVector::random_unit(spec.dim(), 11, su);
            let v = StateVector::random_unit(spec.dim(), 11, sv);
            let hu = apply_hamiltonian(&spec, &u).unwrap();
            let hv = apply_hamiltonian(&spec, &v).unwrap();
            prop_assert!((u.dot(&hv) - hu.dot(&v)).abs() < 1e-10);
        }

        #[test]
        fn hamiltonian_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0u64..500) {
            let spec = ChainSpec::new(8, 0.47, 0.3).unwrap();
            let u = StateVector::random_unit(spec.dim(), 13, s);
            let v = StateVector::random_unit(spec.dim(), 13, s + 1000);
            let mut combo = u.clone();
            vecops::scale(a, combo.as_mut_slice());
            vecops::axpy(b, v.as_slice(), combo.as_mut_slice());
            let h_combo = apply_hamiltonian(&spec, &combo).unwrap();
            let hu = apply_hamiltonian(&spec, &u).unwrap();
            let hv = apply_hamiltonian(&spec, &v).unwrap();
            for i in 0..spec.dim() {
                let expect = a * hu.as_slice()[i] + b * hv.as_slice()[i];
                prop_assert!((h_combo.as_slice()[i] - expect).abs() < 1e-12);
            }
        }
    }
}
