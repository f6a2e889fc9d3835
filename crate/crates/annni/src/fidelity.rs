//! Ground-state fidelity, its excited-state overlap decomposition, and
//! the fidelity susceptibility.
//!
//! The fidelity between ground states at neighboring frustration
//! parameters is the modulus of their overlap. Expanding the ground
//! state at `alpha` in the eigenbasis of the shifted Hamiltonian,
//! `|Psi(alpha)> = sum_m C_m |m>`, ties the fidelity to the excited
//! weights through `F = sqrt(1 - sum_{m != 0} |C_m|^2)`; `decompose`
//! reports the truncated weights together with the residual mass so the
//! identity stays falsifiable.

use crate::chain::StateVector;
use crate::error::{Error, Result};
use crate::solver::Spectrum;

const NORM_SLACK: f64 = 1e-8;

fn check_normalized(v: &StateVector) -> Result<()> {
    let n = v.norm();
    if (n - 1.0).abs() > NORM_SLACK {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

/// |<a, b>| for unit-normalized states. Symmetric and invariant under
/// independent sign flips of either argument.
pub fn fidelity(gs_a: &StateVector, gs_b: &StateVector) -> Result<f64> {
    if gs_a.len() != gs_b.len() {
        return Err(Error::DimensionMismatch {
            expected: gs_a.len(),
            got: gs_b.len(),
        });
    }
    check_normalized(gs_a)?;
    check_normalized(gs_b)?;
    Ok(gs_a.dot(gs_b).abs().min(1.0))
}

/// Norm of the projection of `gs_a` onto the (possibly degenerate)
/// ground manifold of the shifted spectrum. Equals the plain fidelity
/// when the ground state is unique; at an exact degeneracy it is the
/// representation-independent overlap with the whole manifold.
pub fn subspace_fidelity(gs_a: &StateVector, spectrum_b: &Spectrum, cluster_tol: f64) -> Result<f64> {
    check_normalized(gs_a)?;
    let manifold = spectrum_b.ground_multiplet(cluster_tol);
    let mut mass = 0.0;
    for m in manifold {
        let c = spectrum_b.eigenvectors()[m].dot(gs_a);
        mass += c * c;
    }
    Ok(mass.sqrt().min(1.0))
}

/// Fidelity plus per-excited-state overlap weights at one sweep point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OverlapDecomposition {
    /// Sweep point the ground state was taken at.
    pub alpha: f64,
    /// Offset of the shifted Hamiltonian.
    pub d_alpha: f64,
    /// |C_0|, the ground-state overlap.
    pub fidelity: f64,
    /// |C_m|^2 for m = 0..k-1; index 0 is the ground-state weight.
    pub weights: Vec<f64>,
    /// 1 - sum(weights): overlap mass outside the computed k states.
    pub residual_weight: f64,
}

/// Expand `gs_a` in the eigenbasis of the shifted Hamiltonian.
///
/// Weights of individual members of a degenerate multiplet depend on the
/// solver's basis choice inside the multiplet; only multiplet sums are
/// basis-invariant.
pub fn decompose(gs_a: &StateVector, spectrum_b: &Spectrum, alpha: f64, d_alpha: f64) -> Result<OverlapDecomposition> {
    if !spectrum_b.converged() {
        return Err(Error::Unconverged(format!(
            "refusing to decompose against an unconverged spectrum (residuals {:?})",
            spectrum_b.residual_norms()
        )));
    }
    check_normalized(gs_a)?;
    if spectrum_b.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if spectrum_b.eigenvectors()[0].len() != gs_a.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum_b.eigenvectors()[0].len(),
            got: gs_a.len(),
        });
    }

    let weights: Vec<f64> = spectrum_b
        .eigenvectors()
        .iter()
        .map(|m| {
            let c = m.dot(gs_a);
            c * c
        })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(OverlapDecomposition {
        alpha,
        d_alpha,
        fidelity: weights[0].sqrt(),
        weights,
        residual_weight: 1.0 - total,
    })
}

/// chi_F = 2 (1 - F) / d_alpha^2, the small-offset fidelity
/// susceptibility.
pub fn fidelity_susceptibility(f: f64, d_alpha: f64) -> Result<f64> {
    if !(d_alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "d_alpha = {d_alpha} must be > 0"
        )));
    }
    if !(-1e-12..=1.0 + 1e-12).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "fidelity = {f} outside [0, 1]"
        )));
    }
    let f = f.clamp(0.0, 1.0);
    Ok(2.0 * (1.0 - f) / (d_alpha * d_alpha))
}
