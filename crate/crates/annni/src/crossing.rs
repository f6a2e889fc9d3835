//! Level-crossing and fidelity-drop detection along a frustration sweep.
//!
//! Candidate crossings are local minima of the sampled gap between two
//! energy curves that rise visibly on at least one side (near-degenerate
//! plateaus would otherwise flood the detector with noise minima). Each
//! candidate is refined by a golden-section search that re-solves the
//! eigenproblem per probe: the search objective is the deviation of the
//! lower level from its straight-line chord across the bracket, which
//! stays sharp at a kink even when the crossing pair is itself part of a
//! numerically degenerate multiplet. A candidate is accepted only if the
//! lower level's identity actually changes across the bracket and the
//! re-solved gap at the refined point falls below the gap tolerance:
//! true crossings between different symmetry sectors reach machine-zero
//! gap, avoided crossings stall at a finite one.

use crate::chain::StateVector;
use crate::error::{Error, Result};
use serde::Serialize;

/// Detection and refinement options.
#[derive(Debug, Clone, Copy)]
pub struct CrossingConfig {
    /// Refined gap at or below this accepts the candidate as a crossing.
    pub gap_tol: f64,
    /// Target resolution of the reported crossing location.
    pub alpha_resolution: f64,
    /// Minimum gap rise next to a candidate minimum; rejects noise
    /// minima on quasi-degenerate plateaus.
    pub rise_tol: f64,
    /// Lower-state overlap across the bracket above which the candidate
    /// is treated as "no identity change" and dropped.
    pub identity_overlap: f64,
    /// Hard cap on refinement probes per candidate.
    pub max_probes: usize,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        CrossingConfig {
            gap_tol: 1e-7,
            alpha_resolution: 1e-5,
            rise_tol: 1e-4,
            identity_overlap: 0.5,
            max_probes: 90,
        }
    }
}

/// One refined level crossing.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelCrossing {
    /// Refined crossing location.
    pub alpha: f64,
    /// Half-width of the final search bracket.
    pub resolution: f64,
    /// Re-solved gap between the crossing pair at `alpha`.
    pub refined_gap: f64,
    /// Smallest sampled gap on the coarse grid near this crossing.
    pub grid_gap: f64,
}

/// One detected fidelity drop (grid resolution).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FidelityDrop {
    pub alpha: f64,
    pub f_min: f64,
    pub prominence: f64,
}

/// What a fidelity drop turned out to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DropClass {
    /// Co-located with a ground-state level crossing: a transition signal.
    Critical,
    /// Co-located with an excited-state crossing only: a finite-size artifact.
    SpuriousEs,
    /// No crossing nearby.
    Unmatched,
}

/// A drop together with its classification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifiedDrop {
    pub drop: FidelityDrop,
    pub class: DropClass,
    /// Location of the matched crossing, when any.
    pub matched_crossing: Option<f64>,
}

/// Crossings and fidelity-drop classifications over one sweep.
#[derive(Debug, Clone, Serialize, Default)]
pub struct CrossingReport {
    pub gs_crossings: Vec<LevelCrossing>,
    pub es_crossings: Vec<LevelCrossing>,
    pub drops: Vec<ClassifiedDrop>,
    /// Match radius used for classification.
    pub match_radius: f64,
}

/// Re-solves the two tracked levels at an arbitrary sweep point.
///
/// `e_lower`/`e_upper` are the adjacent sorted eigenvalues forming the
/// tracked pair (E0/E1 for ground-state crossings, E1/E2 for
/// excited-state ones); `lower_state` carries the lower level's
/// eigenvector so the detector can tell whether the level's identity
/// changed across a bracket.
pub trait LevelPairProbe {
    fn sample(&self, alpha: f64) -> Result<PairSample>;
}

/// One probe solve.
pub struct PairSample {
    pub e_lower: f64,
    pub e_upper: f64,
    pub lower_state: StateVector,
}

impl<F> LevelPairProbe for F
where
    F: Fn(f64) -> Result<PairSample>,
{
    fn sample(&self, alpha: f64) -> Result<PairSample> {
        self(alpha)
    }
}

fn validate_grid(grid: &[f64], min_len: usize) -> Result<()> {
    if grid.len() < min_len {
        return Err(Error::BadCurve);
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadCurve);
    }
    Ok(())
}

/// Golden-section minimizer over `[a, b]`; returns (x_min, f_min, half-width).
fn golden_section(
    f: &mut impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    target_width: f64,
    max_evals: usize,
) -> (f64, f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2usize;
    while evals < max_evals && (b - a) > target_width {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    let (x, fx) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    (x, fx, (b - a) / 2.0)
}

struct Candidate {
    lo: f64,
    hi: f64,
    grid_gap: f64,
}

/// Interior local minima of |a - b| whose neighborhood rises above
/// `rise_tol` on at least one side.
fn gap_minima(grid: &[f64], curve_a: &[f64], curve_b: &[f64], rise_tol: f64) -> Vec<Candidate> {
    let g: Vec<f64> = curve_a
        .iter()
        .zip(curve_b)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < g.len() {
        let is_min = g[i] <= g[i - 1] && g[i] <= g[i + 1] && (g[i] < g[i - 1] || g[i] < g[i + 1]);
        let rises = g[i - 1] - g[i] >= rise_tol || g[i + 1] - g[i] >= rise_tol;
        if is_min && rises {
            out.push(Candidate {
                lo: grid[i - 1],
                hi: grid[i + 1],
                grid_gap: g[i],
            });
            i += 2; // skip the immediate neighbor: one dip, one candidate
        } else {
            i += 1;
        }
    }
    out
}

/// Locate and refine the crossings of two sampled energy curves.
///
/// `curve_a` and `curve_b` must be sampled on the same strictly
/// increasing `grid`. Every local minimum of their sampled gap is
/// refined through `probe`, which re-solves the pair at arbitrary
/// points; a crossing is accepted iff the refined gap is at most
/// `cfg.gap_tol`.
pub fn find_level_crossings(
    grid: &[f64],
    curve_a: &[f64],
    curve_b: &[f64],
    cfg: &CrossingConfig,
    probe: &dyn LevelPairProbe,
) -> Result<Vec<LevelCrossing>> {
    validate_grid(grid, 3)?;
    if curve_a.len() != grid.len() || curve_b.len() != grid.len() {
        return Err(Error::BadCurve);
    }

    let mut crossings = Vec::new();
    for cand in gap_minima(grid, curve_a, curve_b, cfg.rise_tol) {
        let lo = probe.sample(cand.lo)?;
        let hi = probe.sample(cand.hi)?;

        // No identity change across the bracket means the dip is not a
        // crossing of the tracked pair (plateau noise, avoided wiggle).
        if lo.lower_state.dot(&hi.lower_state).abs() > cfg.identity_overlap {
            continue;
        }

        // The lower level is the lower envelope of the crossing pair, so
        // it is concave across the bracket and its deviation above the
        // chord peaks exactly at the kink; minimize the negated deviation.
        let (a_lo, e_lo) = (cand.lo, lo.e_lower);
        let (a_hi, e_hi) = (cand.hi, hi.e_lower);
        let slope = (e_hi - e_lo) / (a_hi - a_lo);
        let mut last_gap = f64::INFINITY;
        let mut objective = |alpha: f64| -> f64 {
            match probe.sample(alpha) {
                Ok(s) => {
                    last_gap = s.e_upper - s.e_lower;
                    (e_lo + slope * (alpha - a_lo)) - s.e_lower
                }
                Err(_) => f64::MAX,
            }
        };

        // Shrink well past the reporting resolution so that a genuinely
        // crossing pair can run its gap down toward machine zero.
        let scale = f64::max(1.0, cand.hi.abs());
        let target = (1e-13 * scale).min(cfg.alpha_resolution);
        let (alpha, _, width) =
            golden_section(&mut objective, cand.lo, cand.hi, target, cfg.max_probes);

        let final_sample = probe.sample(alpha)?;
        let refined_gap = (final_sample.e_upper - final_sample.e_lower).min(last_gap.abs());
        if refined_gap <= cfg.gap_tol {
            crossings.push(LevelCrossing {
                alpha,
                resolution: width.max(cfg.alpha_resolution),
                refined_gap,
                grid_gap: cand.grid_gap,
            });
        }
    }
    Ok(crossings)
}

/// Local minima of a sampled fidelity curve with prominence at least
/// `prominence_tol`. Prominence is measured against the lower of the two
/// surrounding plateaus: the highest fidelity reached on each side
/// before the curve descends below the minimum again.
pub fn find_fidelity_drops(
    grid: &[f64],
    f_curve: &[f64],
    prominence_tol: f64,
) -> Result<Vec<FidelityDrop>> {
    validate_grid(grid, 3)?;
    if f_curve.len() != grid.len() {
        return Err(Error::BadCurve);
    }
    if f_curve.iter().any(|&f| !(-1e-9..=1.0 + 1e-9).contains(&f)) {
        return Err(Error::InvalidArgument(
            "fidelity values outside [0, 1]".into(),
        ));
    }

    let n = f_curve.len();
    let mut drops = Vec::new();
    for i in 1..n - 1 {
        let is_min = f_curve[i] <= f_curve[i - 1]
            && f_curve[i] <= f_curve[i + 1]
            && (f_curve[i] < f_curve[i - 1] || f_curve[i] < f_curve[i + 1]);
        if !is_min {
            continue;
        }
        // Walk outward until the curve dips back to (or below) this
        // minimum; the plateau height on that side is the max in between.
        let mut left_max = f_curve[i - 1];
        let mut j = i;
        while j > 0 {
            j -= 1;
            if f_curve[j] <= f_curve[i] {
                break;
            }
            left_max = left_max.max(f_curve[j]);
        }
        let mut right_max = f_curve[i + 1];
        let mut j = i;
        while j + 1 < n {
            j += 1;
            if f_curve[j] <= f_curve[i] {
                break;
            }
            right_max = right_max.max(f_curve[j]);
        }
        let prominence = left_max.min(right_max) - f_curve[i];
        if prominence >= prominence_tol {
            drops.push(FidelityDrop {
                alpha: grid[i],
                f_min: f_curve[i],
                prominence,
            });
        }
    }
    Ok(drops)
}

/// Label every drop: critical when a ground-state crossing sits within
/// `match_radius`, spurious when only an excited-state crossing does,
/// otherwise unmatched. A ground-state match wins ties.
pub fn classify_drops(
    drops: &[FidelityDrop],
    gs_crossings: &[LevelCrossing],
    es_crossings: &[LevelCrossing],
    match_radius: f64,
) -> Vec<ClassifiedDrop> {
    let nearest = |xs: &[LevelCrossing], alpha: f64| -> Option<f64> {
        xs.iter()
            .map(|c| c.alpha)
            .filter(|&a| (a - alpha).abs() <= match_radius)
            .min_by(|a, b| {
                (a - alpha)
                    .abs()
                    .partial_cmp(&(b - alpha).abs())
                    .unwrap()
            })
    };
    drops
        .iter()
        .map(|&drop| {
            if let Some(a) = nearest(gs_crossings, drop.alpha) {
                ClassifiedDrop {
                    drop,
                    class: DropClass::Critical,
                    matched_crossing: Some(a),
                }
            } else if let Some(a) = nearest(es_crossings, drop.alpha) {
                ClassifiedDrop {
                    drop,
                    class: DropClass::SpuriousEs,
                    matched_crossing: Some(a),
                }
            } else {
                ClassifiedDrop {
                    drop,
                    class: DropClass::Unmatched,
                    matched_crossing: None,
                }
            }
        })
        .collect()
}
