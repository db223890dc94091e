//! Generalized Bell measurements on every physical site of an open chain.
//!
//! Physical sites are stored in the adjoint Bell basis, so measuring site `r`
//! in that basis just fixes its coordinate. What remains is an (unnormalized)
//! two-qunit state of the boundary qunits `0̄` and `N+1`; entanglement
//! swapping makes it maximally entangled for every outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entanglement::von_neumann;
use crate::repn::{BellLabel, GroupRank};
use crate::state::{self, DenseState};
use crate::tensor::{self, DEFAULT_GROUPING_TOL};
use crate::transfer;
use crate::{CMatrix, CVector, Result, VbsError, C64};

/// Largest outcome set enumerated exhaustively.
pub const MAX_EXHAUSTIVE_OUTCOMES: u128 = 100_000;

#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub labels: Vec<BellLabel>,
    pub probability: f64,
    /// Normalized state of `(0̄, N+1)`, row-major over `(a, b)`.
    pub boundary_state: CVector,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MeasureMode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

struct Layout {
    d: usize,
    adj: usize,
    inner: usize,
}

impl Layout {
    fn of(state: &DenseState) -> Result<Self> {
        if !state.has_boundary_legs() {
            return Err(VbsError::InvalidArgument(
                "Bell measurements need an open chain with boundary qunits".into(),
            ));
        }
        let adj = state.n.adjoint_dim();
        Ok(Self {
            d: state.n.n(),
            adj,
            inner: adj.pow(state.sites as u32),
        })
    }

    /// Unnormalized boundary state for the flat outcome index `k`.
    fn branch(&self, amps: &[C64], k: usize) -> CVector {
        CVector::from_fn(self.d * self.d, |ab, _| {
            let (a, b) = (ab / self.d, ab % self.d);
            amps[(a * self.inner + k) * self.d + b]
        })
    }
}

fn labels_of(n: GroupRank, sites: usize, mut k: usize) -> Vec<BellLabel> {
    let adjoint: Vec<BellLabel> = BellLabel::adjoint(n).collect();
    let mut digits = vec![BellLabel::SINGLET; sites];
    for slot in digits.iter_mut().rev() {
        *slot = adjoint[k % adjoint.len()];
        k /= adjoint.len();
    }
    digits
}

fn outcome(state: &DenseState, layout: &Layout, norm: f64, k: usize) -> Option<MeasurementOutcome> {
    let v = layout.branch(&state.amplitudes, k);
    let weight = v.norm_squared();
    if weight == 0.0 {
        return None;
    }
    Some(MeasurementOutcome {
        labels: labels_of(state.n, state.sites, k),
        probability: weight / norm,
        boundary_state: &v / C64::new(weight.sqrt(), 0.0),
    })
}

/// Measures every physical site in the adjoint Bell basis.
pub fn bell_measure_all(state: &DenseState, mode: MeasureMode) -> Result<Vec<MeasurementOutcome>> {
    let layout = Layout::of(state)?;
    let norm = state::state_norm_dense(state);
    match mode {
        MeasureMode::Exhaustive => {
            if layout.inner as u128 > MAX_EXHAUSTIVE_OUTCOMES {
                return Err(VbsError::InvalidArgument(format!(
                    "{} outcomes exceed the exhaustive limit of {MAX_EXHAUSTIVE_OUTCOMES}",
                    layout.inner
                )));
            }
            Ok((0..layout.inner)
                .into_par_iter()
                .filter_map(|k| outcome(state, &layout, norm, k))
                .collect())
        }
        MeasureMode::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let k = sample_outcome(state, &layout, &mut rng);
                // zero-weight draws only arise from rounding; draw again
                if let Some(o) = outcome(state, &layout, norm, k) {
                    out.push(o);
                }
            }
            Ok(out)
        }
    }
}

/// Site-by-site Born sampling from the conditional distributions.
fn sample_outcome(state: &DenseState, layout: &Layout, rng: &mut ChaCha8Rng) -> usize {
    let amps = &state.amplitudes;
    let mut prefix = 0usize;
    let mut span = layout.inner;
    for _ in 0..state.sites {
        span /= layout.adj;
        let weights: Vec<f64> = (0..layout.adj)
            .map(|j| {
                let start = (prefix * layout.adj + j) * span;
                (0..layout.d)
                    .map(|a| {
                        let base = (a * layout.inner + start) * layout.d;
                        amps[base..base + span * layout.d]
                            .iter()
                            .map(|z| z.norm_sqr())
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut choice = layout.adj - 1;
        for (j, w) in weights.iter().enumerate() {
            if target < *w {
                choice = j;
                break;
            }
            target -= w;
        }
        prefix = prefix * layout.adj + choice;
    }
    prefix
}

fn check_unit(v: &CVector) -> Result<usize> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() || d < 2 {
        return Err(VbsError::DimensionMismatch(format!(
            "length {} is not n² for n >= 2",
            v.len()
        )));
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return Err(VbsError::InvalidArgument(format!(
            "vector norm is {}, expected 1",
            v.norm()
        )));
    }
    Ok(d)
}

/// Schmidt coefficients of a two-qunit unit vector, descending.
pub fn schmidt_coefficients(v: &CVector) -> Result<Vec<f64>> {
    let d = check_unit(v)?;
    let m = CMatrix::from_fn(d, d, |a, b| v[a * d + b]);
    let eig = tensor::hermitian_eigs(&(&m * m.adjoint()), DEFAULT_GROUPING_TOL)?;
    Ok(eig.values.iter().map(|&x| x.max(0.0).sqrt()).collect())
}

/// Von Neumann entropy of either single-qunit marginal.
pub fn boundary_entanglement(v: &CVector) -> Result<f64> {
    let probs: Vec<f64> = schmidt_coefficients(v)?.iter().map(|s| s * s).collect();
    Ok(von_neumann(&probs))
}

/// One row of the entanglement-length table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LengthRow {
    pub n: usize,
    pub sites: usize,
    pub outcomes: usize,
    pub probability_sum: f64,
    pub min_entropy: f64,
    pub max_entropy: f64,
    pub xi_c: f64,
}

/// Localized boundary entanglement for each chain length. Exhaustive
/// enumeration is used when the outcome count allows it, otherwise `samples`
/// outcomes are drawn (seed offset by `N`).
pub fn entanglement_length_report(
    n: GroupRank,
    sizes: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<LengthRow>> {
    sizes
        .iter()
        .map(|&sites| {
            let chain = state::build_dense_vbs(n, sites)?;
            let exhaustive = (n.adjoint_dim() as u128)
                .checked_pow(sites as u32)
                .is_some_and(|c| c <= MAX_EXHAUSTIVE_OUTCOMES);
            let mode = if exhaustive {
                MeasureMode::Exhaustive
            } else {
                MeasureMode::Sample {
                    count: samples,
                    seed: seed.wrapping_add(sites as u64),
                }
            };
            length_row(n, &chain, mode)
        })
        .collect()
}

pub fn length_row(n: GroupRank, chain: &DenseState, mode: MeasureMode) -> Result<LengthRow> {
    let outcomes = bell_measure_all(chain, mode)?;
    let entropies = outcomes
        .iter()
        .map(|o| boundary_entanglement(&o.boundary_state))
        .collect::<Result<Vec<_>>>()?;
    let probability_sum = match mode {
        MeasureMode::Exhaustive => outcomes.iter().map(|o| o.probability).sum(),
        MeasureMode::Sample { .. } => f64::NAN,
    };
    Ok(LengthRow {
        n: n.n(),
        sites: chain.sites,
        outcomes: outcomes.len(),
        probability_sum,
        min_entropy: entropies.iter().copied().fold(f64::INFINITY, f64::min),
        max_entropy: entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        xi_c: transfer::correlation_length(n),
    })
}
