//! The double-layer transfer matrix of the chain.
//!
//! `A(1)` carries four legs, each of dimension `n`:
//!
//! ```text
//!   lu ──┬── ru      ket layer (fundamental on the left, conjugate on the right)
//!        │
//!   ld ──┴── rd      bra layer
//! ```
//!
//! Its entries are `A[lu,ld,ru,rd] = (1/n) δ(lu,ld) δ(ru,rd) − (1/n²) δ(lu,ru) δ(ld,rd)`.
//! The left-right (LR) matricization groups `(lu, ld)` against `(ru, rd)` and
//! generates norms and correlators; the up-down (UD) matricization groups
//! `(lu, ru)` against `(ld, rd)` and shares its spectrum with block reduced
//! density matrices.

use serde::Serialize;

use crate::repn::{self, GroupRank};
use crate::tensor::{self, Axis, SpectralClass, SpectralForm, Tensor, DEFAULT_GROUPING_TOL};
use crate::{CMatrix, CVector, Result, VbsError, C64};

pub const LEFT_UP: &str = "lu";
pub const LEFT_DOWN: &str = "ld";
pub const RIGHT_UP: &str = "ru";
pub const RIGHT_DOWN: &str = "rd";

/// Open or periodic chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// `base_num^power / base_den^power`, evaluated from exact integers when they
/// fit in an f64 mantissa.
pub(crate) fn ratio_pow(base_num: u64, base_den: u64, power: u32) -> f64 {
    const EXACT: u128 = 1 << 53;
    match (
        (base_num as u128).checked_pow(power),
        (base_den as u128).checked_pow(power),
    ) {
        (Some(a), Some(b)) if a <= EXACT && b <= EXACT => a as f64 / b as f64,
        _ => (base_num as f64 / base_den as f64).powi(power as i32),
    }
}

fn sign_pow(power: u32) -> f64 {
    if power.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `λ1^L = (1 − 1/n²)^L`.
pub fn lambda1_pow(n: GroupRank, power: u32) -> f64 {
    ratio_pow(n.adjoint_dim() as u64, n.pair_dim() as u64, power)
}

/// `λ2^L = (−1/n²)^L`.
pub fn lambda2_pow(n: GroupRank, power: u32) -> f64 {
    sign_pow(power) * ratio_pow(1, n.pair_dim() as u64, power)
}

/// Closed-form constants of the chain.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub xi_c: f64,
}

impl ModelParams {
    pub fn new(n: GroupRank) -> Self {
        Self {
            n: n.n(),
            lambda1: lambda1_pow(n, 1),
            lambda2: lambda2_pow(n, 1),
            xi_c: correlation_length(n),
        }
    }
}

/// Four-leg transfer matrix `A(L)`.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub core: Tensor,
    pub n: GroupRank,
    pub power: u32,
}

impl TransferMatrix {
    /// Rows `(lu, ld)`, columns `(ru, rd)`.
    pub fn lr(&self) -> CMatrix {
        tensor::matricize(&self.core, &[LEFT_UP, LEFT_DOWN], &[RIGHT_UP, RIGHT_DOWN])
            .expect("transfer tensor carries the four standard legs")
    }

    /// Rows `(lu, ru)`, columns `(ld, rd)`.
    pub fn ud(&self) -> CMatrix {
        tensor::matricize(&self.core, &[LEFT_UP, RIGHT_UP], &[LEFT_DOWN, RIGHT_DOWN])
            .expect("transfer tensor carries the four standard legs")
    }

    /// Rebuilds the four-leg tensor from an LR matrix.
    pub fn from_lr(n: GroupRank, power: u32, lr: &CMatrix) -> Result<Self> {
        let d = n.n();
        let core = tensor::unmatricize(
            lr,
            &[Axis::new(LEFT_UP, d), Axis::new(LEFT_DOWN, d)],
            &[Axis::new(RIGHT_UP, d), Axis::new(RIGHT_DOWN, d)],
        )?;
        Ok(Self { core, n, power })
    }
}

pub(crate) fn leg_axes(n: GroupRank) -> Vec<Axis> {
    let d = n.n();
    vec![
        Axis::new(LEFT_UP, d),
        Axis::new(LEFT_DOWN, d),
        Axis::new(RIGHT_UP, d),
        Axis::new(RIGHT_DOWN, d),
    ]
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `δ(lu,ld) δ(ru,rd)`: lines closing each side between the two layers.
pub fn vertical_pair(n: GroupRank) -> Tensor {
    Tensor::from_fn(leg_axes(n), |ix| {
        C64::new(delta(ix[0], ix[1]) * delta(ix[2], ix[3]), 0.0)
    })
    .expect("standard legs")
}

/// `δ(lu,ru) δ(ld,rd)`: lines running straight through each layer.
pub fn horizontal_pair(n: GroupRank) -> Tensor {
    Tensor::from_fn(leg_axes(n), |ix| {
        C64::new(delta(ix[0], ix[2]) * delta(ix[1], ix[3]), 0.0)
    })
    .expect("standard legs")
}

/// `A(1)` in closed form.
pub fn transfer_single(n: GroupRank) -> TransferMatrix {
    let d = n.n() as f64;
    let (a, b) = (1.0 / d, 1.0 / (d * d));
    let core = Tensor::from_fn(leg_axes(n), |ix| {
        C64::new(
            a * delta(ix[0], ix[1]) * delta(ix[2], ix[3])
                - b * delta(ix[0], ix[2]) * delta(ix[1], ix[3]),
            0.0,
        )
    })
    .expect("standard legs");
    TransferMatrix { core, n, power: 1 }
}

/// LR spectrum of `A(1)`: `{(1 − 1/n², 1), (−1/n², n² − 1)}`.
pub fn lr_spectrum(n: GroupRank) -> SpectralForm {
    SpectralForm {
        classes: vec![
            SpectralClass {
                value: lambda1_pow(n, 1),
                multiplicity: 1,
            },
            SpectralClass {
                value: lambda2_pow(n, 1),
                multiplicity: n.adjoint_dim(),
            },
        ],
        grouping_tol: DEFAULT_GROUPING_TOL,
    }
}

/// Normalized dominant LR eigenvector `Ω = (1/√n) Σ_α |α, α>` on `(lu, ld)`.
pub fn dominant_vector(n: GroupRank) -> CVector {
    repn::singlet_vector(n, repn::SlotOrder::FundConj)
}

/// `A(L) = λ1^L P_Ω + λ2^L (I − P_Ω)` in LR form.
pub fn transfer_power(n: GroupRank, length: u32) -> Result<TransferMatrix> {
    if length < 1 {
        return Err(VbsError::InvalidArgument(
            "block length L must be at least 1".into(),
        ));
    }
    let dim = n.pair_dim();
    let omega = dominant_vector(n);
    let p = &omega * omega.adjoint();
    let (l1, l2) = (lambda1_pow(n, length), lambda2_pow(n, length));
    let lr = &p * C64::new(l1, 0.0) + (CMatrix::identity(dim, dim) - &p) * C64::new(l2, 0.0);
    TransferMatrix::from_lr(n, length, &lr)
}

/// `ξ_C = 1 / ln(n² − 1)`.
pub fn correlation_length(n: GroupRank) -> f64 {
    1.0 / (n.adjoint_dim() as f64).ln()
}

/// Squared norm of the `sites`-site chain.
///
/// Periodic: `Tr A(1)^N = λ1^N + (n² − 1) λ2^N`. Open: the free boundary legs
/// are summed, `(1/n) Σ_{a,b} A(N)[(a,a),(b,b)]`, which with unit-norm bond
/// singlets equals `λ1^N`.
pub fn chain_norm(n: GroupRank, sites: u32, bc: Boundary) -> Result<f64> {
    if sites < 1 {
        return Err(VbsError::InvalidArgument(
            "chain needs at least one site".into(),
        ));
    }
    let lr = transfer_power(n, sites)?.lr();
    Ok(match bc {
        Boundary::Periodic => lr.trace().re,
        Boundary::Open => {
            let d = n.n();
            let mut total = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    total += lr[(a * d + a, b * d + b)];
                }
            }
            total.re / d as f64
        }
    })
}

/// Local observable `t ⊗ I − I ⊗ tᵀ` on a fund-conj pair (adjoint action).
pub fn adjoint_observable(t: &CMatrix) -> CMatrix {
    let d = t.nrows();
    let id = CMatrix::identity(d, d);
    t.kronecker(&id) - id.kronecker(&t.transpose())
}

/// LR transfer matrix with `op` (acting on the embedded pair space) inserted
/// between the ket and bra layers of one site.
pub fn inserted_transfer(n: GroupRank, op: &CMatrix) -> Result<CMatrix> {
    let dim = n.pair_dim();
    if op.nrows() != dim || op.ncols() != dim {
        return Err(VbsError::DimensionMismatch(format!(
            "operator must be {dim}x{dim}"
        )));
    }
    let w = repn::adjoint_projector(n);
    // ket amplitude W[s,(f,c)], bra conj(W[s',(f',c')]) -> (W† O W)[(f',c'),(f,c)]
    let sandwich = w.adjoint() * op * &w;
    let d = n.n();
    let scale = 1.0 / d as f64;
    Ok(CMatrix::from_fn(dim, dim, |row, col| {
        let (f, fp) = (row / d, row % d);
        let (c, cp) = (col / d, col % d);
        sandwich[(fp * d + cp, f * d + c)] * scale
    }))
}

fn generator_observable(n: GroupRank, index: usize) -> Result<CMatrix> {
    let gens = repn::lie_generators(n);
    let t = gens.get(index).ok_or_else(|| {
        VbsError::InvalidArgument(format!(
            "generator index {index} out of range 0..{}",
            gens.len()
        ))
    })?;
    Ok(adjoint_observable(t))
}

/// `⟨O^a_i⟩` in the infinite chain.
pub fn one_point(n: GroupRank, a: usize) -> Result<f64> {
    let omega = dominant_vector(n);
    let ins = inserted_transfer(n, &generator_observable(n, a)?)?;
    Ok((omega.transpose() * ins * &omega)[(0, 0)].re / lambda1_pow(n, 1))
}

/// Connected `⟨O^a_i O^b_{i+d}⟩ − ⟨O^a⟩⟨O^b⟩` in the infinite chain, with the
/// dominant eigenvector `Ω` closing both ends.
pub fn connected_correlator(n: GroupRank, a: usize, b: usize, distance: u32) -> Result<f64> {
    if distance < 1 {
        return Err(VbsError::InvalidArgument(
            "correlator distance must be at least 1".into(),
        ));
    }
    let omega = dominant_vector(n);
    let ins_a = inserted_transfer(n, &generator_observable(n, a)?)?;
    let ins_b = inserted_transfer(n, &generator_observable(n, b)?)?;
    let middle = if distance == 1 {
        CMatrix::identity(n.pair_dim(), n.pair_dim())
    } else {
        transfer_power(n, distance - 1)?.lr()
    };
    let two = (omega.transpose() * ins_a * middle * ins_b * &omega)[(0, 0)].re;
    let norm = lambda1_pow(n, distance + 1);
    Ok(two / norm - one_point(n, a)? * one_point(n, b)?)
}

/// Acts with `U` on the fundamental legs and `Ū` on the conjugate legs:
/// `(lu, ld, ru, rd) ← (U, Ū, Ū, U)`.
pub fn conjugate_legs(t: &TransferMatrix, u: &CMatrix) -> Result<Tensor> {
    let ubar = u.map(|z| z.conj());
    let mut out = t.core.clone();
    for (leg, g) in [
        (LEFT_UP, u),
        (LEFT_DOWN, &ubar),
        (RIGHT_UP, &ubar),
        (RIGHT_DOWN, u),
    ] {
        let d = g.nrows();
        let gt = tensor::unmatricize(g, &[Axis::new("new", d)], &[Axis::new("old", d)])?;
        let names: Vec<String> = out.axes().iter().map(|a| a.name.clone()).collect();
        out = tensor::contract(&gt, &out, &[("old", leg)])?.rename("new", leg)?;
        let order: Vec<&str> = names.iter().map(String::as_str).collect();
        out = out.permute(&order)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::hermitian_eigs;

    fn rank(n: usize) -> GroupRank {
        GroupRank::new(n).unwrap()
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn exact_powers() {
        assert_eq!(lambda1_pow(rank(2), 1), 0.75);
        assert_eq!(lambda2_pow(rank(2), 3), -1.0 / 64.0);
        assert_eq!(lambda1_pow(rank(3), 2), 64.0 / 81.0);
        // falls back to powi beyond the exact range
        let big = lambda1_pow(rank(6), 40);
        assert!((big - (35.0f64 / 36.0).powi(40)).abs() < 1e-15);
    }

    #[test]
    fn params_invariants() {
        for n in 2..=8 {
            let p = ModelParams::new(rank(n));
            assert!(p.lambda2.abs() < p.lambda1);
            assert!(p.xi_c > 0.0);
        }
    }

    #[test]
    fn single_n2_lr_and_ud() {
        let a = transfer_single(rank(2));
        let e = hermitian_eigs(&a.lr(), DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(e.spectrum.multiplicities(), vec![1, 3]);
        assert!((e.spectrum.classes[0].value - 0.75).abs() < 1e-14);
        assert!((e.spectrum.classes[1].value + 0.25).abs() < 1e-14);
        let ud = a.ud();
        assert!((ud.trace().re - 1.5).abs() < 1e-15);
        let s = repn::singlet_vector(rank(2), repn::SlotOrder::FundConj);
        let expected = (CMatrix::identity(4, 4) - &s * s.adjoint()) * C64::new(0.5, 0.0);
        assert!(max_abs(&(ud - expected)) < 1e-15);
    }

    #[test]
    fn lr_equals_singlet_projector_minus_shift() {
        for n in 2..=5 {
            let a = transfer_single(rank(n));
            let omega = dominant_vector(rank(n));
            let dim = n * n;
            let expected = &omega * omega.adjoint()
                - CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
            assert!(max_abs(&(a.lr() - expected)) < 1e-15);
        }
    }

    #[test]
    fn lr_spectrum_values() {
        let s = lr_spectrum(rank(3));
        assert_eq!(
            s.classes[0],
            SpectralClass {
                value: 8.0 / 9.0,
                multiplicity: 1
            }
        );
        assert_eq!(
            s.classes[1],
            SpectralClass {
                value: -1.0 / 9.0,
                multiplicity: 8
            }
        );
    }

    #[test]
    fn power_one_is_single_and_errors() {
        for n in 2..=5 {
            let p = transfer_power(rank(n), 1).unwrap();
            assert!(p.core.max_abs_diff(&transfer_single(rank(n)).core).unwrap() < 1e-14);
        }
        assert!(transfer_power(rank(2), 0).is_err());
    }

    #[test]
    fn lr_is_hermitian() {
        for n in 2..=5 {
            for l in 1..=4 {
                assert!(
                    tensor::hermiticity_defect(&transfer_power(rank(n), l).unwrap().lr()) < 1e-12
                );
            }
        }
    }

    #[test]
    fn ud_identity_decomposition() {
        // vertical pair in UD form = (1/n)(UD of horizontal pair) + W', W' a rank n²−1 projector
        for n in 2..=5 {
            let vert = TransferMatrix {
                core: vertical_pair(rank(n)),
                n: rank(n),
                power: 1,
            }
            .ud();
            let horiz = TransferMatrix {
                core: horizontal_pair(rank(n)),
                n: rank(n),
                power: 1,
            }
            .ud();
            let singlet_part = &horiz * C64::new(1.0 / n as f64, 0.0);
            let w_prime = &vert - &singlet_part;
            assert!(max_abs(&(&w_prime * &w_prime - &w_prime)) < 1e-13);
            assert!((w_prime.trace().re - (n * n - 1) as f64).abs() < 1e-13);
            assert!(max_abs(&(&singlet_part * &singlet_part - &singlet_part)) < 1e-13);
        }
    }

    #[test]
    fn correlation_length_values() {
        assert!((correlation_length(rank(2)) - 0.910239).abs() < 1e-6);
        assert!((correlation_length(rank(3)) - 0.480898).abs() < 1e-6);
    }

    #[test]
    fn periodic_norm_n2_n4() {
        let v = chain_norm(rank(2), 4, Boundary::Periodic).unwrap();
        assert!((v - 21.0 / 64.0).abs() < 1e-15);
        assert!(chain_norm(rank(2), 0, Boundary::Open).is_err());
    }

    #[test]
    fn open_norm_ratio_and_density() {
        for n in 2..=5 {
            for sites in 1..12 {
                let a = chain_norm(rank(n), sites, Boundary::Open).unwrap();
                let b = chain_norm(rank(n), sites + 1, Boundary::Open).unwrap();
                assert!((b / a - (1.0 - 1.0 / (n * n) as f64)).abs() < 1e-12);
            }
        }
        let density = chain_norm(rank(2), 20, Boundary::Open).unwrap().ln() / 20.0;
        assert!((density - 0.75f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn one_point_vanishes() {
        for n in 2..=4 {
            for a in 0..n * n - 1 {
                assert!(one_point(rank(n), a).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correlator_decay_ratio() {
        for n in 2..=4 {
            for a in 0..n * n - 1 {
                for d in 1..6 {
                    let c0 = connected_correlator(rank(n), a, a, d).unwrap();
                    let c1 = connected_correlator(rank(n), a, a, d + 1).unwrap();
                    assert!(c0.abs() > 1e-14);
                    assert!((c1 / c0 + 1.0 / (n * n - 1) as f64).abs() < 1e-10);
                }
            }
        }
        assert!(connected_correlator(rank(2), 3, 0, 1).is_err());
        assert!(connected_correlator(rank(2), 0, 0, 0).is_err());
    }

    #[test]
    fn invariance_under_group_action() {
        for n in 2..=4 {
            for l in [1, 3] {
                let a = transfer_power(rank(n), l).unwrap();
                for seed in 0..20 {
                    let u = repn::random_special_unitary(rank(n), seed);
                    let rotated = conjugate_legs(&a, &u).unwrap();
                    assert!(rotated.max_abs_diff(&a.core).unwrap() < 1e-11);
                }
            }
        }
    }
}
