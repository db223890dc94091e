//! SU(n) representation kernel.
//!
//! Basis conventions: the fundamental qunit uses `|j>` and the conjugate
//! qunit `|j̄>`, both indexed `0..n`. A pair vector is stored row-major over
//! its two slots. On-site pairs are fund-conj `[r, r̄]`; bond singlets are
//! conj-fund `[r̄, r+1]`. The conjugate space is a plain copy of `C^n`;
//! conjugation only shows up when a group element acts (`Ū` on conj slots).

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::{CMatrix, CVector, Result, VbsError, C64};

/// Rank of SU(n), i.e. the dimension of the fundamental representation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupRank(usize);

impl GroupRank {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(VbsError::InvalidRank(n));
        }
        Ok(Self(n))
    }

    pub fn n(self) -> usize {
        self.0
    }

    /// `n²`, the dimension of fund ⊗ conj.
    pub fn pair_dim(self) -> usize {
        self.0 * self.0
    }

    /// `n² − 1`, the dimension of the adjoint (physical) space.
    pub fn adjoint_dim(self) -> usize {
        self.0 * self.0 - 1
    }
}

impl std::fmt::Display for GroupRank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SU({})", self.0)
    }
}

/// Which tensor slot holds the conjugate qunit.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SlotOrder {
    ConjFund,
    FundConj,
}

/// Label `(l, p)` of a generalized Bell vector.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellLabel {
    pub l: usize,
    pub p: usize,
}

impl BellLabel {
    pub const SINGLET: BellLabel = BellLabel { l: 0, p: 0 };

    pub fn new(n: GroupRank, l: usize, p: usize) -> Result<Self> {
        if l >= n.n() || p >= n.n() {
            return Err(VbsError::InvalidArgument(format!(
                "Bell label ({l}, {p}) out of range for {n}"
            )));
        }
        Ok(Self { l, p })
    }

    pub fn is_singlet(self) -> bool {
        self == Self::SINGLET
    }

    /// All `n²` labels in lexicographic `(l, p)` order.
    pub fn all(n: GroupRank) -> impl Iterator<Item = BellLabel> {
        let n = n.n();
        (0..n).flat_map(move |l| (0..n).map(move |p| BellLabel { l, p }))
    }

    /// The `n² − 1` adjoint labels, lexicographic, singlet removed.
    pub fn adjoint(n: GroupRank) -> impl Iterator<Item = BellLabel> {
        Self::all(n).filter(|b| !b.is_singlet())
    }
}

impl std::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.l, self.p)
    }
}

/// Maximally entangled singlet `(1/√n) Σ_j |j̄>|j>`.
///
/// Both orderings put amplitude `1/√n` on the diagonal pairs `(j, j)`, so the
/// numerical vector is the same; the ordering only documents which slot is
/// conjugate.
pub fn singlet_vector(n: GroupRank, _ordering: SlotOrder) -> CVector {
    let d = n.n();
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut v = CVector::zeros(d * d);
    for j in 0..d {
        v[j * d + j] = amp;
    }
    v
}

/// Projector onto the adjoint subspace of fund ⊗ conj, `I ⊗ Ī − |Φ00><Φ00|`.
pub fn adjoint_projector(n: GroupRank) -> CMatrix {
    let s = singlet_vector(n, SlotOrder::FundConj);
    CMatrix::identity(n.pair_dim(), n.pair_dim()) - &s * s.adjoint()
}

/// Generalized Bell vector `(1/√n) Σ_j e^{2πi l j / n} |j ⊕ p>|j̄>` in
/// fund-conj ordering.
pub fn bell_vector(n: GroupRank, label: BellLabel) -> Result<CVector> {
    let BellLabel { l, p } = BellLabel::new(n, label.l, label.p)?;
    let d = n.n();
    let norm = 1.0 / (d as f64).sqrt();
    let mut v = CVector::zeros(d * d);
    for j in 0..d {
        // l*j reduced mod n keeps the phase argument exact for large products
        let phase = 2.0 * PI * (((l * j) % d) as f64) / d as f64;
        v[((j + p) % d) * d + j] = C64::from_polar(norm, phase);
    }
    Ok(v)
}

/// Bell vectors with `(l, p) ≠ (0, 0)`, lexicographic; an orthonormal basis
/// of the adjoint subspace.
pub fn adjoint_basis(n: GroupRank) -> Vec<CVector> {
    BellLabel::adjoint(n)
        .map(|b| bell_vector(n, b).expect("labels generated in range"))
        .collect()
}

/// Adjoint basis as the columns of an `n² × (n² − 1)` isometry.
pub fn adjoint_embedding(n: GroupRank) -> CMatrix {
    CMatrix::from_columns(&adjoint_basis(n))
}

/// Generalized Gell-Mann generators normalized to `Tr(t^a t^b) = δ_ab / 2`.
///
/// Order: symmetric off-diagonal `(j, k)`, antisymmetric off-diagonal `(j, k)`
/// (both with `j < k`, lexicographic), then the `n − 1` diagonal ones.
pub fn lie_generators(n: GroupRank) -> Vec<CMatrix> {
    let d = n.n();
    let mut out = Vec::with_capacity(n.adjoint_dim());
    let half = C64::new(0.5, 0.0);
    let i_half = C64::new(0.0, 0.5);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut t = CMatrix::zeros(d, d);
            t[(j, k)] = half;
            t[(k, j)] = half;
            out.push(t);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut t = CMatrix::zeros(d, d);
            t[(j, k)] = -i_half;
            t[(k, j)] = i_half;
            out.push(t);
        }
    }
    for l in 1..d {
        let c = (1.0 / (2.0 * (l * (l + 1)) as f64)).sqrt();
        let mut t = CMatrix::zeros(d, d);
        for j in 0..l {
            t[(j, j)] = C64::new(c, 0.0);
        }
        t[(l, l)] = C64::new(-c * l as f64, 0.0);
        out.push(t);
    }
    out
}

/// Seeded Haar-like element of SU(n).
///
/// A complex Gaussian matrix is orthonormalized by QR (with the phases of
/// `R`'s diagonal pushed into `Q`), then multiplied by `det^{-1/n}`.
pub fn random_special_unitary(n: GroupRank, seed: u64) -> CMatrix {
    let d = n.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    let det = q.determinant();
    let correction = C64::from_polar(1.0, -det.arg() / d as f64);
    q * correction
}

/// `U ⊗ Ū`, the action of a group element on a fund-conj pair.
pub fn pair_action(u: &CMatrix) -> CMatrix {
    u.kronecker(&u.map(|z| z.conj()))
}

/// Random unit vector in `C^dim`, drawn from the uniform sphere.
pub fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        let norm = v.norm();
        if norm > 1e-300 {
            return v / C64::new(norm, 0.0);
        }
    }
}
