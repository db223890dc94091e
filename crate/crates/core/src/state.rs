//! Dense exact construction of finite SU(n) VBS chains.
//!
//! Subsystem order is: left boundary qunit `0̄` (conjugate, dim `n`), sites
//! `1..=N` (dim `n² − 1` each, coordinates in the adjoint Bell basis), right
//! boundary qunit `N+1` (fundamental, dim `n`). Periodic chains have no
//! boundary qunits. Amplitudes are row-major over that list and are left
//! unnormalized: with unit-norm bond singlets the squared norm of an open
//! chain is `(1 − 1/n²)^N`.

use std::io::{Read, Write};
use std::ops::RangeInclusive;

use crate::repn::{self, GroupRank, SlotOrder};
use crate::tensor;
use crate::{CMatrix, CVector, Result, VbsError, C64};

/// Default cap on the number of complex amplitudes a dense state may hold.
pub const DEFAULT_MAX_AMPLITUDES: u128 = 1 << 26;

/// Environment variable overriding [`DEFAULT_MAX_AMPLITUDES`].
pub const BUDGET_ENV: &str = "VBS_MAX_AMPLITUDES";

pub fn amplitude_budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_MAX_AMPLITUDES)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Open,
    /// Closed ring; the orientation picks which slot order the bond singlets
    /// use (`ConjFund` bonds `[r̄, r+1]`, `FundConj` bonds `[r, (r+1)̄]`).
    Periodic(SlotOrder),
}

impl BoundaryCondition {
    fn code(self) -> u64 {
        match self {
            BoundaryCondition::Open => 0,
            BoundaryCondition::Periodic(SlotOrder::ConjFund) => 1,
            BoundaryCondition::Periodic(SlotOrder::FundConj) => 2,
        }
    }

    fn from_code(code: u64) -> Result<Self> {
        match code {
            0 => Ok(BoundaryCondition::Open),
            1 => Ok(BoundaryCondition::Periodic(SlotOrder::ConjFund)),
            2 => Ok(BoundaryCondition::Periodic(SlotOrder::FundConj)),
            other => Err(VbsError::Format(format!("unknown boundary code {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    pub n: GroupRank,
    pub sites: usize,
    pub bc: BoundaryCondition,
    pub dims: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

/// Site matrices `M^k[f][c] = conj(<f, c̄ | v_k>)` for the adjoint Bell basis.
fn site_matrices(n: GroupRank, transpose: bool) -> Vec<CMatrix> {
    let d = n.n();
    repn::adjoint_basis(n)
        .iter()
        .map(|v| {
            let m = CMatrix::from_fn(d, d, |f, c| v[f * d + c].conj());
            if transpose {
                m.transpose()
            } else {
                m
            }
        })
        .collect()
}

fn check_budget(n: GroupRank, sites: usize, budget: u128) -> Result<()> {
    if sites < 1 {
        return Err(VbsError::InvalidArgument(
            "chain needs at least one site".into(),
        ));
    }
    let adj = n.adjoint_dim() as u128;
    let requested =
        (n.pair_dim() as u128).saturating_mul(adj.checked_pow(sites as u32).unwrap_or(u128::MAX));
    if requested > budget {
        return Err(VbsError::MemoryBudget { requested, budget });
    }
    Ok(())
}

/// Sweeps the site matrices along the chain: the result is laid out as
/// `[x0, k1, ..., kN, y]` where `x0` is the first virtual index and `y` the
/// last, each bond contributing `1/√n`.
fn sweep(n: GroupRank, sites: usize, mats: &[CMatrix], bonds_scale: f64) -> Vec<C64> {
    let d = n.n();
    let adj = mats.len();
    let scale = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut cur = vec![C64::new(0.0, 0.0); d * d];
    for a in 0..d {
        cur[a * d + a] = C64::new(bonds_scale, 0.0);
    }
    for _ in 0..sites {
        let outer = cur.len() / d;
        let mut next = vec![C64::new(0.0, 0.0); outer * adj * d];
        for o in 0..outer {
            let prev = &cur[o * d..(o + 1) * d];
            for (k, m) in mats.iter().enumerate() {
                let dst = &mut next[(o * adj + k) * d..(o * adj + k + 1) * d];
                for (x, &px) in prev.iter().enumerate() {
                    if px == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (c, slot) in dst.iter_mut().enumerate() {
                        *slot += px * m[(x, c)];
                    }
                }
                for slot in dst.iter_mut() {
                    *slot *= scale;
                }
            }
        }
        cur = next;
    }
    cur
}

/// Open chain with explicit boundary qunits, under the configured budget.
pub fn build_dense_vbs(n: GroupRank, sites: usize) -> Result<DenseState> {
    build_dense_vbs_with_budget(n, sites, amplitude_budget())
}

pub fn build_dense_vbs_with_budget(n: GroupRank, sites: usize, budget: u128) -> Result<DenseState> {
    check_budget(n, sites, budget)?;
    let d = n.n();
    let amplitudes = sweep(n, sites, &site_matrices(n, false), 1.0 / (d as f64).sqrt());
    let mut dims = vec![d];
    dims.extend(std::iter::repeat_n(n.adjoint_dim(), sites));
    dims.push(d);
    Ok(DenseState {
        n,
        sites,
        bc: BoundaryCondition::Open,
        dims,
        amplitudes,
    })
}

pub fn build_dense_vbs_periodic(
    n: GroupRank,
    sites: usize,
    orientation: SlotOrder,
) -> Result<DenseState> {
    build_dense_vbs_periodic_with_budget(n, sites, orientation, amplitude_budget())
}

pub fn build_dense_vbs_periodic_with_budget(
    n: GroupRank,
    sites: usize,
    orientation: SlotOrder,
    budget: u128,
) -> Result<DenseState> {
    if sites < 2 {
        return Err(VbsError::InvalidArgument(
            "periodic chain needs at least two sites".into(),
        ));
    }
    check_budget(n, sites, budget)?;
    let d = n.n();
    let mats = site_matrices(n, orientation == SlotOrder::FundConj);
    let open = sweep(n, sites, &mats, 1.0);
    let inner = open.len() / (d * d);
    let mut amplitudes = vec![C64::new(0.0, 0.0); inner];
    for a in 0..d {
        for (k, amp) in amplitudes.iter_mut().enumerate() {
            *amp += open[(a * inner + k) * d + a];
        }
    }
    Ok(DenseState {
        n,
        sites,
        bc: BoundaryCondition::Periodic(orientation),
        dims: vec![n.adjoint_dim(); sites],
        amplitudes,
    })
}

/// Applies `op` (`m × dims[k]`) to subsystem `k`, replacing its dimension by `m`.
pub(crate) fn apply_to_subsystem<R, C, S>(
    dims: &[usize],
    amps: &[C64],
    k: usize,
    op: &nalgebra::Matrix<C64, R, C, S>,
) -> (Vec<usize>, Vec<C64>)
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<C64, R, C>,
{
    let outer: usize = dims[..k].iter().product();
    let inner: usize = dims[k + 1..].iter().product();
    let (m, dk) = (op.nrows(), dims[k]);
    let mut out = vec![C64::new(0.0, 0.0); outer * m * inner];
    for o in 0..outer {
        for i in 0..m {
            let dst = &mut out[(o * m + i) * inner..(o * m + i + 1) * inner];
            for j in 0..dk {
                let w = op[(i, j)];
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = &amps[(o * dk + j) * inner..(o * dk + j + 1) * inner];
                for (x, &y) in dst.iter_mut().zip(src) {
                    *x += w * y;
                }
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[k] = m;
    (new_dims, out)
}

impl DenseState {
    pub fn has_boundary_legs(&self) -> bool {
        self.bc == BoundaryCondition::Open && self.dims.len() == self.sites + 2
    }

    /// Subsystem index of physical site `site` (1-based).
    pub fn site_subsystem(&self, site: usize) -> usize {
        if self.has_boundary_legs() {
            site
        } else {
            site - 1
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        state_norm_dense(self)
    }

    pub fn normalized(&self) -> DenseState {
        let scale = C64::new(1.0 / self.norm_sqr().sqrt(), 0.0);
        DenseState {
            amplitudes: self.amplitudes.iter().map(|z| z * scale).collect(),
            ..self.clone()
        }
    }

    /// Applies square `op` to subsystem `k`.
    pub fn apply_local(&self, k: usize, op: &CMatrix) -> Result<DenseState> {
        if k >= self.dims.len() || op.ncols() != self.dims[k] || op.nrows() != self.dims[k] {
            return Err(VbsError::DimensionMismatch(format!(
                "operator does not fit subsystem {k}"
            )));
        }
        let (dims, amplitudes) = apply_to_subsystem(&self.dims, &self.amplitudes, k, op);
        Ok(DenseState {
            dims,
            amplitudes,
            ..self.clone()
        })
    }

    /// Global rotation: `U ⊗ Ū` on every site (restricted to the adjoint
    /// basis), `Ū` on the conjugate boundary and `U` on the fundamental one.
    pub fn rotate(&self, u: &CMatrix) -> Result<DenseState> {
        let basis = repn::adjoint_embedding(self.n);
        let site_op = basis.adjoint() * repn::pair_action(u) * &basis;
        let mut out = self.clone();
        for site in 1..=self.sites {
            out = out.apply_local(self.site_subsystem(site), &site_op)?;
        }
        if self.has_boundary_legs() {
            out = out.apply_local(0, &u.map(|z| z.conj()))?;
            out = out.apply_local(self.sites + 1, u)?;
        }
        Ok(out)
    }

    /// Projects both boundary qunits onto `<left|` and `<right|`, leaving an
    /// open chain of physical sites only.
    pub fn pin_boundaries(&self, left: &CVector, right: &CVector) -> Result<DenseState> {
        if !self.has_boundary_legs() {
            return Err(VbsError::InvalidArgument(
                "state has no boundary qunits".into(),
            ));
        }
        let d = self.n.n();
        if left.len() != d || right.len() != d {
            return Err(VbsError::DimensionMismatch(format!(
                "boundary vectors must have dimension {d}"
            )));
        }
        let (dims, amps) = apply_to_subsystem(&self.dims, &self.amplitudes, 0, &left.adjoint());
        let last = dims.len() - 1;
        let (dims, amps) = apply_to_subsystem(&dims, &amps, last, &right.adjoint());
        Ok(DenseState {
            dims: dims[1..last].to_vec(),
            amplitudes: amps,
            ..self.clone()
        })
    }

    /// Reduced density matrix (unit trace) of arbitrary subsystems.
    pub fn reduced_density_of(&self, subsystems: &[usize]) -> Result<CMatrix> {
        let rho = tensor::reduced_density_from_vector(&self.amplitudes, &self.dims, subsystems)?;
        let tr = rho.trace().re;
        Ok(rho / C64::new(tr, 0.0))
    }

    /// Binary dump: little-endian u64 header `n, N, bc, #dims, dims...`, then
    /// interleaved `re, im` f64 pairs.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = vec![
            self.n.n() as u64,
            self.sites as u64,
            self.bc.code(),
            self.dims.len() as u64,
        ];
        header.extend(self.dims.iter().map(|&d| d as u64));
        for h in header {
            w.write_all(&h.to_le_bytes())?;
        }
        for z in &self.amplitudes {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<DenseState> {
        fn word(r: &mut impl Read) -> Result<u64> {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        }
        let n = GroupRank::new(word(&mut r)? as usize)?;
        let sites = word(&mut r)? as usize;
        let bc = BoundaryCondition::from_code(word(&mut r)?)?;
        let ndims = word(&mut r)? as usize;
        if ndims > sites + 2 {
            return Err(VbsError::Format(format!(
                "{ndims} subsystems for {sites} sites"
            )));
        }
        let dims = (0..ndims)
            .map(|_| word(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| VbsError::Format("dimension product overflows".into()))?;
        let mut amplitudes = Vec::with_capacity(total);
        let mut buf = [0u8; 16];
        for _ in 0..total {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            amplitudes.push(C64::new(re, im));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(VbsError::Format(format!("{} trailing bytes", rest.len())));
        }
        Ok(DenseState {
            n,
            sites,
            bc,
            dims,
            amplitudes,
        })
    }
}

/// Unit-trace reduced density matrix of the contiguous physical sites in
/// `range` (1-based); boundary qunits are included only when flagged.
pub fn reduced_density(
    state: &DenseState,
    range: RangeInclusive<usize>,
    include_boundaries: bool,
) -> Result<CMatrix> {
    let (lo, hi) = (*range.start(), *range.end());
    if lo < 1 || hi > state.sites || lo > hi {
        return Err(VbsError::InvalidArgument(format!(
            "site interval {lo}..={hi} is empty or outside 1..={}",
            state.sites
        )));
    }
    let mut keep: Vec<usize> = range.map(|s| state.site_subsystem(s)).collect();
    if include_boundaries {
        if !state.has_boundary_legs() {
            return Err(VbsError::InvalidArgument(
                "state has no boundary qunits".into(),
            ));
        }
        keep.insert(0, 0);
        keep.push(state.sites + 1);
    }
    state.reduced_density_of(&keep)
}

/// Squared 2-norm of the amplitudes, with Neumaier compensation so that
/// chains of tens of millions of amplitudes keep full precision.
pub fn state_norm_dense(state: &DenseState) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in state.amplitudes.iter().map(|z| z.norm_sqr()) {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{hermitian_eigs, DEFAULT_GROUPING_TOL};

    fn rank(n: usize) -> GroupRank {
        GroupRank::new(n).unwrap()
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn n2_single_site_norm() {
        let s = build_dense_vbs(rank(2), 1).unwrap();
        assert_eq!(s.dims, vec![2, 3, 2]);
        assert!((state_norm_dense(&s) - 0.75).abs() < 1e-15);
        assert!((state_norm_dense(&s.normalized()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn open_norm_ratio() {
        for (n, max_sites) in [(2, 7), (3, 4), (4, 2)] {
            for sites in 1..max_sites {
                let a = build_dense_vbs(rank(n), sites).unwrap().norm_sqr();
                let b = build_dense_vbs(rank(n), sites + 1).unwrap().norm_sqr();
                assert!((b / a - (1.0 - 1.0 / (n * n) as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_and_argument_errors() {
        assert!(matches!(
            build_dense_vbs_with_budget(rank(2), 5, 100),
            Err(VbsError::MemoryBudget { .. })
        ));
        assert!(build_dense_vbs(rank(2), 0).is_err());
        assert!(build_dense_vbs_periodic(rank(2), 1, SlotOrder::ConjFund).is_err());
    }

    #[test]
    fn single_site_is_maximally_mixed() {
        let s = build_dense_vbs(rank(2), 2).unwrap();
        for site in 1..=2 {
            let rho = reduced_density(&s, site..=site, false).unwrap();
            assert!(max_abs(&(rho - CMatrix::identity(3, 3) * C64::new(1.0 / 3.0, 0.0))) < 1e-12);
        }
        let s = build_dense_vbs(rank(2), 4).unwrap();
        let e = hermitian_eigs(
            &reduced_density(&s, 2..=2, false).unwrap(),
            DEFAULT_GROUPING_TOL,
        )
        .unwrap();
        assert_eq!(e.spectrum.multiplicities(), vec![3]);
        assert!((e.spectrum.classes[0].value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_system_is_pure() {
        let s = build_dense_vbs(rank(2), 3).unwrap().normalized();
        let rho = reduced_density(&s, 1..=3, true).unwrap();
        let e = hermitian_eigs(&rho, DEFAULT_GROUPING_TOL).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!(e.values[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn reduced_density_range_errors() {
        let s = build_dense_vbs(rank(2), 3).unwrap();
        assert!(reduced_density(&s, 0..=1, false).is_err());
        assert!(reduced_density(&s, 2..=4, false).is_err());
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 3..=2;
        assert!(reduced_density(&s, empty, false).is_err());
        let p = build_dense_vbs_periodic(rank(2), 3, SlotOrder::ConjFund).unwrap();
        assert!(reduced_density(&p, 1..=1, true).is_err());
    }

    #[test]
    fn periodic_orientations_and_norms() {
        let a = build_dense_vbs_periodic(rank(2), 3, SlotOrder::ConjFund)
            .unwrap()
            .norm_sqr();
        let b = build_dense_vbs_periodic(rank(2), 3, SlotOrder::FundConj)
            .unwrap()
            .norm_sqr();
        assert!((a - b).abs() < 1e-12);
        // norm over closed-form trace is the same constant at every N
        for n in [2usize, 3] {
            let mut consts = Vec::new();
            for sites in 2..=(if n == 2 { 5 } else { 3 }) {
                let dense = build_dense_vbs_periodic(rank(n), sites, SlotOrder::ConjFund)
                    .unwrap()
                    .norm_sqr();
                let exact = crate::transfer::chain_norm(
                    rank(n),
                    sites as u32,
                    crate::transfer::Boundary::Periodic,
                )
                .unwrap();
                consts.push(dense / exact);
            }
            for c in &consts {
                assert!((c - consts[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_singlet_component_on_any_site() {
        let n = rank(3);
        let s = build_dense_vbs(n, 2).unwrap();
        let singlet = repn::singlet_vector(n, SlotOrder::FundConj);
        let embed = repn::adjoint_embedding(n);
        let to_singlet = singlet.adjoint() * embed; // 1 × (n²−1)
        for site in 1..=2 {
            let (_, amps) = apply_to_subsystem(&s.dims, &s.amplitudes, site, &to_singlet);
            assert!(amps.iter().all(|z| z.norm() <= 1e-14));
        }
    }

    #[test]
    fn boundary_pair_decouples() {
        // ρ(0̄, N+1) − I/n² shrinks by 1/(n²−1) per added site
        let n = rank(2);
        let mut devs = Vec::new();
        for sites in 1..=8 {
            let s = build_dense_vbs(n, sites).unwrap();
            let rho = s.reduced_density_of(&[0, sites + 1]).unwrap();
            devs.push(max_abs(
                &(rho - CMatrix::identity(4, 4) * C64::new(0.25, 0.0)),
            ));
        }
        for w in devs.windows(2) {
            assert!((w[1] / w[0] - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_preserves_norm_and_spectra() {
        let n = rank(2);
        let s = build_dense_vbs(n, 4).unwrap();
        let base = hermitian_eigs(
            &reduced_density(&s, 2..=3, false).unwrap(),
            DEFAULT_GROUPING_TOL,
        )
        .unwrap();
        for seed in 0..20 {
            let u = repn::random_special_unitary(n, seed);
            let r = s.rotate(&u).unwrap();
            assert!((r.norm_sqr() - s.norm_sqr()).abs() < 1e-11);
            let e = hermitian_eigs(
                &reduced_density(&r, 2..=3, false).unwrap(),
                DEFAULT_GROUPING_TOL,
            )
            .unwrap();
            for (a, b) in e.values.iter().zip(&base.values) {
                assert!((a - b).abs() < 1e-11);
            }
        }
        // the VBS state itself is invariant (up to rounding)
        let u = repn::random_special_unitary(n, 99);
        let r = s.rotate(&u).unwrap();
        let diff: f64 = r
            .amplitudes
            .iter()
            .zip(&s.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn periodic_rotation_invariance() {
        let n = rank(3);
        let s = build_dense_vbs_periodic(n, 3, SlotOrder::FundConj).unwrap();
        let u = repn::random_special_unitary(n, 5);
        let r = s.rotate(&u).unwrap();
        assert!((r.norm_sqr() - s.norm_sqr()).abs() < 1e-11);
    }

    #[test]
    fn pinning_drops_boundary_legs() {
        let n = rank(2);
        let s = build_dense_vbs(n, 3).unwrap();
        let e0 = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let p = s.pin_boundaries(&e0, &e0).unwrap();
        assert_eq!(p.dims, vec![3, 3, 3]);
        assert!(!p.has_boundary_legs());
        assert!(p.pin_boundaries(&e0, &e0).is_err());
        // summing over both pinned basis choices recovers the full norm
        let e1 = CVector::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let total: f64 = [&e0, &e1]
            .iter()
            .flat_map(|l| [&e0, &e1].map(|r| s.pin_boundaries(l, r).unwrap().norm_sqr()))
            .sum();
        assert!((total - s.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn dump_roundtrip() {
        let s = build_dense_vbs_periodic(rank(2), 3, SlotOrder::FundConj).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (4 + 3) + 16 * 27);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        let back = DenseState::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, s);
        buf.push(0);
        assert!(DenseState::read_from(buf.as_slice()).is_err());
    }
}
