//! Minimal dense complex tensors with named axes.
//!
//! Data is row-major over the axis list. Contractions pair axes by name,
//! matricization groups axes into a row multi-index and a column multi-index
//! (both flattened row-major), and the eigensolver clusters nearly equal
//! eigenvalues into degeneracy classes.

use std::collections::HashSet;

use crate::{CMatrix, Result, VbsError, C64};

/// Default absolute tolerance for grouping eigenvalues into classes.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-9;

/// Hermiticity is checked to this absolute tolerance (scaled by the largest
/// entry when that exceeds one).
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Axis {
    pub name: String,
    pub dim: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    axes: Vec<Axis>,
    data: Vec<C64>,
}

fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

fn check_axes(axes: &[Axis]) -> Result<()> {
    let mut seen = HashSet::new();
    for ax in axes {
        if ax.dim == 0 {
            return Err(VbsError::DimensionMismatch(format!(
                "axis `{}` has zero dimension",
                ax.name
            )));
        }
        if !seen.insert(ax.name.as_str()) {
            return Err(VbsError::DuplicateAxis(ax.name.clone()));
        }
    }
    Ok(())
}

impl Tensor {
    pub fn new(axes: Vec<Axis>, data: Vec<C64>) -> Result<Self> {
        check_axes(&axes)?;
        let size: usize = axes.iter().map(|a| a.dim).product();
        if size != data.len() {
            return Err(VbsError::DimensionMismatch(format!(
                "axes describe {size} entries, data has {}",
                data.len()
            )));
        }
        Ok(Self { axes, data })
    }

    pub fn zeros(axes: Vec<Axis>) -> Result<Self> {
        let size = axes.iter().map(|a| a.dim).product();
        Self::new(axes, vec![C64::new(0.0, 0.0); size])
    }

    /// Builds a tensor by evaluating `f` on every multi-index.
    pub fn from_fn(axes: Vec<Axis>, mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        check_axes(&axes)?;
        let dims: Vec<usize> = axes.iter().map(|a| a.dim).collect();
        let size: usize = dims.iter().product();
        let mut data = Vec::with_capacity(size);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..size {
            data.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Self::new(axes, data)
    }

    /// 1-axis tensor holding `v`.
    pub fn vector(name: &str, v: &[C64]) -> Self {
        Self {
            axes: vec![Axis::new(name, v.len())],
            data: v.to_vec(),
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn dims(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.dim).collect()
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| VbsError::UnknownAxis(name.to_string()))
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        let strides = row_major_strides(&self.dims());
        self.data[idx.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()]
    }

    pub fn conj(&self) -> Self {
        Self {
            axes: self.axes.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            axes: self.axes.clone(),
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn rename(mut self, from: &str, to: &str) -> Result<Self> {
        let k = self.axis_index(from)?;
        self.axes[k].name = to.to_string();
        check_axes(&self.axes)?;
        Ok(self)
    }

    /// Reorders axes to `order`, which must list every axis once.
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        let perm = self.resolve_exact(order)?;
        let dims = self.dims();
        let strides = row_major_strides(&dims);
        let new_dims: Vec<usize> = perm.iter().map(|&k| dims[k]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&k| strides[k]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; new_dims.len()];
        for _ in 0..self.data.len() {
            let off: usize = idx.iter().zip(&src_strides).map(|(i, s)| i * s).sum();
            data.push(self.data[off]);
            increment(&mut idx, &new_dims);
        }
        let axes = perm.iter().map(|&k| self.axes[k].clone()).collect();
        Ok(Self { axes, data })
    }

    /// Maximum absolute entrywise difference; axes must match by name and
    /// dimension (order may differ).
    pub fn max_abs_diff(&self, other: &Tensor) -> Result<f64> {
        let names: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        let aligned = other.permute(&names)?;
        if aligned.dims() != self.dims() {
            return Err(VbsError::DimensionMismatch(
                "tensors differ in axis dimensions".into(),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&aligned.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn resolve_exact(&self, order: &[&str]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        let mut perm = Vec::with_capacity(order.len());
        for name in order {
            if !seen.insert(*name) {
                return Err(VbsError::DuplicateAxis(name.to_string()));
            }
            perm.push(self.axis_index(name)?);
        }
        if perm.len() != self.axes.len() {
            let missing = self
                .axes
                .iter()
                .find(|a| !seen.contains(a.name.as_str()))
                .map(|a| a.name.clone())
                .unwrap_or_default();
            return Err(VbsError::InvalidArgument(format!(
                "axis `{missing}` not listed"
            )));
        }
        Ok(perm)
    }
}

fn increment(idx: &mut [usize], dims: &[usize]) {
    for k in (0..dims.len()).rev() {
        idx[k] += 1;
        if idx[k] < dims[k] {
            return;
        }
        idx[k] = 0;
    }
}

/// Sums over the paired axes. Surviving axes of `a` come first, then those
/// of `b`, each in their original order.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(&str, &str)]) -> Result<Tensor> {
    let mut seen_a = HashSet::new();
    let mut seen_b = HashSet::new();
    for &(x, y) in pairs {
        if !seen_a.insert(x) {
            return Err(VbsError::DuplicateAxis(x.to_string()));
        }
        if !seen_b.insert(y) {
            return Err(VbsError::DuplicateAxis(y.to_string()));
        }
        let (da, db) = (a.axes[a.axis_index(x)?].dim, b.axes[b.axis_index(y)?].dim);
        if da != db {
            return Err(VbsError::DimensionMismatch(format!(
                "cannot pair `{x}` (dim {da}) with `{y}` (dim {db})"
            )));
        }
    }
    let free_a: Vec<&Axis> = a
        .axes
        .iter()
        .filter(|ax| !seen_a.contains(ax.name.as_str()))
        .collect();
    let free_b: Vec<&Axis> = b
        .axes
        .iter()
        .filter(|ax| !seen_b.contains(ax.name.as_str()))
        .collect();

    let order_a: Vec<&str> = free_a
        .iter()
        .map(|ax| ax.name.as_str())
        .chain(pairs.iter().map(|p| p.0))
        .collect();
    let order_b: Vec<&str> = pairs
        .iter()
        .map(|p| p.1)
        .chain(free_b.iter().map(|ax| ax.name.as_str()))
        .collect();
    let pa = a.permute(&order_a)?;
    let pb = b.permute(&order_b)?;

    let rows: usize = free_a.iter().map(|ax| ax.dim).product();
    let cols: usize = free_b.iter().map(|ax| ax.dim).product();
    let inner: usize = pairs
        .iter()
        .map(|p| a.axes[a.axis_index(p.0).unwrap()].dim)
        .product();

    let mut out = vec![C64::new(0.0, 0.0); rows * cols];
    for r in 0..rows {
        let arow = &pa.data[r * inner..(r + 1) * inner];
        let orow = &mut out[r * cols..(r + 1) * cols];
        for (k, &x) in arow.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            let brow = &pb.data[k * cols..(k + 1) * cols];
            for (o, &y) in orow.iter_mut().zip(brow) {
                *o += x * y;
            }
        }
    }
    let axes: Vec<Axis> = free_a.into_iter().chain(free_b).cloned().collect();
    Tensor::new(axes, out)
}

/// Reshapes into a matrix whose row index flattens `rows` and column index
/// flattens `cols` (both row-major).
pub fn matricize(t: &Tensor, rows: &[&str], cols: &[&str]) -> Result<CMatrix> {
    let order: Vec<&str> = rows.iter().chain(cols).copied().collect();
    let p = t.permute(&order)?;
    let nrows: usize = rows
        .iter()
        .map(|r| t.axes[t.axis_index(r).unwrap()].dim)
        .product();
    let ncols = p.data.len() / nrows;
    Ok(CMatrix::from_row_slice(nrows, ncols, &p.data))
}

/// Inverse of [`matricize`]: the result carries `rows` then `cols` axes.
pub fn unmatricize(m: &CMatrix, rows: &[Axis], cols: &[Axis]) -> Result<Tensor> {
    let nrows: usize = rows.iter().map(|a| a.dim).product();
    let ncols: usize = cols.iter().map(|a| a.dim).product();
    if m.nrows() != nrows || m.ncols() != ncols {
        return Err(VbsError::DimensionMismatch(format!(
            "matrix is {}x{}, axes describe {nrows}x{ncols}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut data = Vec::with_capacity(nrows * ncols);
    for r in 0..nrows {
        for c in 0..ncols {
            data.push(m[(r, c)]);
        }
    }
    Tensor::new(rows.iter().chain(cols).cloned().collect(), data)
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SpectralClass {
    pub value: f64,
    pub multiplicity: usize,
}

/// Eigenvalues grouped into degeneracy classes, in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralForm {
    pub classes: Vec<SpectralClass>,
    pub grouping_tol: f64,
}

impl SpectralForm {
    /// Groups values (any order) into classes whose internal spread is at
    /// most `tol`; the class value is the mean of its members.
    pub fn from_values(values: &[f64], tol: f64) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut classes = Vec::new();
        let mut start = 0;
        while start < sorted.len() {
            let top = sorted[start];
            let mut end = start + 1;
            while end < sorted.len() && top - sorted[end] <= tol {
                end += 1;
            }
            let members = &sorted[start..end];
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            classes.push(SpectralClass {
                value: mean,
                multiplicity: members.len(),
            });
            start = end;
        }
        Self {
            classes,
            grouping_tol: tol,
        }
    }

    pub fn dimension(&self) -> usize {
        self.classes.iter().map(|c| c.multiplicity).sum()
    }

    /// Every eigenvalue expanded with its multiplicity, descending.
    pub fn expanded(&self) -> Vec<f64> {
        self.classes
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.value, c.multiplicity))
            .collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.multiplicity).collect()
    }
}

/// Output of [`hermitian_eigs`].
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub spectrum: SpectralForm,
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: CMatrix,
}

impl Eigensystem {
    /// Orthogonal projector onto the eigenspace of class `k`.
    pub fn class_projector(&self, k: usize) -> CMatrix {
        let start: usize = self.spectrum.classes[..k]
            .iter()
            .map(|c| c.multiplicity)
            .sum();
        let m = self.spectrum.classes[k].multiplicity;
        let cols = self.vectors.columns(start, m);
        cols * cols.adjoint()
    }
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Diagonalizes a Hermitian matrix and clusters its spectrum.
pub fn hermitian_eigs(m: &CMatrix, grouping_tol: f64) -> Result<Eigensystem> {
    if !m.is_square() {
        return Err(VbsError::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            m.nrows(),
            m.ncols()
        )));
    }
    if grouping_tol.is_nan() || grouping_tol <= 0.0 {
        return Err(VbsError::InvalidArgument(format!(
            "grouping tolerance must be positive, got {grouping_tol}"
        )));
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(VbsError::NotHermitian(defect));
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let columns: Vec<_> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let vectors = CMatrix::from_columns(&columns);
    Ok(Eigensystem {
        spectrum: SpectralForm::from_values(&values, grouping_tol),
        values,
        vectors,
    })
}

/// Maps every full index to `(kept index, environment index)`.
struct SplitIndex {
    keep_dim: usize,
    env_dim: usize,
    keep_of: Vec<usize>,
    env_of: Vec<usize>,
}

fn split_index(dims: &[usize], keep: &[usize]) -> Result<SplitIndex> {
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(VbsError::InvalidArgument(format!(
                "subsystem {k} out of range ({} subsystems)",
                dims.len()
            )));
        }
        if kept[k] {
            return Err(VbsError::InvalidArgument(format!(
                "subsystem {k} kept twice"
            )));
        }
        kept[k] = true;
    }
    let keep_dims: Vec<usize> = (0..dims.len())
        .filter(|&k| kept[k])
        .map(|k| dims[k])
        .collect();
    let env_dims: Vec<usize> = (0..dims.len())
        .filter(|&k| !kept[k])
        .map(|k| dims[k])
        .collect();
    let keep_strides = row_major_strides(&keep_dims);
    let env_strides = row_major_strides(&env_dims);
    let total: usize = dims.iter().product();
    let mut keep_of = Vec::with_capacity(total);
    let mut env_of = Vec::with_capacity(total);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        let (mut ki, mut ei, mut kk, mut ek) = (0, 0, 0, 0);
        for (s, &i) in idx.iter().enumerate() {
            if kept[s] {
                ki += i * keep_strides[kk];
                kk += 1;
            } else {
                ei += i * env_strides[ek];
                ek += 1;
            }
        }
        keep_of.push(ki);
        env_of.push(ei);
        increment(&mut idx, dims);
    }
    Ok(SplitIndex {
        keep_dim: keep_dims.iter().product(),
        env_dim: env_dims.iter().product(),
        keep_of,
        env_of,
    })
}

/// Traces out every subsystem not listed in `keep`. Kept subsystems stay in
/// their original relative order.
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(VbsError::DimensionMismatch(format!(
            "density matrix is {}x{}, subsystems multiply to {total}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let split = split_index(dims, keep)?;
    // full[e * keep_dim + k] = full index with env e and kept k
    let mut full = vec![0usize; total];
    for i in 0..total {
        full[split.env_of[i] * split.keep_dim + split.keep_of[i]] = i;
    }
    let kd = split.keep_dim;
    let mut out = CMatrix::zeros(kd, kd);
    for e in 0..split.env_dim {
        let block = &full[e * kd..(e + 1) * kd];
        for (r, &fr) in block.iter().enumerate() {
            for (c, &fc) in block.iter().enumerate() {
                out[(r, c)] += rho[(fr, fc)];
            }
        }
    }
    Ok(out)
}

/// Reshapes a state vector into the `kept × environment` coefficient matrix.
pub fn bipartition(psi: &[C64], dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if psi.len() != total {
        return Err(VbsError::DimensionMismatch(format!(
            "vector has {} entries, subsystems multiply to {total}",
            psi.len()
        )));
    }
    let split = split_index(dims, keep)?;
    let mut m = CMatrix::zeros(split.keep_dim, split.env_dim);
    for (i, &z) in psi.iter().enumerate() {
        m[(split.keep_of[i], split.env_of[i])] = z;
    }
    Ok(m)
}

/// `Tr_env |ψ><ψ|` computed without forming the full density matrix.
pub fn reduced_density_from_vector(psi: &[C64], dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let m = bipartition(psi, dims, keep)?;
    Ok(&m * m.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repn::{adjoint_projector, singlet_vector, GroupRank, SlotOrder};
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn construction_checks_shape_and_names() {
        assert!(Tensor::new(vec![Axis::new("a", 2)], vec![c(1.0)]).is_err());
        assert!(matches!(
            Tensor::zeros(vec![Axis::new("a", 2), Axis::new("a", 2)]),
            Err(VbsError::DuplicateAxis(_))
        ));
    }

    #[test]
    fn identity_contraction_returns_vector() {
        let id = Tensor::from_fn(vec![Axis::new("i", 3), Axis::new("j", 3)], |ix| {
            if ix[0] == ix[1] {
                c(1.0)
            } else {
                c(0.0)
            }
        })
        .unwrap();
        let v = Tensor::vector("k", &[C64::new(1.0, 2.0), c(-3.0), C64::new(0.0, 0.5)]);
        let out = contract(&id, &v, &[("j", "k")]).unwrap();
        assert_eq!(out.axes()[0].name, "i");
        assert_eq!(out.data(), v.data());
    }

    #[test]
    fn projector_annihilates_singlet_by_contraction() {
        let n = GroupRank::new(3).unwrap();
        let w = adjoint_projector(n);
        let wt = unmatricize(&w, &[Axis::new("out", 9)], &[Axis::new("in", 9)]).unwrap();
        let s = singlet_vector(n, SlotOrder::FundConj);
        let st = Tensor::vector("x", s.as_slice());
        let out = contract(&wt, &st, &[("in", "x")]).unwrap();
        assert!(out.data().iter().all(|z| z.norm() < 1e-14));
        let norm = contract(&st.conj(), &st, &[("x", "x")]).unwrap();
        assert_eq!(norm.rank(), 0);
        assert!((norm.data()[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn contract_errors() {
        let a = Tensor::zeros(vec![Axis::new("i", 2), Axis::new("j", 3)]).unwrap();
        let b = Tensor::zeros(vec![Axis::new("k", 2), Axis::new("l", 3)]).unwrap();
        assert!(matches!(
            contract(&a, &b, &[("j", "k")]),
            Err(VbsError::DimensionMismatch(_))
        ));
        assert!(matches!(
            contract(&a, &b, &[("zz", "k")]),
            Err(VbsError::UnknownAxis(_))
        ));
        assert!(matches!(
            contract(&a, &b, &[("i", "k"), ("i", "l")]),
            Err(VbsError::DuplicateAxis(_))
        ));
        // surviving names would collide
        let d = Tensor::zeros(vec![Axis::new("i", 2), Axis::new("m", 3)]).unwrap();
        assert!(contract(&a, &d, &[("j", "m")]).is_err());
    }

    #[test]
    fn matricize_roundtrip_and_errors() {
        let t = Tensor::from_fn(
            vec![Axis::new("a", 2), Axis::new("b", 3), Axis::new("c", 2)],
            |ix| C64::new((ix[0] * 6 + ix[1] * 2 + ix[2]) as f64, ix[1] as f64),
        )
        .unwrap();
        let m = matricize(&t, &["c", "a"], &["b"]).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (4, 3));
        let back = unmatricize(
            &m,
            &[Axis::new("c", 2), Axis::new("a", 2)],
            &[Axis::new("b", 3)],
        )
        .unwrap()
        .permute(&["a", "b", "c"])
        .unwrap();
        assert_eq!(back, t);
        assert!(matricize(&t, &["a"], &["b"]).is_err());
        assert!(matricize(&t, &["a", "a"], &["b", "c"]).is_err());

        let two = Tensor::from_fn(vec![Axis::new("r", 2), Axis::new("s", 2)], |ix| {
            c((ix[0] * 2 + ix[1]) as f64)
        })
        .unwrap();
        let m2 = matricize(&two, &["r"], &["s"]).unwrap();
        assert_eq!(
            m2,
            CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(2.0), c(3.0)])
        );
    }

    #[test]
    fn eigs_identity_and_projector() {
        let id = CMatrix::identity(4, 4);
        let e = hermitian_eigs(&id, DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(
            e.spectrum.classes,
            vec![SpectralClass {
                value: 1.0,
                multiplicity: 4
            }]
        );

        let w = adjoint_projector(GroupRank::new(2).unwrap());
        let e = hermitian_eigs(&w, DEFAULT_GROUPING_TOL).unwrap();
        assert_eq!(e.spectrum.multiplicities(), vec![3, 1]);
        assert!((e.spectrum.classes[0].value - 1.0).abs() < 1e-14);
        assert!(e.spectrum.classes[1].value.abs() < 1e-14);
    }

    #[test]
    fn eigs_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        assert!(matches!(
            hermitian_eigs(&m, 1e-9),
            Err(VbsError::NotHermitian(_))
        ));
        assert!(hermitian_eigs(&CMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn partial_trace_edge_cases() {
        let s = singlet_vector(GroupRank::new(3).unwrap(), SlotOrder::FundConj);
        let rho = &s * s.adjoint();
        let full = partial_trace(&rho, &[3, 3], &[]).unwrap();
        assert_eq!((full.nrows(), full.ncols()), (1, 1));
        assert!((full[(0, 0)] - rho.trace()).norm() < 1e-15);
        let same = partial_trace(&rho, &[3, 3], &[0, 1]).unwrap();
        assert!(max_abs(&(same - &rho)) == 0.0);
        let half = partial_trace(&rho, &[3, 3], &[1]).unwrap();
        assert!(max_abs(&(half - CMatrix::identity(3, 3) * c(1.0 / 3.0))) < 1e-15);
        assert!(partial_trace(&rho, &[2, 3], &[0]).is_err());
    }

    #[test]
    fn vector_route_matches_matrix_route() {
        let psi: Vec<C64> = (0..24)
            .map(|k| C64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let v = crate::CVector::from_vec(psi.clone());
        let rho = &v * v.adjoint();
        for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
            let a = partial_trace(&rho, &[2, 3, 4], &keep).unwrap();
            let b = reduced_density_from_vector(&psi, &[2, 3, 4], &keep).unwrap();
            assert!(max_abs(&(a - b)) < 1e-13);
        }
    }

    fn arb_hermitian(dim: usize) -> impl Strategy<Value = CMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |xs| {
            let m = CMatrix::from_fn(dim, dim, |r, c| {
                C64::new(xs[r * dim + c].0, xs[r * dim + c].1)
            });
            (&m + m.adjoint()) * C64::new(0.5, 0.0)
        })
    }

    proptest! {
        #[test]
        fn eigs_reconstruct(m in (1usize..7).prop_flat_map(arb_hermitian)) {
            let e = hermitian_eigs(&m, DEFAULT_GROUPING_TOL).unwrap();
            prop_assert_eq!(e.spectrum.dimension(), m.nrows());
            let mut rebuilt = CMatrix::zeros(m.nrows(), m.ncols());
            for (k, class) in e.spectrum.classes.iter().enumerate() {
                rebuilt += e.class_projector(k) * C64::new(class.value, 0.0);
            }
            prop_assert!(max_abs(&(rebuilt - &m)) < 1e-11);
            for w in e.spectrum.classes.windows(2) {
                prop_assert!(w[0].value - w[1].value > e.spectrum.grouping_tol);
            }
        }

        #[test]
        fn partial_trace_keeps_trace_and_hermiticity(
            m in arb_hermitian(12),
            keep in prop::sample::subsequence(vec![0usize, 1, 2], 0..=3),
        ) {
            let out = partial_trace(&m, &[2, 3, 2], &keep).unwrap();
            prop_assert!((out.trace() - m.trace()).norm() < 1e-13);
            prop_assert!(hermiticity_defect(&out) < 1e-13);
        }

        #[test]
        fn contract_is_bilinear(
            xs in prop::collection::vec(-1.0f64..1.0, 6),
            ys in prop::collection::vec(-1.0f64..1.0, 6),
            zs in prop::collection::vec(-1.0f64..1.0, 3),
            alpha in -2.0f64..2.0,
        ) {
            let axes = || vec![Axis::new("i", 2), Axis::new("j", 3)];
            let a = Tensor::new(axes(), xs.iter().map(|&x| c(x)).collect()).unwrap();
            let b = Tensor::new(axes(), ys.iter().map(|&x| c(x)).collect()).unwrap();
            let v = Tensor::vector("k", &zs.iter().map(|&x| c(x)).collect::<Vec<_>>());
            let sum = Tensor::new(
                axes(),
                a.data().iter().zip(b.data()).map(|(p, q)| p * c(alpha) + q).collect(),
            ).unwrap();
            let lhs = contract(&sum, &v, &[("j", "k")]).unwrap();
            let ra = contract(&a, &v, &[("j", "k")]).unwrap();
            let rb = contract(&b, &v, &[("j", "k")]).unwrap();
            for ((l, x), y) in lhs.data().iter().zip(ra.data()).zip(rb.data()) {
                prop_assert!((l - (x * c(alpha) + y)).norm() < 1e-14);
            }
        }
    }
}
