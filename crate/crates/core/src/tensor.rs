//! Dense complex matrices over a tripartite index space `C^K ⊗ C^M ⊗ C^N`.
//!
//! Basis ordering is fixed throughout the crate: the composite index of
//! `|i_A, i_B, i_C⟩` is `(i_A·M + i_B)·N + i_C`, so subsystem A varies slowest.
//! A state is therefore a `KM × KM` grid of `N × N` blocks, block index
//! `i_A·M + i_B`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative Hermiticity slack accepted for states.
pub const HERM_TOL: f64 = 1e-10;
/// Slack on unit trace and on weight sums.
pub const NORM_TOL: f64 = 1e-10;
/// Slack on unit-norm vectors.
pub const VEC_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TripartiteDims {
    pub k: usize,
    pub m: usize,
    pub n: usize,
}

impl TripartiteDims {
    pub fn new(k: usize, m: usize, n: usize) -> Result<Self> {
        if k < 2 || m < 2 || n < 1 {
            return Err(Error::Precondition(format!(
                "dims must satisfy K >= 2, M >= 2, N >= 1 (got {k}x{m}x{n})"
            )));
        }
        Ok(Self { k, m, n })
    }

    /// Side length `K·M·N` of any operator on the space.
    pub fn total(&self) -> usize {
        self.k * self.m * self.n
    }

    /// Number of `N × N` blocks along one side of the grid.
    pub fn blocks(&self) -> usize {
        self.k * self.m
    }

    /// Block index of the `(K−1, M−1)` corner.
    pub fn corner_block(&self) -> usize {
        self.blocks() - 1
    }

    #[inline]
    fn compose_unchecked(&self, ia: usize, ib: usize, ic: usize) -> usize {
        (ia * self.m + ib) * self.n + ic
    }

    #[inline]
    fn split_unchecked(&self, idx: usize) -> (usize, usize, usize) {
        let ic = idx % self.n;
        let ab = idx / self.n;
        (ab / self.m, ab % self.m, ic)
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.k, self.m, self.n]
    }
}

impl std::fmt::Display for TripartiteDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.k, self.m, self.n)
    }
}

pub fn compose_index(ia: usize, ib: usize, ic: usize, dims: TripartiteDims) -> Result<usize> {
    if ia >= dims.k || ib >= dims.m || ic >= dims.n {
        return Err(Error::Index(format!("({ia}, {ib}, {ic}) outside {dims}")));
    }
    Ok(dims.compose_unchecked(ia, ib, ic))
}

/// Inverse of [`compose_index`].
pub fn split_index(idx: usize, dims: TripartiteDims) -> Result<(usize, usize, usize)> {
    if idx >= dims.total() {
        return Err(Error::Index(format!("{idx} outside {dims}")));
    }
    Ok(dims.split_unchecked(idx))
}

/// A trace-one Hermitian operator on `C^K ⊗ C^M ⊗ C^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TripartiteState {
    dims: TripartiteDims,
    rho: CMatrix,
}

impl TripartiteState {
    /// Validates shape, finiteness, Hermiticity and unit trace.
    pub fn new(dims: TripartiteDims, rho: CMatrix) -> Result<Self> {
        check_shape(dims, &rho)?;
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "trace must be 1 (got {} + {}i)",
                tr.re, tr.im
            )));
        }
        Ok(Self { dims, rho })
    }

    /// Like [`TripartiteState::new`] but rescales a positive trace to one.
    pub fn from_unnormalized(dims: TripartiteDims, rho: CMatrix) -> Result<Self> {
        check_shape(dims, &rho)?;
        let tr = rho.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!(
                "trace must be positive (got {tr})"
            )));
        }
        let rho = rho.unscale(tr);
        Self::new(dims, rho)
    }

    pub fn dims(&self) -> TripartiteDims {
        self.dims
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> CMatrix {
        self.rho
    }
}

fn check_shape(dims: TripartiteDims, rho: &CMatrix) -> Result<()> {
    let side = dims.total();
    if rho.nrows() != side || rho.ncols() != side {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, dims {dims} need {side}x{side}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("matrix has non-finite entries".into()));
    }
    let residual = hermiticity_residual(rho);
    if residual > HERM_TOL {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

/// `‖X − X†‖_F / ‖X‖_F`, zero for the zero matrix.
pub fn hermiticity_residual(x: &CMatrix) -> f64 {
    let norm = x.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (x - x.adjoint()).norm() / norm
}

pub fn hermitian_part(x: &CMatrix) -> CMatrix {
    (x + x.adjoint()).scale(0.5)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SubsystemMask {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl SubsystemMask {
    pub const IDENTITY: Self = Self::new(false, false, false);
    pub const A: Self = Self::new(true, false, false);
    pub const B: Self = Self::new(false, true, false);
    pub const C: Self = Self::new(false, false, true);
    pub const FULL: Self = Self::new(true, true, true);

    pub const fn new(a: bool, b: bool, c: bool) -> Self {
        Self { a, b, c }
    }

    /// All eight subsets, identity first, in bit order `a | b<<1 | c<<2`.
    pub fn all() -> [Self; 8] {
        let mut out = [Self::IDENTITY; 8];
        for (bits, slot) in out.iter_mut().enumerate() {
            *slot = Self::new(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
        }
        out
    }

    pub fn complement(self) -> Self {
        Self::new(!self.a, !self.b, !self.c)
    }

    pub fn is_identity(self) -> bool {
        !(self.a || self.b || self.c)
    }

    pub fn label(self) -> String {
        if self.is_identity() {
            return "none".to_string();
        }
        let mut s = String::new();
        if self.a {
            s.push('A');
        }
        if self.b {
            s.push('B');
        }
        if self.c {
            s.push('C');
        }
        s
    }

    pub fn from_label(label: &str) -> Option<Self> {
        if label == "none" {
            return Some(Self::IDENTITY);
        }
        let mut mask = Self::IDENTITY;
        for ch in label.chars() {
            match ch {
                'A' if !mask.a => mask.a = true,
                'B' if !mask.b => mask.b = true,
                'C' if !mask.c => mask.c = true,
                _ => return None,
            }
        }
        (!mask.is_identity()).then_some(mask)
    }
}

pub fn kron(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x.kronecker(y)
}

pub fn kron3(x: &CMatrix, y: &CMatrix, z: &CMatrix) -> CMatrix {
    x.kronecker(y).kronecker(z)
}

pub fn partial_transpose(state: &TripartiteState, mask: SubsystemMask) -> CMatrix {
    partial_transpose_matrix(state.rho(), state.dims(), mask)
}

/// Partial transpose of any `KMN × KMN` matrix. Pure entry permutation.
pub fn partial_transpose_matrix(
    rho: &CMatrix,
    dims: TripartiteDims,
    mask: SubsystemMask,
) -> CMatrix {
    let side = dims.total();
    debug_assert_eq!(rho.nrows(), side);
    if mask.is_identity() {
        return rho.clone();
    }
    let triples: Vec<_> = (0..side).map(|i| dims.split_unchecked(i)).collect();
    CMatrix::from_fn(side, side, |row, col| {
        let (ra, rb, rc) = triples[row];
        let (ca, cb, cc) = triples[col];
        let (ra, ca) = if mask.a { (ca, ra) } else { (ra, ca) };
        let (rb, cb) = if mask.b { (cb, rb) } else { (rb, cb) };
        let (rc, cc) = if mask.c { (cc, rc) } else { (rc, cc) };
        rho[(
            dims.compose_unchecked(ra, rb, rc),
            dims.compose_unchecked(ca, cb, cc),
        )]
    })
}

pub fn block(state: &TripartiteState, row_block: usize, col_block: usize) -> Result<CMatrix> {
    block_of(state.rho(), state.dims(), row_block, col_block)
}

/// The `N × N` block `E_{row_block, col_block}` of a `KMN × KMN` matrix.
pub fn block_of(
    rho: &CMatrix,
    dims: TripartiteDims,
    row_block: usize,
    col_block: usize,
) -> Result<CMatrix> {
    let nb = dims.blocks();
    if row_block >= nb || col_block >= nb {
        return Err(Error::Index(format!(
            "block ({row_block}, {col_block}) outside {nb}x{nb} grid"
        )));
    }
    let n = dims.n;
    Ok(rho
        .view((row_block * n, col_block * n), (n, n))
        .into_owned())
}

/// `⟨e_A, f_B| ρ |e_A, f_B⟩`, an `N × N` operator on subsystem C.
pub fn sandwich_ab(state: &TripartiteState, ea: &CVector, fb: &CVector) -> Result<CMatrix> {
    let dims = state.dims();
    if ea.len() != dims.k || fb.len() != dims.m {
        return Err(Error::DimensionMismatch(format!(
            "sandwich vectors have lengths {}, {}; dims {dims}",
            ea.len(),
            fb.len()
        )));
    }
    check_unit(ea)?;
    check_unit(fb)?;
    let ef = kron(
        &CMatrix::from_column_slice(dims.k, 1, ea.as_slice()),
        &CMatrix::from_column_slice(dims.m, 1, fb.as_slice()),
    );
    let n = dims.n;
    let rho = state.rho();
    let mut out = CMatrix::zeros(n, n);
    for r in 0..dims.blocks() {
        let wr = ef[(r, 0)].conj();
        if wr == C64::new(0.0, 0.0) {
            continue;
        }
        for c in 0..dims.blocks() {
            let w = wr * ef[(c, 0)];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            out += rho.view((r * n, c * n), (n, n)) * w;
        }
    }
    Ok(out)
}

pub(crate) fn check_unit(v: &CVector) -> Result<()> {
    let norm = v.norm();
    if (norm - 1.0).abs() > VEC_TOL {
        return Err(Error::Normalization { norm });
    }
    Ok(())
}

/// Singular-value cutoff policy for [`numeric_rank`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankTol {
    /// `max(rows, cols) · ε · σ_max`.
    Auto,
    /// `factor · σ_max`.
    Relative(f64),
    Absolute(f64),
}

impl RankTol {
    pub fn threshold(self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match self {
            RankTol::Auto => rows.max(cols) as f64 * f64::EPSILON * sigma_max,
            RankTol::Relative(f) => f * sigma_max,
            RankTol::Absolute(t) => t,
        }
    }
}

pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = x.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn numeric_rank(x: &CMatrix, tol: RankTol) -> usize {
    let sv = singular_values(x);
    let Some(&sigma_max) = sv.first() else {
        return 0;
    };
    let threshold = tol.threshold(x.nrows(), x.ncols(), sigma_max);
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Eigen-decomposition of the Hermitian part of `x`, eigenvalues ascending.
pub fn eigh(x: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = x.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(x).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigvalsh(x: &CMatrix) -> Vec<f64> {
    if x.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = hermitian_part(x)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// `V · diag(f(λ)) · V†`.
fn spectral_map(vectors: &CMatrix, values: &[f64], f: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let s = f(lam);
        scaled.column_mut(j).scale_mut(s);
    }
    scaled * vectors.adjoint()
}

fn spectral_scale(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Hermitian PSD square root. Eigenvalues in `[−tol·λ_max, 0)` are clipped to zero.
pub fn psd_sqrt(x: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (values, vectors) = eigh(x);
    let scale = spectral_scale(&values);
    if let Some(&min) = values.first() {
        if min < -tol * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    Ok(spectral_map(&vectors, &values, |l| l.max(0.0).sqrt()))
}

/// Inverse of [`psd_sqrt`] for full-rank input.
pub fn psd_inv_sqrt(x: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (values, vectors) = eigh(x);
    let scale = spectral_scale(&values);
    if let Some(&min) = values.first() {
        if min < -tol * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
        let threshold = RankTol::Auto.threshold(x.nrows(), x.ncols(), scale);
        if min <= threshold {
            return Err(Error::Singular {
                min_eigenvalue: min,
                threshold,
            });
        }
    }
    Ok(spectral_map(&vectors, &values, |l| 1.0 / l.sqrt()))
}

/// Conjugates every `N × N` block by `w`: `(I_K ⊗ I_M ⊗ W) ρ (I_K ⊗ I_M ⊗ W)†`.
pub fn conjugate_c(rho: &CMatrix, dims: TripartiteDims, w: &CMatrix) -> CMatrix {
    let n = dims.n;
    let nb = dims.blocks();
    let wa = w.adjoint();
    let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
    for r in 0..nb {
        for c in 0..nb {
            let blk = w * rho.view((r * n, c * n), (n, n)) * &wa;
            out.view_mut((r * n, c * n), (n, n)).copy_from(&blk);
        }
    }
    out
}

/// `(U_A ⊗ U_B ⊗ U_C) ρ (U_A ⊗ U_B ⊗ U_C)†`.
pub fn conjugate_local(rho: &CMatrix, ua: &CMatrix, ub: &CMatrix, uc: &CMatrix) -> CMatrix {
    let u = kron3(ua, ub, uc);
    &u * rho * u.adjoint()
}

/// `[X, Y] = XY − YX`.
pub fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

pub fn basis_vector(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = c64(1.0, 0.0);
    v
}
