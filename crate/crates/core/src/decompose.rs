//! Separable ensembles from the canonical form.
//!
//! The generators of a canonical form commute and are normal, so they share an
//! orthonormal eigenbasis `{|f_n⟩}`. Column `n` of that basis yields one product
//! term: the A vector carries the conjugated eigenvalues of the A-indexed
//! generators (with `1` at `K−1`), the B vector those of the B-indexed ones
//! (with `1` at `M−1`), and the C vector is `√F |f_n⟩`.

use rand::Rng;

use crate::canonical::{
    commutator_max, extract_unchecked, find_witness, rotate_to_corner, CanonicalForm,
    ExtractionDiagnostics, Tolerances, WitnessMode,
};
use crate::error::{Error, Result};
use crate::ppt::ppt_report;
use crate::random::stream_rng;
use crate::tensor::{
    c64, eigh, kron, numeric_rank, psd_sqrt, CMatrix, CVector, TripartiteDims, TripartiteState,
    C64, NORM_TOL, VEC_TOL,
};

/// Random mixings tried before falling back to block refinement.
const MAX_RETRIES: usize = 8;
/// Eigenvalue tuples closer than this (relative to generator scale) are one joint eigenvalue.
const DEGENERACY_TOL: f64 = 1e-6;
const MAX_REFINE_DEPTH: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTerm {
    pub p: f64,
    pub vec_a: CVector,
    pub vec_b: CVector,
    pub vec_c: CVector,
}

impl EnsembleTerm {
    pub fn product_vector(&self) -> CVector {
        let ab = kron(&col(&self.vec_a), &col(&self.vec_b));
        let abc = kron(&ab, &col(&self.vec_c));
        CVector::from_column_slice(abc.as_slice())
    }
}

fn col(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// `ρ = Σ p_n |a_n⟩⟨a_n| ⊗ |b_n⟩⟨b_n| ⊗ |c_n⟩⟨c_n|`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableEnsemble {
    pub dims: TripartiteDims,
    pub terms: Vec<EnsembleTerm>,
}

impl SeparableEnsemble {
    /// Weighted sum of the product projectors, accumulated in term order.
    pub fn reconstruct(&self) -> CMatrix {
        let side = self.dims.total();
        let mut rho = CMatrix::zeros(side, side);
        for t in &self.terms {
            let x = t.product_vector();
            rho.ger(c64(t.p, 0.0), &x, &x.conjugate(), c64(1.0, 0.0));
        }
        rho
    }

    pub fn weight_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.p).sum()
    }

    /// Invariant violations: weights, normalization and vector lengths.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let sum = self.weight_sum();
        if !((sum - 1.0).abs() <= NORM_TOL) {
            out.push(format!("weights sum to {sum}, expected 1"));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.p > 0.0 && t.p.is_finite()) {
                out.push(format!("term {i}: weight {} is not positive", t.p));
            }
            for (name, v, dim) in [
                ("vecA", &t.vec_a, self.dims.k),
                ("vecB", &t.vec_b, self.dims.m),
                ("vecC", &t.vec_c, self.dims.n),
            ] {
                if v.len() != dim {
                    out.push(format!(
                        "term {i}: {name} has length {}, expected {dim}",
                        v.len()
                    ));
                } else if !((v.norm() - 1.0).abs() <= VEC_TOL) {
                    out.push(format!("term {i}: {name} has norm {}", v.norm()));
                }
            }
        }
        out
    }
}

/// Common eigenbasis of a commuting normal family.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenTable {
    pub u: CMatrix,
    /// `values[g][n]` is the eigenvalue of generator `g` on column `n` of `u`.
    pub values: Vec<Vec<C64>>,
}

impl EigenTable {
    /// Max over generators of `‖U†GU − diag(values)‖_F`.
    pub fn residual(&self, generators: &[CMatrix]) -> f64 {
        generators
            .iter()
            .zip(&self.values)
            .map(|(g, vals)| {
                let mut d = self.u.adjoint() * g * &self.u;
                for (i, v) in vals.iter().enumerate() {
                    d[(i, i)] -= v;
                }
                d.norm()
            })
            .fold(0.0, f64::max)
    }
}

fn off_diagonal_residual(u: &CMatrix, generators: &[CMatrix]) -> f64 {
    generators
        .iter()
        .map(|g| {
            let mut d = u.adjoint() * g * u;
            for i in 0..d.nrows() {
                d[(i, i)] = c64(0.0, 0.0);
            }
            d.norm()
        })
        .fold(0.0, f64::max)
}

/// `Σ_k α_k·(G_k + G_k†)/2 + β_k·(G_k − G_k†)/(2i)` with `α, β` uniform in `[−1, 1]`.
fn random_mixture<R: Rng>(rng: &mut R, generators: &[CMatrix], dim: usize) -> CMatrix {
    let mut h = CMatrix::zeros(dim, dim);
    for g in generators {
        let alpha: f64 = rng.random_range(-1.0..=1.0);
        let beta: f64 = rng.random_range(-1.0..=1.0);
        let ga = g.adjoint();
        let herm = (g + &ga).scale(0.5);
        let anti = (g - &ga) * c64(0.0, -0.5);
        h += herm.scale(alpha) + anti.scale(beta);
    }
    h
}

/// Makes the largest-magnitude entry of each column real and positive.
fn fix_phases(u: &mut CMatrix) {
    for j in 0..u.ncols() {
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for i in 0..u.nrows() {
            let mag = u[(i, j)].norm();
            if mag > best_mag {
                best = i;
                best_mag = mag;
            }
        }
        if best_mag > 0.0 {
            let phase = u[(best, j)].conj() / best_mag;
            for i in 0..u.nrows() {
                u[(i, j)] *= phase;
            }
            u[(best, j)].im = 0.0;
        }
    }
}

/// Splits a basis until every projected generator is a multiple of the identity.
fn refine<R: Rng>(
    rng: &mut R,
    generators: &[CMatrix],
    basis: CMatrix,
    tol: f64,
    scale: f64,
    depth: usize,
) -> Result<CMatrix> {
    let d = basis.ncols();
    let projected: Vec<CMatrix> = generators
        .iter()
        .map(|g| basis.adjoint() * g * &basis)
        .collect();
    let scalar_residual = projected
        .iter()
        .map(|p| {
            let mean = p.trace() / c64(d as f64, 0.0);
            (p - CMatrix::identity(d, d) * mean).norm()
        })
        .fold(0.0, f64::max);
    if d == 1 || scalar_residual <= tol * scale {
        return Ok(basis);
    }
    if depth >= MAX_REFINE_DEPTH {
        return Err(Error::DegeneracyUnresolved {
            residual: scalar_residual,
        });
    }
    let h = random_mixture(rng, &projected, d);
    let (vals, vecs) = eigh(&h);
    let gap_tol = tol.sqrt() * scale;
    let mut out = CMatrix::zeros(basis.nrows(), d);
    let mut start = 0;
    let mut filled = 0;
    for end in 1..=d {
        if end == d || vals[end] - vals[end - 1] > gap_tol {
            // an unsplit block is retried with fresh coefficients at the next depth
            let sub = &basis * vecs.columns(start, end - start);
            let sub = refine(rng, generators, sub, tol, scale, depth + 1)?;
            out.columns_mut(filled, sub.ncols()).copy_from(&sub);
            filled += sub.ncols();
            start = end;
        }
    }
    Ok(out)
}

/// Common eigenbasis of commuting normal `dim × dim` matrices.
///
/// A random Hermitian mixture of the family is diagonalized; if that leaves
/// off-diagonal mass (accidental near-degeneracy), fresh coefficients are drawn
/// up to [`MAX_RETRIES`] times before recursively refining clustered eigenspaces.
pub fn simultaneous_diagonalize(
    generators: &[CMatrix],
    dim: usize,
    tol: f64,
    seed: u64,
) -> Result<EigenTable> {
    if let Some(g) = generators
        .iter()
        .find(|g| g.nrows() != dim || g.ncols() != dim)
    {
        return Err(Error::DimensionMismatch(format!(
            "generator is {}x{}, expected {dim}x{dim}",
            g.nrows(),
            g.ncols()
        )));
    }
    let scale = generators.iter().fold(1.0f64, |s, g| s.max(g.norm()));
    let refs: Vec<&CMatrix> = generators.iter().collect();
    let comm = commutator_max(&refs);
    if !(comm <= tol * scale * scale) {
        return Err(Error::CommutatorViolation { residual: comm });
    }

    let mut rng = stream_rng(seed, 0);
    let mut basis = None;
    for _ in 0..=MAX_RETRIES {
        let h = random_mixture(&mut rng, generators, dim);
        let (_, u) = eigh(&h);
        if off_diagonal_residual(&u, generators) <= tol * scale {
            basis = Some(u);
            break;
        }
    }
    let mut u = match basis {
        Some(u) => u,
        None => refine(
            &mut rng,
            generators,
            CMatrix::identity(dim, dim),
            tol,
            scale,
            0,
        )?,
    };
    fix_phases(&mut u);
    let values = diagonal_values(&u, generators);
    let table = EigenTable { u, values };
    let residual = table.residual(generators);
    if !(residual <= tol * scale) {
        return Err(Error::DegeneracyUnresolved { residual });
    }
    Ok(table)
}

fn diagonal_values(u: &CMatrix, generators: &[CMatrix]) -> Vec<Vec<C64>> {
    generators
        .iter()
        .map(|g| {
            let d = u.adjoint() * g * u;
            (0..u.ncols()).map(|i| d[(i, i)]).collect()
        })
        .collect()
}

/// Groups columns whose eigenvalue tuples agree within `tol`, preserving column order.
fn degenerate_groups(values: &[Vec<C64>], dim: usize, tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    'cols: for n in 0..dim {
        for group in groups.iter_mut() {
            let rep = group[0];
            let dist = values
                .iter()
                .map(|vals| (vals[n] - vals[rep]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if dist <= tol {
                group.push(n);
                continue 'cols;
            }
        }
        groups.push(vec![n]);
    }
    groups
}

/// Within each joint eigenspace, rotates the basis to diagonalize the
/// compression of `filter`, so that the vectors `√F|f_n⟩` of one eigenspace
/// are mutually orthogonal.
fn align_with_filter(table: &mut EigenTable, filter: &CMatrix, scale: f64) {
    let dim = table.u.ncols();
    for group in degenerate_groups(&table.values, dim, DEGENERACY_TOL * scale) {
        if group.len() < 2 {
            continue;
        }
        let mut q = CMatrix::zeros(dim, group.len());
        for (j, &n) in group.iter().enumerate() {
            q.set_column(j, &table.u.column(n));
        }
        let compressed = q.adjoint() * filter * &q;
        let (_, w) = eigh(&compressed);
        let rotated = q * w;
        for (j, &n) in group.iter().enumerate() {
            table.u.set_column(n, &rotated.column(j));
        }
    }
}

/// Builds the ensemble encoded by a canonical form and a joint eigenbasis of its
/// generators (B-indexed generators first, as in [`CanonicalForm::generators`]).
pub fn ensemble_from_table(
    form: &CanonicalForm,
    table: &EigenTable,
    sqrt_tol: f64,
) -> Result<SeparableEnsemble> {
    let TripartiteDims { k, m, n } = form.dims;
    let sqrt_f = psd_sqrt(&form.filter, sqrt_tol)?;
    let ua_inv = form.local_u_a.adjoint();
    let ub_inv = form.local_u_b.adjoint();
    let mut terms = Vec::with_capacity(n);
    for col_idx in 0..n {
        let mut vec_a = CVector::zeros(k);
        vec_a[k - 1] = c64(1.0, 0.0);
        for u in 0..k - 1 {
            vec_a[u] = table.values[m - 1 + u][col_idx].conj();
        }
        let mut vec_b = CVector::zeros(m);
        vec_b[m - 1] = c64(1.0, 0.0);
        for v in 0..m - 1 {
            vec_b[v] = table.values[v][col_idx].conj();
        }
        let vec_c = &sqrt_f * table.u.column(col_idx);
        let (na, nb, nc) = (vec_a.norm(), vec_b.norm(), vec_c.norm());
        let p = (na * nb * nc).powi(2);
        terms.push(EnsembleTerm {
            p,
            vec_a: &ua_inv * vec_a.unscale(na),
            vec_b: &ub_inv * vec_b.unscale(nb),
            vec_c: vec_c.unscale(nc),
        });
    }
    Ok(SeparableEnsemble {
        dims: form.dims,
        terms,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleCheck {
    /// `‖ρ − Σ p_n P_A⊗P_B⊗P_C‖_F / ‖ρ‖_F`.
    pub residual: f64,
    pub pass: bool,
    pub violations: Vec<String>,
}

pub fn verify_ensemble(
    state: &TripartiteState,
    ens: &SeparableEnsemble,
    tol: f64,
) -> Result<EnsembleCheck> {
    if state.dims() != ens.dims {
        return Err(Error::DimensionMismatch(format!(
            "state is {}, ensemble is {}",
            state.dims(),
            ens.dims
        )));
    }
    let violations = ens.violations();
    if violations.iter().any(|v| v.contains("length")) {
        return Err(Error::DimensionMismatch(violations.join("; ")));
    }
    let residual = (state.rho() - ens.reconstruct()).norm() / state.rho().norm();
    let pass = residual <= tol && violations.is_empty();
    Ok(EnsembleCheck {
        residual,
        pass,
        violations,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecomposeOptions {
    pub tol: Tolerances,
    pub witness: WitnessMode,
    /// Seeds the random mixings of the joint diagonalization.
    pub seed: u64,
}

/// Full decomposition result: the certified ensemble plus the intermediate form.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub ensemble: SeparableEnsemble,
    pub form: CanonicalForm,
    pub diagnostics: ExtractionDiagnostics,
    pub table: EigenTable,
    pub residual: f64,
}

/// Certified separable decomposition of a rank-`N` PPT state.
pub fn decompose(state: &TripartiteState, opts: &DecomposeOptions) -> Result<SeparableEnsemble> {
    decompose_detailed(state, opts).map(|d| d.ensemble)
}

pub fn decompose_detailed(
    state: &TripartiteState,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    let tol = &opts.tol;
    let dims = state.dims();
    let report = ppt_report(state, tol.ppt)?;
    if !report.overall_ppt {
        let failing: Vec<String> = report
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| format!("{}: {:e}", e.mask.label(), e.min_eigenvalue))
            .collect();
        return Err(Error::NotPpt(failing.join(", ")));
    }
    let state_rank = numeric_rank(state.rho(), tol.rank);
    if state_rank != dims.n {
        return Err(Error::RankMismatch(format!(
            "r(rho) = {state_rank}, N = {}",
            dims.n
        )));
    }
    let witness = find_witness(state, &opts.witness, tol)?.ok_or(Error::NoWitness)?;
    let (rotated, ua, ub) = rotate_to_corner(state, &witness)?;
    let (mut form, diagnostics) = extract_unchecked(&rotated, state_rank, tol)?;
    form.local_u_a = ua;
    form.local_u_b = ub;

    let generators: Vec<CMatrix> = form.generators().cloned().collect();
    let mut table = simultaneous_diagonalize(&generators, dims.n, tol.structure, opts.seed)?;
    let scale = generators.iter().fold(1.0f64, |s, g| s.max(g.norm()));
    align_with_filter(&mut table, &form.filter, scale);
    fix_phases(&mut table.u);
    table.values = diagonal_values(&table.u, &generators);

    let ensemble = ensemble_from_table(&form, &table, tol.sqrt)?;
    // filtering amplifies noise by sqrt(cond F); demand more of the certificate then
    let certify_tol = if diagnostics.ill_conditioned {
        tol.certify * 0.1
    } else {
        tol.certify
    };
    let check = verify_ensemble(state, &ensemble, certify_tol)?;
    if !check.pass {
        return Err(Error::CertificationFailure {
            residual: check.residual,
            tol: certify_tol,
        });
    }
    Ok(Decomposition {
        ensemble,
        form,
        diagnostics,
        table,
        residual: check.residual,
    })
}
