//! Canonical form `ρ = (I⊗I⊗√F) T†T (I⊗I⊗√F)` of a rank-`N` PPT state.
//!
//! `T` is the `N × KMN` block row whose block at column `u·M + v` is the
//! monomial `G^A_u · G^B_v`, where `G^A_u` are the generators indexed by the
//! subsystem-A basis (identity at `u = K−1`) and `G^B_v` those indexed by the
//! subsystem-B basis (identity at `v = M−1`). After filtering, the last block
//! row of the state is `T` itself, which is how the generators are read off.

use crate::error::{Error, Result};
use crate::ppt::ppt_report;
use crate::random::{random_unit_vector, stream_rng};
use crate::tensor::{
    basis_vector, block_of, c64, check_unit, commutator, conjugate_c, eigvalsh, hermitian_part,
    kron, numeric_rank, psd_inv_sqrt, sandwich_ab, CMatrix, CVector, RankTol, TripartiteDims,
    TripartiteState,
};

/// Numerical thresholds shared by extraction and decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Rank decisions on ρ, on the corner block and on witness sandwiches.
    pub rank: RankTol,
    /// Positivity slack; `None` means `1e−9 · tr ρ`.
    pub ppt: Option<f64>,
    /// Bound on reconstruction, commutator, kernel-vector and Δ residuals.
    pub structure: f64,
    /// Relative slack for clipping negative eigenvalues in square roots.
    pub sqrt: f64,
    /// Bound on the final ensemble reconstruction residual.
    pub certify: f64,
    /// Condition number of `F` above which the filter is flagged.
    pub ill_conditioned: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: RankTol::Relative(1e-10),
            ppt: None,
            structure: 1e-8,
            sqrt: 1e-8,
            certify: 1e-8,
            ill_conditioned: 1e6,
        }
    }
}

impl Tolerances {
    /// Defaults with both the structure and the certification bound set to `tol`.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            structure: tol,
            certify: tol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalForm {
    pub dims: TripartiteDims,
    /// `M−1` generators indexed by the subsystem-B basis: entry `v` sits at B column `v`.
    pub gens_b: Vec<CMatrix>,
    /// `K−1` generators indexed by the subsystem-A basis: entry `u` sits at A row `u`.
    pub gens_a: Vec<CMatrix>,
    /// Hermitian positive definite filter `F` on subsystem C.
    pub filter: CMatrix,
    /// Rotation applied on A before extraction.
    pub local_u_a: CMatrix,
    /// Rotation applied on B before extraction.
    pub local_u_b: CMatrix,
}

impl CanonicalForm {
    fn gen_a(&self, u: usize) -> Option<&CMatrix> {
        (u + 1 < self.dims.k).then(|| &self.gens_a[u])
    }

    fn gen_b(&self, v: usize) -> Option<&CMatrix> {
        (v + 1 < self.dims.m).then(|| &self.gens_b[v])
    }

    /// Block `u·M + v` of `T`.
    pub fn monomial(&self, u: usize, v: usize) -> CMatrix {
        let n = self.dims.n;
        match (self.gen_a(u), self.gen_b(v)) {
            (Some(a), Some(b)) => a * b,
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => CMatrix::identity(n, n),
        }
    }

    /// The `N × KMN` block row `T`.
    pub fn t_row(&self) -> CMatrix {
        let TripartiteDims { k, m, n } = self.dims;
        let mut t = CMatrix::zeros(n, k * m * n);
        for u in 0..k {
            for v in 0..m {
                let col = (u * m + v) * n;
                t.view_mut((0, col), (n, n)).copy_from(&self.monomial(u, v));
            }
        }
        t
    }

    /// `T†T`, the filtered state.
    pub fn filtered_state(&self) -> CMatrix {
        let t = self.t_row();
        t.adjoint() * t
    }

    /// The state this form describes, with filtering and local rotations undone.
    pub fn reconstruct(&self, sqrt_tol: f64) -> Result<CMatrix> {
        let sqrt_f = crate::tensor::psd_sqrt(&self.filter, sqrt_tol)?;
        let rotated = conjugate_c(&self.filtered_state(), self.dims, &sqrt_f);
        let ua = self.local_u_a.adjoint();
        let ub = self.local_u_b.adjoint();
        let u = kron(
            &kron(&ua, &ub),
            &CMatrix::identity(self.dims.n, self.dims.n),
        );
        Ok(&u * rotated * u.adjoint())
    }

    /// All generators, B-indexed first.
    pub fn generators(&self) -> impl Iterator<Item = &CMatrix> {
        self.gens_b.iter().chain(self.gens_a.iter())
    }

    /// Largest Frobenius norm among `[G, G†]`, `[G, H]` and `[G, H†]`.
    pub fn commutator_max(&self) -> f64 {
        let gens: Vec<&CMatrix> = self.generators().collect();
        commutator_max(&gens)
    }
}

pub(crate) fn commutator_max(gens: &[&CMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for (i, g) in gens.iter().enumerate() {
        let ga = g.adjoint();
        worst = worst.max(commutator(g, &ga).norm());
        for h in &gens[i + 1..] {
            worst = worst.max(commutator(g, h).norm());
            worst = worst.max(commutator(g, &h.adjoint()).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionDiagnostics {
    /// `‖E_d − T_d†T_d‖_F` on the first diagonal block `d` not pinned by kernel vectors.
    pub delta_norm: f64,
    pub commutator_max: f64,
    /// `‖ρ_f − T†T‖_F / ‖ρ_f‖_F`.
    pub reconstruction_residual: f64,
    pub kernel_residual_max: f64,
    pub corner_rank: usize,
    pub state_rank: usize,
    /// `λ_max(F) / λ_min(F)`.
    pub filter_condition: f64,
    pub ill_conditioned: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductWitness {
    pub ea: CVector,
    pub fb: CVector,
    pub sandwich_rank: usize,
    /// `λ_min / λ_max` of the sandwich; larger means a better-conditioned filter.
    pub conditioning: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum WitnessMode {
    /// The `K·M` computational product pairs.
    Corner,
    /// Computational pairs plus `samples` Haar-random product pairs.
    Search {
        samples: usize,
        seed: u64,
    },
    Explicit {
        ea: CVector,
        fb: CVector,
    },
}

impl Default for WitnessMode {
    fn default() -> Self {
        WitnessMode::Search {
            samples: 256,
            seed: 0,
        }
    }
}

/// Rank and conditioning of `⟨e_A, f_B|ρ|e_A, f_B⟩`.
pub fn evaluate_witness(
    state: &TripartiteState,
    ea: &CVector,
    fb: &CVector,
    rank_tol: RankTol,
) -> Result<ProductWitness> {
    let s = hermitian_part(&sandwich_ab(state, ea, fb)?);
    let sandwich_rank = numeric_rank(&s, rank_tol);
    let vals = eigvalsh(&s);
    let max = vals.last().copied().unwrap_or(0.0);
    let min = vals.first().copied().unwrap_or(0.0);
    let conditioning = if max > 0.0 { (min / max).max(0.0) } else { 0.0 };
    Ok(ProductWitness {
        ea: ea.clone(),
        fb: fb.clone(),
        sandwich_rank,
        conditioning,
    })
}

/// Computational product pairs, `(K−1, M−1)` first and the rest in lexicographic order.
fn computational_pairs(dims: TripartiteDims) -> Vec<(usize, usize)> {
    let corner = (dims.k - 1, dims.m - 1);
    std::iter::once(corner)
        .chain(
            (0..dims.k)
                .flat_map(|i| (0..dims.m).map(move |j| (i, j)))
                .filter(move |&p| p != corner),
        )
        .collect()
}

/// Finds a product pair whose sandwich has rank `N`.
///
/// Computational pairs are tried first; random pairs (search mode) are only
/// drawn when none of them qualifies. Within a round, the full-rank candidate
/// with the best-conditioned sandwich wins and ties go to the earliest one.
pub fn find_witness(
    state: &TripartiteState,
    mode: &WitnessMode,
    tol: &Tolerances,
) -> Result<Option<ProductWitness>> {
    let dims = state.dims();
    let pick = |candidates: Vec<(CVector, CVector)>| -> Result<Option<ProductWitness>> {
        let mut best: Option<ProductWitness> = None;
        for (ea, fb) in &candidates {
            let w = evaluate_witness(state, ea, fb, tol.rank)?;
            if w.sandwich_rank != dims.n {
                continue;
            }
            if best
                .as_ref()
                .is_none_or(|b| w.conditioning > b.conditioning)
            {
                best = Some(w);
            }
        }
        Ok(best)
    };
    match mode {
        WitnessMode::Explicit { ea, fb } => {
            check_unit(ea)?;
            check_unit(fb)?;
            pick(vec![(ea.clone(), fb.clone())])
        }
        WitnessMode::Corner | WitnessMode::Search { .. } => {
            let computational = computational_pairs(dims)
                .into_iter()
                .map(|(i, j)| (basis_vector(dims.k, i), basis_vector(dims.m, j)))
                .collect();
            if let Some(w) = pick(computational)? {
                return Ok(Some(w));
            }
            let WitnessMode::Search { samples, seed } = mode else {
                return Ok(None);
            };
            let mut rng = stream_rng(*seed, 0);
            let random = (0..*samples)
                .map(|_| {
                    let ea = random_unit_vector(&mut rng, dims.k);
                    let fb = random_unit_vector(&mut rng, dims.m);
                    (ea, fb)
                })
                .collect();
            pick(random)
        }
    }
}

/// Unitary whose last column is `v`, completed from the standard basis by
/// pivoted Gram–Schmidt (largest residual first, lowest index on ties).
pub(crate) fn complete_to_unitary(v: &CVector) -> CMatrix {
    let d = v.len();
    let mut basis: Vec<CVector> = vec![v.clone()];
    let mut used = vec![false; d];
    while basis.len() < d {
        let mut pick: Option<(usize, CVector, f64)> = None;
        for (i, &taken) in used.iter().enumerate() {
            if taken {
                continue;
            }
            let mut r = basis_vector(d, i);
            // two passes for numerical orthogonality
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dotc(&r);
                    r -= q * proj;
                }
            }
            let norm = r.norm();
            if pick.as_ref().is_none_or(|p| norm > p.2) {
                pick = Some((i, r, norm));
            }
        }
        let (i, r, norm) = pick.expect("standard basis spans the space");
        used[i] = true;
        basis.push(r.unscale(norm));
    }
    let mut u = CMatrix::zeros(d, d);
    for (j, q) in basis.iter().skip(1).enumerate() {
        u.set_column(j, q);
    }
    u.set_column(d - 1, v);
    u
}

/// Rotates the witness onto the `(K−1, M−1)` corner.
///
/// Returns `ρ' = (U_A⊗U_B⊗I) ρ (U_A⊗U_B⊗I)†` with `U_A e_A = |K−1⟩` and
/// `U_B f_B = |M−1⟩`, together with `U_A` and `U_B`.
pub fn rotate_to_corner(
    state: &TripartiteState,
    w: &ProductWitness,
) -> Result<(TripartiteState, CMatrix, CMatrix)> {
    let dims = state.dims();
    check_unit(&w.ea)?;
    check_unit(&w.fb)?;
    if w.ea.len() != dims.k || w.fb.len() != dims.m {
        return Err(Error::DimensionMismatch(
            "witness vectors do not match dims".into(),
        ));
    }
    let ua = complete_to_unitary(&w.ea).adjoint();
    let ub = complete_to_unitary(&w.fb).adjoint();
    if ua == CMatrix::identity(dims.k, dims.k) && ub == CMatrix::identity(dims.m, dims.m) {
        return Ok((state.clone(), ua, ub));
    }
    let uc = CMatrix::identity(dims.n, dims.n);
    let rotated = hermitian_part(&crate::tensor::conjugate_local(state.rho(), &ua, &ub, &uc));
    let tr = rotated.trace().re;
    let rotated = if tr != 1.0 {
        rotated.unscale(tr)
    } else {
        rotated
    };
    Ok((TripartiteState::new(dims, rotated)?, ua, ub))
}

/// Extracts the canonical form of a state whose `(K−1, M−1)` corner block has rank `N`.
pub fn extract_canonical(
    state: &TripartiteState,
    tol: &Tolerances,
) -> Result<(CanonicalForm, ExtractionDiagnostics)> {
    let report = ppt_report(state, tol.ppt)?;
    if !report.overall_ppt {
        let worst = report
            .entries
            .iter()
            .filter(|e| !e.pass)
            .map(|e| format!("{}: {:e}", e.mask.label(), e.min_eigenvalue))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(Error::NotPpt(worst));
    }
    let dims = state.dims();
    let state_rank = numeric_rank(state.rho(), tol.rank);
    if state_rank != dims.n {
        return Err(Error::RankMismatch(format!(
            "r(rho) = {state_rank}, N = {}",
            dims.n
        )));
    }
    extract_unchecked(state, state_rank, tol)
}

/// Extraction without the PPT and state-rank preconditions.
pub(crate) fn extract_unchecked(
    state: &TripartiteState,
    state_rank: usize,
    tol: &Tolerances,
) -> Result<(CanonicalForm, ExtractionDiagnostics)> {
    let dims = state.dims();
    let TripartiteDims { k, m, n } = dims;
    let corner = dims.corner_block();

    let filter = hermitian_part(&block_of(state.rho(), dims, corner, corner)?);
    let corner_rank = numeric_rank(&filter, tol.rank);
    if corner_rank != n {
        return Err(Error::RankMismatch(format!(
            "r(corner block) = {corner_rank}, N = {n}"
        )));
    }
    let inv_sqrt = psd_inv_sqrt(&filter, tol.sqrt).map_err(|e| match e {
        Error::Singular { .. } => Error::RankMismatch(format!("corner block is singular: {e}")),
        Error::NotPsd { .. } => Error::NotPpt(format!("corner block: {e}")),
        other => other,
    })?;
    let fvals = eigvalsh(&filter);
    let filter_condition = fvals[n - 1] / fvals[0];

    let rho_f = conjugate_c(state.rho(), dims, &inv_sqrt);
    let last = corner;
    let gens_b = (0..m - 1)
        .map(|v| block_of(&rho_f, dims, last, (k - 1) * m + v))
        .collect::<Result<Vec<_>>>()?;
    let gens_a = (0..k - 1)
        .map(|u| block_of(&rho_f, dims, last, u * m + (m - 1)))
        .collect::<Result<Vec<_>>>()?;
    let form = CanonicalForm {
        dims,
        gens_b,
        gens_a,
        filter,
        local_u_a: CMatrix::identity(k, k),
        local_u_b: CMatrix::identity(m, m),
    };

    let t = form.t_row();
    let rho_f_norm = rho_f.norm();
    let reconstruction_residual = (&rho_f - t.adjoint() * &t).norm() / rho_f_norm;
    let commutator_max = form.commutator_max();
    let kernel_residual_max = kernel_residual_filtered(&rho_f, &form);
    let d = (k - 2) * m + (m - 2);
    let t_d = t.view((0, d * n), (n, n));
    let delta_norm = (block_of(&rho_f, dims, d, d)? - t_d.adjoint() * t_d).norm();

    let diagnostics = ExtractionDiagnostics {
        delta_norm,
        commutator_max,
        reconstruction_residual,
        kernel_residual_max,
        corner_rank,
        state_rank,
        filter_condition,
        ill_conditioned: !(filter_condition <= tol.ill_conditioned),
    };

    let gen_scale = form.generators().fold(1.0f64, |s, g| s.max(g.norm()));
    let f_scale = rho_f_norm.max(1.0);
    let mut violations = Vec::new();
    if !(reconstruction_residual <= tol.structure) {
        violations.push(format!(
            "reconstruction residual {reconstruction_residual:e}"
        ));
    }
    if !(commutator_max <= tol.structure * gen_scale * gen_scale) {
        violations.push(format!("commutator residual {commutator_max:e}"));
    }
    if !(kernel_residual_max <= tol.structure * f_scale) {
        violations.push(format!("kernel-vector residual {kernel_residual_max:e}"));
    }
    if !(delta_norm <= tol.structure * f_scale) {
        violations.push(format!("delta block residual {delta_norm:e}"));
    }
    if !violations.is_empty() {
        return Err(Error::StructureViolation(violations.join("; ")));
    }
    Ok((form, diagnostics))
}

/// Max of `‖ρ_f Ψ‖ / ‖Ψ‖` over the kernel vectors
/// `|K−1, v⟩|f⟩ − |K−1, M−1⟩ G^B_v|f⟩` and `|u, M−1⟩|f⟩ − |K−1, M−1⟩ G^A_u|f⟩`,
/// with `|f⟩` running over the computational basis of C^N.
fn kernel_residual_filtered(rho_f: &CMatrix, form: &CanonicalForm) -> f64 {
    let TripartiteDims { k, m, n } = form.dims;
    let side = k * m * n;
    let corner_cols = rho_f.view((0, (k * m - 1) * n), (side, n));
    let mut worst = 0.0f64;
    let mut probe = |block: usize, g: &CMatrix| {
        let image = rho_f.view((0, block * n), (side, n)) - corner_cols * g;
        for j in 0..n {
            let psi_norm = (1.0 + g.column(j).norm_squared()).sqrt();
            worst = worst.max(image.column(j).norm() / psi_norm);
        }
    };
    for (v, g) in form.gens_b.iter().enumerate() {
        probe((k - 1) * m + v, g);
    }
    for (u, g) in form.gens_a.iter().enumerate() {
        probe(u * m + (m - 1), g);
    }
    worst
}

/// Kernel-vector residual of `state` against a previously extracted form.
///
/// The state is rotated by the form's local unitaries and filtered by its `F`
/// before the kernel vectors are applied.
pub fn verify_kernel_vectors(state: &TripartiteState, form: &CanonicalForm) -> Result<f64> {
    let dims = state.dims();
    if dims != form.dims {
        return Err(Error::DimensionMismatch(format!(
            "state {dims}, form {}",
            form.dims
        )));
    }
    let uc = CMatrix::identity(dims.n, dims.n);
    let rotated =
        crate::tensor::conjugate_local(state.rho(), &form.local_u_a, &form.local_u_b, &uc);
    let inv_sqrt = psd_inv_sqrt(&form.filter, 1e-8)?;
    let rho_f = conjugate_c(&rotated, dims, &inv_sqrt);
    Ok(kernel_residual_filtered(&rho_f, form))
}

/// All-zero generator lists for `dims`.
pub fn zero_generators(dims: TripartiteDims) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let z = CMatrix::from_element(dims.n, dims.n, c64(0.0, 0.0));
    (vec![z.clone(); dims.m - 1], vec![z; dims.k - 1])
}
