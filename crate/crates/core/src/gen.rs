//! Ground-truth instances: commuting normal families, canonical-form states,
//! the three worked examples, and NPT controls.
//!
//! Stream ids used with [`stream_rng`]: 0 for the shared eigenbasis `U₀`,
//! 1 for generator eigenvalues, 2 for the eigenbasis of `F`, 3 for the spectrum
//! of `F`, 4 for the pure state of an NPT control.

use rand::Rng;

use crate::canonical::CanonicalForm;
use crate::decompose::EigenTable;
use crate::error::{Error, Result};
use crate::random::{complex_normal, haar_unitary, random_unit_vector, stream_rng};
use crate::tensor::{
    c64, conjugate_c, hermitian_part, psd_sqrt, CMatrix, CVector, TripartiteDims, TripartiteState,
    C64,
};

const STREAM_BASIS: u64 = 0;
const STREAM_EIGENVALUES: u64 = 1;
const STREAM_FILTER_BASIS: u64 = 2;
const STREAM_FILTER_SPECTRUM: u64 = 3;
const STREAM_PURE_STATE: u64 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub dims: TripartiteDims,
    pub seed: u64,
    /// Typical modulus of the sampled generator eigenvalues.
    pub generator_scale: f64,
    /// Upper bound on the condition number of the sampled `F`.
    pub f_condition_cap: f64,
}

impl GenSpec {
    pub fn new(dims: TripartiteDims, seed: u64) -> Self {
        Self {
            dims,
            seed,
            generator_scale: 1.0,
            f_condition_cap: 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Spectrum {
    Complex,
    /// Real eigenvalues, giving Hermitian generators.
    Real,
}

fn sample_family(
    n: usize,
    count: usize,
    spec: &GenSpec,
    spectrum: Spectrum,
) -> (CMatrix, Vec<Vec<C64>>) {
    let u0 = haar_unitary(&mut stream_rng(spec.seed, STREAM_BASIS), n);
    let mut rng = stream_rng(spec.seed, STREAM_EIGENVALUES);
    let lambdas = (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let z = match spectrum {
                        Spectrum::Complex => complex_normal(&mut rng),
                        Spectrum::Real => {
                            c64(complex_normal(&mut rng).re * std::f64::consts::SQRT_2, 0.0)
                        }
                    };
                    z * spec.generator_scale
                })
                .collect()
        })
        .collect();
    (u0, lambdas)
}

fn from_spectrum(u0: &CMatrix, lambda: &[C64]) -> CMatrix {
    let d = CMatrix::from_diagonal(&CVector::from_column_slice(lambda));
    u0 * d * u0.adjoint()
}

/// `count` matrices `U₀ diag(λ_k) U₀†` sharing one Haar-random `U₀`.
pub fn gen_commuting_family(
    n: usize,
    count: usize,
    spec: &GenSpec,
    spectrum: Spectrum,
) -> Vec<CMatrix> {
    let (u0, lambdas) = sample_family(n, count, spec, spectrum);
    lambdas.iter().map(|l| from_spectrum(&u0, l)).collect()
}

/// Output of [`gen_canonical_state`]: the state and everything used to build it.
#[derive(Clone, Debug)]
pub struct CanonicalInstance {
    pub state: TripartiteState,
    /// Ground truth, with `F` already rescaled by the trace normalization.
    pub form: CanonicalForm,
    /// The construction's joint eigenbasis `U₀` and eigenvalues, generators
    /// ordered as in [`CanonicalForm::generators`].
    pub table: EigenTable,
}

/// `F = Q diag(μ) Q†` with `μ` log-uniform in `[1/√cap, √cap]`.
fn sample_filter(n: usize, spec: &GenSpec) -> CMatrix {
    let q = haar_unitary(&mut stream_rng(spec.seed, STREAM_FILTER_BASIS), n);
    let mut rng = stream_rng(spec.seed, STREAM_FILTER_SPECTRUM);
    let half_log = 0.5 * spec.f_condition_cap.max(1.0).ln();
    let mu: Vec<C64> = (0..n)
        .map(|_| {
            let t: f64 = if half_log > 0.0 {
                rng.random_range(-half_log..=half_log)
            } else {
                0.0
            };
            c64(t.exp(), 0.0)
        })
        .collect();
    hermitian_part(&(&q * CMatrix::from_diagonal(&CVector::from_vec(mu)) * q.adjoint()))
}

/// Random state of the form `(I⊗I⊗√F) T†T (I⊗I⊗√F)`, trace-normalized.
pub fn gen_canonical_state(spec: &GenSpec) -> Result<CanonicalInstance> {
    let dims = spec.dims;
    let TripartiteDims { k, m, n } = dims;
    let (u0, lambdas) = sample_family(n, (m - 1) + (k - 1), spec, Spectrum::Complex);
    let gens: Vec<CMatrix> = lambdas.iter().map(|l| from_spectrum(&u0, l)).collect();
    let filter = sample_filter(n, spec);
    let mut form = CanonicalForm {
        dims,
        gens_b: gens[..m - 1].to_vec(),
        gens_a: gens[m - 1..].to_vec(),
        filter,
        local_u_a: CMatrix::identity(k, k),
        local_u_b: CMatrix::identity(m, m),
    };
    let sqrt_f = psd_sqrt(&form.filter, 1e-12)?;
    let rho = hermitian_part(&conjugate_c(&form.filtered_state(), dims, &sqrt_f));
    let trace = rho.trace().re;
    form.filter = form.filter.unscale(trace);
    let state = TripartiteState::new(dims, rho.unscale(trace))?;
    Ok(CanonicalInstance {
        state,
        form,
        table: EigenTable {
            u: u0,
            values: lambdas,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleIiiVariant {
    /// Mutually orthogonal set `|0,1,+⟩, |1,+,0⟩, |+,0,1⟩, |−,−,−⟩`.
    Corrected,
    /// The set `|0,1,+⟩, |1,+,0⟩, |+,1,0⟩, |−,−,−⟩`, whose first and third vectors overlap.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Example {
    /// `(1/N)·I_N` in block `(0, 0)`, zero elsewhere.
    I(TripartiteDims),
    /// Three qubits with `[[1/2, a], [a, 1/2]]` in the top-left corner.
    II(f64),
    /// Tripartite bound entangled state built from four product vectors.
    III(ExampleIiiVariant),
}

fn qubit(label: char) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (x, y) = match label {
        '0' => (1.0, 0.0),
        '1' => (0.0, 1.0),
        '+' => (s, s),
        '-' => (s, -s),
        _ => unreachable!("qubit labels are 0, 1, +, -"),
    };
    CVector::from_vec(vec![c64(x, 0.0), c64(y, 0.0)])
}

fn three_qubit(labels: &str) -> CVector {
    let parts: Vec<CVector> = labels.chars().map(qubit).collect();
    let mut out = CVector::zeros(8);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                out[(a * 2 + b) * 2 + c] = parts[0][a] * parts[1][b] * parts[2][c];
            }
        }
    }
    out
}

/// The four three-qubit product vectors subtracted from the identity.
pub fn example_iii_vectors(variant: ExampleIiiVariant) -> [CVector; 4] {
    let third = match variant {
        ExampleIiiVariant::Corrected => "+01",
        ExampleIiiVariant::Literal => "+10",
    };
    [
        three_qubit("01+"),
        three_qubit("1+0"),
        three_qubit(third),
        three_qubit("---"),
    ]
}

pub fn gen_paper_example(example: &Example) -> Result<TripartiteState> {
    match *example {
        Example::I(dims) => {
            let n = dims.n;
            let mut rho = CMatrix::zeros(dims.total(), dims.total());
            for i in 0..n {
                rho[(i, i)] = c64(1.0 / n as f64, 0.0);
            }
            TripartiteState::new(dims, rho)
        }
        Example::II(a) => {
            if !(a.abs() <= 0.5) {
                return Err(Error::Precondition(format!(
                    "example ii needs |a| <= 1/2 (got {a})"
                )));
            }
            let dims = TripartiteDims::new(2, 2, 2)?;
            let mut rho = CMatrix::zeros(8, 8);
            rho[(0, 0)] = c64(0.5, 0.0);
            rho[(1, 1)] = c64(0.5, 0.0);
            rho[(0, 1)] = c64(a, 0.0);
            rho[(1, 0)] = c64(a, 0.0);
            TripartiteState::new(dims, rho)
        }
        Example::III(variant) => {
            let dims = TripartiteDims::new(2, 2, 2)?;
            let mut rho = CMatrix::identity(8, 8);
            for v in example_iii_vectors(variant) {
                rho.ger(c64(-1.0, 0.0), &v, &v.conjugate(), c64(1.0, 0.0));
            }
            TripartiteState::from_unnormalized(dims, hermitian_part(&rho))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PureKind {
    /// Haar-random pure state on the full space.
    Random,
    /// `(|0,0,0⟩ + |1,1,1⟩)/√2`.
    Ghz,
}

/// `(1−p)|φ⟩⟨φ| + p·I/(KMN)`.
pub fn gen_npt_control(
    dims: TripartiteDims,
    p: f64,
    pure: PureKind,
    seed: u64,
) -> Result<TripartiteState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!(
            "noise must lie in [0, 1] (got {p})"
        )));
    }
    let side = dims.total();
    let phi = match pure {
        PureKind::Random => random_unit_vector(&mut stream_rng(seed, STREAM_PURE_STATE), side),
        PureKind::Ghz => {
            if dims.n < 2 {
                return Err(Error::Precondition("GHZ state needs N >= 2".into()));
            }
            let mut v = CVector::zeros(side);
            let s = std::f64::consts::FRAC_1_SQRT_2;
            v[0] = c64(s, 0.0);
            v[(dims.m + 1) * dims.n + 1] = c64(s, 0.0);
            v
        }
    };
    let mut rho = CMatrix::identity(side, side).scale(p / side as f64);
    rho.ger(c64(1.0 - p, 0.0), &phi, &phi.conjugate(), c64(1.0, 0.0));
    TripartiteState::from_unnormalized(dims, hermitian_part(&rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::commutator_max;
    use crate::ppt::ppt_report;
    use crate::tensor::{numeric_rank, RankTol};

    fn dims(k: usize, m: usize, n: usize) -> TripartiteDims {
        TripartiteDims::new(k, m, n).unwrap()
    }

    #[test]
    fn empty_family() {
        assert!(
            gen_commuting_family(3, 0, &GenSpec::new(dims(2, 2, 3), 1), Spectrum::Complex)
                .is_empty()
        );
    }

    #[test]
    fn real_spectrum_gives_hermitian() {
        let g = gen_commuting_family(4, 1, &GenSpec::new(dims(2, 2, 4), 2), Spectrum::Real);
        assert!((&g[0] - g[0].adjoint()).norm() <= 1e-12);
    }

    #[test]
    fn family_commutes() {
        let g = gen_commuting_family(3, 4, &GenSpec::new(dims(2, 2, 3), 3), Spectrum::Complex);
        let refs: Vec<&CMatrix> = g.iter().collect();
        assert!(commutator_max(&refs) <= 1e-12);
    }

    #[test]
    fn zero_generators_identity_filter() {
        let spec = GenSpec {
            generator_scale: 0.0,
            f_condition_cap: 1.0,
            ..GenSpec::new(dims(3, 3, 2), 0)
        };
        let inst = gen_canonical_state(&spec).unwrap();
        let mut expected = CMatrix::zeros(18, 18);
        expected[(16, 16)] = c64(0.5, 0.0);
        expected[(17, 17)] = c64(0.5, 0.0);
        assert!((inst.state.rho() - expected).norm() < 1e-15);
    }

    #[test]
    fn canonical_state_is_ppt_rank_n() {
        let inst = gen_canonical_state(&GenSpec::new(dims(3, 3, 4), 7)).unwrap();
        let rep = ppt_report(&inst.state, Some(1e-10)).unwrap();
        assert!(rep.entries.iter().all(|e| e.pass));
        assert_eq!(numeric_rank(inst.state.rho(), RankTol::Relative(1e-10)), 4);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec::new(dims(3, 2, 3), 5);
        let a = gen_canonical_state(&spec).unwrap();
        let b = gen_canonical_state(&spec).unwrap();
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn example_ii_rejects_large_a() {
        assert!(matches!(
            gen_paper_example(&Example::II(0.7)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn example_ii_zero_is_diagonal() {
        let st = gen_paper_example(&Example::II(0.0)).unwrap();
        let mut expected = CMatrix::zeros(8, 8);
        expected[(0, 0)] = c64(0.5, 0.0);
        expected[(1, 1)] = c64(0.5, 0.0);
        assert_eq!(st.rho(), &expected);
    }

    #[test]
    fn example_iii_gram_matrices() {
        let corrected = example_iii_vectors(ExampleIiiVariant::Corrected);
        for i in 0..4 {
            for j in 0..4 {
                let ip = corrected[i].dotc(&corrected[j]).norm();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-15, "({i},{j}) = {ip}");
            }
        }
        let literal = example_iii_vectors(ExampleIiiVariant::Literal);
        assert!((literal[0].dotc(&literal[2]).norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn npt_noise_bounds() {
        assert!(gen_npt_control(dims(2, 2, 2), 1.5, PureKind::Random, 0).is_err());
        let mixed = gen_npt_control(dims(2, 2, 2), 1.0, PureKind::Random, 0).unwrap();
        let rep = ppt_report(&mixed, None).unwrap();
        assert!(rep.overall_ppt);
        assert!(
            (rep.min_eigenvalue(crate::tensor::SubsystemMask::IDENTITY)
                .unwrap()
                - 0.125)
                .abs()
                < 1e-14
        );
    }

    #[test]
    fn random_npt_control_fails_ppt() {
        let st = gen_npt_control(dims(2, 2, 2), 0.0, PureKind::Random, 3).unwrap();
        let rep = ppt_report(&st, None).unwrap();
        assert!(!rep.entry(crate::tensor::SubsystemMask::A).unwrap().pass);
    }
}
