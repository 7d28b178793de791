//! JSON file formats.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major nested arrays
//! using the crate-wide index convention `(i_A·M + i_B)·N + i_C`. Floats are
//! written in shortest round-trip form and parsed exactly, so `load ∘ save` is
//! the identity on every finite `f64`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::canonical::{CanonicalForm, ExtractionDiagnostics};
use crate::decompose::{EnsembleTerm, SeparableEnsemble};
use crate::error::{Error, Result};
use crate::ppt::{MaskEntry, PptReport};
use crate::tensor::{c64, CMatrix, CVector, SubsystemMask, TripartiteDims, TripartiteState};

pub const SCHEMA_VERSION: &str = "1";

type Pair = [f64; 2];

fn matrix_to_rows(x: &CMatrix) -> Vec<Vec<Pair>> {
    (0..x.nrows())
        .map(|i| {
            (0..x.ncols())
                .map(|j| [x[(i, j)].re, x[(i, j)].im])
                .collect()
        })
        .collect()
}

fn rows_to_matrix(rows: &[Vec<Pair>], nrows: usize, ncols: usize, what: &str) -> Result<CMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what} must be {nrows}x{ncols}")));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{what} has non-finite entries")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        c64(rows[i][j][0], rows[i][j][1])
    }))
}

fn vector_to_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn pairs_to_vector(pairs: &[Pair], len: usize, what: &str) -> Result<CVector> {
    if pairs.len() != len {
        return Err(Error::Format(format!("{what} must have length {len}")));
    }
    if pairs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{what} has non-finite entries")));
    }
    Ok(CVector::from_iterator(
        len,
        pairs.iter().map(|p| c64(p[0], p[1])),
    ))
}

fn parse_dims(dims: [usize; 3]) -> Result<TripartiteDims> {
    TripartiteDims::new(dims[0], dims[1], dims[2]).map_err(|e| Error::Format(e.to_string()))
}

fn check_version(v: &str) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Format(format!("unsupported schema_version {v:?}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub schema_version: String,
    pub dims: [usize; 3],
    pub matrix: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BTreeMap<String, String>>,
}

impl StateFile {
    pub fn from_state(state: &TripartiteState, metadata: Option<BTreeMap<String, String>>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            dims: state.dims().as_array(),
            matrix: matrix_to_rows(state.rho()),
            metadata,
        }
    }

    /// Builds the state; `allow_unnormalized` rescales a positive trace to one.
    pub fn to_state(&self, allow_unnormalized: bool) -> Result<TripartiteState> {
        check_version(&self.schema_version)?;
        let dims = parse_dims(self.dims)?;
        let side = dims.total();
        let rho = rows_to_matrix(&self.matrix, side, side, "matrix")?;
        if allow_unnormalized {
            TripartiteState::from_unnormalized(dims, rho)
        } else {
            TripartiteState::new(dims, rho)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermFile {
    pub p: f64,
    #[serde(rename = "vecA")]
    pub vec_a: Vec<Pair>,
    #[serde(rename = "vecB")]
    pub vec_b: Vec<Pair>,
    #[serde(rename = "vecC")]
    pub vec_c: Vec<Pair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleFile {
    pub schema_version: String,
    pub dims: [usize; 3],
    pub terms: Vec<TermFile>,
}

impl EnsembleFile {
    pub fn from_ensemble(ens: &SeparableEnsemble) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            dims: ens.dims.as_array(),
            terms: ens
                .terms
                .iter()
                .map(|t| TermFile {
                    p: t.p,
                    vec_a: vector_to_pairs(&t.vec_a),
                    vec_b: vector_to_pairs(&t.vec_b),
                    vec_c: vector_to_pairs(&t.vec_c),
                })
                .collect(),
        }
    }

    /// Structural conversion only; weights and norms are checked by `verify_ensemble`.
    pub fn to_ensemble(&self) -> Result<SeparableEnsemble> {
        check_version(&self.schema_version)?;
        let dims = parse_dims(self.dims)?;
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if !t.p.is_finite() {
                    return Err(Error::Format(format!("term {i}: weight is not finite")));
                }
                Ok(EnsembleTerm {
                    p: t.p,
                    vec_a: pairs_to_vector(&t.vec_a, dims.k, &format!("term {i} vecA"))?,
                    vec_b: pairs_to_vector(&t.vec_b, dims.m, &format!("term {i} vecB"))?,
                    vec_c: pairs_to_vector(&t.vec_c, dims.n, &format!("term {i} vecC"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SeparableEnsemble { dims, terms })
    }
}

/// Canonical form: `A_list` holds the B-indexed generators, `B_list` the A-indexed ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFile {
    pub schema_version: String,
    pub dims: [usize; 3],
    #[serde(rename = "A_list")]
    pub a_list: Vec<Vec<Vec<Pair>>>,
    #[serde(rename = "B_list")]
    pub b_list: Vec<Vec<Vec<Pair>>>,
    #[serde(rename = "F")]
    pub filter: Vec<Vec<Pair>>,
    #[serde(rename = "localU_A")]
    pub local_u_a: Vec<Vec<Pair>>,
    #[serde(rename = "localU_B")]
    pub local_u_b: Vec<Vec<Pair>>,
}

impl CanonicalFile {
    pub fn from_form(form: &CanonicalForm) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            dims: form.dims.as_array(),
            a_list: form.gens_b.iter().map(matrix_to_rows).collect(),
            b_list: form.gens_a.iter().map(matrix_to_rows).collect(),
            filter: matrix_to_rows(&form.filter),
            local_u_a: matrix_to_rows(&form.local_u_a),
            local_u_b: matrix_to_rows(&form.local_u_b),
        }
    }

    pub fn to_form(&self) -> Result<CanonicalForm> {
        check_version(&self.schema_version)?;
        let dims = parse_dims(self.dims)?;
        let TripartiteDims { k, m, n } = dims;
        if self.a_list.len() != m - 1 || self.b_list.len() != k - 1 {
            return Err(Error::Format(format!(
                "expected {} A_list and {} B_list entries",
                m - 1,
                k - 1
            )));
        }
        let mats = |list: &[Vec<Vec<Pair>>], what: &str| {
            list.iter()
                .enumerate()
                .map(|(i, g)| rows_to_matrix(g, n, n, &format!("{what}[{i}]")))
                .collect::<Result<Vec<_>>>()
        };
        Ok(CanonicalForm {
            dims,
            gens_b: mats(&self.a_list, "A_list")?,
            gens_a: mats(&self.b_list, "B_list")?,
            filter: rows_to_matrix(&self.filter, n, n, "F")?,
            local_u_a: rows_to_matrix(&self.local_u_a, k, k, "localU_A")?,
            local_u_b: rows_to_matrix(&self.local_u_b, m, m, "localU_B")?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskEntryFile {
    pub mask: String,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReportFile {
    pub overall_ppt: bool,
    pub tol_used: f64,
    pub entries: Vec<MaskEntryFile>,
}

impl PptReportFile {
    pub fn from_report(report: &PptReport) -> Self {
        Self {
            overall_ppt: report.overall_ppt,
            tol_used: report.tol_used,
            entries: report
                .entries
                .iter()
                .map(|e| MaskEntryFile {
                    mask: e.mask.label(),
                    min_eigenvalue: e.min_eigenvalue,
                    pass: e.pass,
                })
                .collect(),
        }
    }

    pub fn to_report(&self) -> Result<PptReport> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mask = SubsystemMask::from_label(&e.mask)
                    .ok_or_else(|| Error::Format(format!("unknown mask {:?}", e.mask)))?;
                Ok(MaskEntry {
                    mask,
                    min_eigenvalue: e.min_eigenvalue,
                    pass: e.pass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PptReport {
            entries,
            overall_ppt: self.overall_ppt,
            tol_used: self.tol_used,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsFile {
    pub delta_norm: f64,
    pub commutator_max: f64,
    pub reconstruction_residual: f64,
    pub kernel_residual_max: f64,
    pub corner_rank: usize,
    pub state_rank: usize,
    pub filter_condition: f64,
    pub ill_conditioned: bool,
}

impl From<&ExtractionDiagnostics> for DiagnosticsFile {
    fn from(d: &ExtractionDiagnostics) -> Self {
        Self {
            delta_norm: d.delta_norm,
            commutator_max: d.commutator_max,
            reconstruction_residual: d.reconstruction_residual,
            kernel_residual_max: d.kernel_residual_max,
            corner_rank: d.corner_rank,
            state_rank: d.state_rank,
            filter_condition: d.filter_condition,
            ill_conditioned: d.ill_conditioned,
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("file types always serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value))?;
    Ok(())
}

pub fn load_state(path: &Path, allow_unnormalized: bool) -> Result<TripartiteState> {
    read_json::<StateFile>(path)?.to_state(allow_unnormalized)
}

pub fn save_state(
    path: &Path,
    state: &TripartiteState,
    metadata: Option<BTreeMap<String, String>>,
) -> Result<()> {
    write_json(path, &StateFile::from_state(state, metadata))
}

pub fn load_ensemble(path: &Path) -> Result<SeparableEnsemble> {
    read_json::<EnsembleFile>(path)?.to_ensemble()
}

pub fn save_ensemble(path: &Path, ens: &SeparableEnsemble) -> Result<()> {
    write_json(path, &EnsembleFile::from_ensemble(ens))
}
