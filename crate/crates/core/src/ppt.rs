//! Positivity of a state and of its partial transposes.

use crate::error::{Error, Result};
use crate::tensor::{
    eigvalsh, hermiticity_residual, partial_transpose, CMatrix, SubsystemMask, TripartiteState,
    HERM_TOL,
};

#[derive(Clone, Debug, PartialEq)]
pub struct MaskEntry {
    pub mask: SubsystemMask,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PptReport {
    /// One entry per subset of {A, B, C}; the identity mask (ρ itself) comes first.
    pub entries: Vec<MaskEntry>,
    pub overall_ppt: bool,
    pub tol_used: f64,
}

impl PptReport {
    pub fn entry(&self, mask: SubsystemMask) -> Option<&MaskEntry> {
        self.entries.iter().find(|e| e.mask == mask)
    }

    pub fn min_eigenvalue(&self, mask: SubsystemMask) -> Option<f64> {
        self.entry(mask).map(|e| e.min_eigenvalue)
    }
}

/// Returns whether the smallest eigenvalue of `(X + X†)/2` is at least `−tol`,
/// together with that eigenvalue.
pub fn is_psd(x: &CMatrix, tol: f64) -> Result<(bool, f64)> {
    let residual = hermiticity_residual(x);
    if residual > HERM_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let min = eigvalsh(x).first().copied().unwrap_or(0.0);
    Ok((min >= -tol, min))
}

/// `1e−9 · tr ρ`.
pub fn default_tol(state: &TripartiteState) -> f64 {
    1e-9 * state.rho().trace().re.abs()
}

/// Checks ρ and all seven nontrivial partial transposes.
///
/// The overall verdict only consults ρ, ρ^{t_A}, ρ^{t_B} and ρ^{t_C}: every
/// other mask is the transpose of one of these and shares its spectrum.
pub fn ppt_report(state: &TripartiteState, tol: Option<f64>) -> Result<PptReport> {
    let tol = tol.unwrap_or_else(|| default_tol(state));
    let mut entries = Vec::with_capacity(8);
    for mask in SubsystemMask::all() {
        let (pass, min_eigenvalue) = if mask.is_identity() {
            is_psd(state.rho(), tol)?
        } else {
            is_psd(&partial_transpose(state, mask), tol)?
        };
        entries.push(MaskEntry {
            mask,
            min_eigenvalue,
            pass,
        });
    }
    let generating = [
        SubsystemMask::IDENTITY,
        SubsystemMask::A,
        SubsystemMask::B,
        SubsystemMask::C,
    ];
    let overall_ppt = generating
        .iter()
        .all(|m| entries.iter().any(|e| e.mask == *m && e.pass));
    Ok(PptReport {
        entries,
        overall_ppt,
        tol_used: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c64, TripartiteDims};

    #[test]
    fn is_psd_examples() {
        let (ok, min) = is_psd(&CMatrix::identity(4, 4), 1e-12).unwrap();
        assert!(ok);
        assert!((min - 1.0).abs() < 1e-14);

        let mut d = CMatrix::zeros(2, 2);
        d[(0, 0)] = c64(1.0, 0.0);
        d[(1, 1)] = c64(-0.5, 0.0);
        let (ok, min) = is_psd(&d, 1e-12).unwrap();
        assert!(!ok);
        assert!((min + 0.5).abs() < 1e-14);
    }

    #[test]
    fn is_psd_rejects_non_hermitian() {
        let mut x = CMatrix::identity(2, 2);
        x[(0, 1)] = c64(1.0, 0.0);
        assert!(matches!(is_psd(&x, 1e-12), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn maximally_mixed_passes() {
        let dims = TripartiteDims::new(2, 3, 2).unwrap();
        let st = TripartiteState::from_unnormalized(dims, CMatrix::identity(12, 12)).unwrap();
        let rep = ppt_report(&st, None).unwrap();
        assert!(rep.overall_ppt);
        assert_eq!(rep.entries.len(), 8);
        for e in &rep.entries {
            assert!((e.min_eigenvalue - 1.0 / 12.0).abs() < 1e-14);
        }
        assert!((rep.tol_used - 1e-9).abs() < 1e-20);
    }
}
