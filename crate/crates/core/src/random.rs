//! Seeded sampling helpers.
//!
//! Every sampled object draws from its own ChaCha20 stream: the generator is
//! seeded with `seed_from_u64(seed)` and then switched to a fixed stream id via
//! `set_stream(id)`. Stream ids are assigned per object by the caller, so adding
//! a draw to one object never shifts the values of another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::tensor::{c64, CMatrix, CVector, C64};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Complex normal with unit expected modulus squared.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    // filled row-major so the draw order does not depend on storage layout
    let data: Vec<C64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let z = ginibre(rng, n, n);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVector {
    loop {
        let v = CVector::from_iterator(n, (0..n).map(|_| complex_normal(rng)));
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}
