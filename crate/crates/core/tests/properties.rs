use pptcanon_core::ppt::ppt_report;
use pptcanon_core::random::{ginibre, haar_unitary, stream_rng};
use pptcanon_core::tensor::{
    basis_vector, block, conjugate_local, eigvalsh, hermitian_part, numeric_rank,
    partial_transpose, partial_transpose_matrix, psd_sqrt, sandwich_ab, singular_values, CMatrix,
    RankTol, SubsystemMask, TripartiteDims, TripartiteState,
};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = TripartiteDims> {
    (2usize..4, 2usize..4, 1usize..4).prop_map(|(k, m, n)| TripartiteDims::new(k, m, n).unwrap())
}

/// Random full-rank density matrix `G G† / tr`.
fn random_state(dims: TripartiteDims, seed: u64) -> TripartiteState {
    let g = ginibre(&mut stream_rng(seed, 0), dims.total(), dims.total());
    TripartiteState::from_unnormalized(dims, hermitian_part(&(&g * g.adjoint()))).unwrap()
}

fn mask_strategy() -> impl Strategy<Value = SubsystemMask> {
    (0usize..8).prop_map(|i| SubsystemMask::all()[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_transpose_is_exact_involution(dims in dims_strategy(), seed in any::<u64>(), mask in mask_strategy()) {
        let st = random_state(dims, seed);
        let once = partial_transpose(&st, mask);
        let twice = partial_transpose_matrix(&once, dims, mask);
        prop_assert_eq!(&twice, st.rho());
        prop_assert_eq!(once.trace(), st.rho().trace());
        prop_assert_eq!(&once.adjoint(), &once.adjoint().adjoint().adjoint());
        prop_assert!((&once - once.adjoint()).norm() <= 1e-15 * once.norm());
    }

    #[test]
    fn full_mask_is_transpose(dims in dims_strategy(), seed in any::<u64>()) {
        let st = random_state(dims, seed);
        prop_assert_eq!(partial_transpose(&st, SubsystemMask::FULL), st.rho().transpose());
    }

    #[test]
    fn complementary_masks_share_spectrum(dims in dims_strategy(), seed in any::<u64>()) {
        let st = random_state(dims, seed);
        let rep = ppt_report(&st, None).unwrap();
        for m in SubsystemMask::all() {
            let a = rep.min_eigenvalue(m).unwrap();
            let b = rep.min_eigenvalue(m.complement()).unwrap();
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}: {a} {b}", m.label(), m.complement().label());
        }
    }

    #[test]
    fn ppt_invariant_under_local_unitaries(dims in dims_strategy(), seed in any::<u64>()) {
        let st = random_state(dims, seed);
        let mut rng = stream_rng(seed, 1);
        let ua = haar_unitary(&mut rng, dims.k);
        let ub = haar_unitary(&mut rng, dims.m);
        let uc = haar_unitary(&mut rng, dims.n);
        let moved = TripartiteState::from_unnormalized(dims, hermitian_part(&conjugate_local(st.rho(), &ua, &ub, &uc))).unwrap();
        let r1 = ppt_report(&st, None).unwrap();
        let r2 = ppt_report(&moved, None).unwrap();
        prop_assert_eq!(r1.overall_ppt, r2.overall_ppt);
        for (a, b) in r1.entries.iter().zip(&r2.entries) {
            prop_assert!((a.min_eigenvalue - b.min_eigenvalue).abs() <= 1e-10);
        }
    }

    #[test]
    fn sandwich_with_basis_vectors_is_block(dims in dims_strategy(), seed in any::<u64>()) {
        let st = random_state(dims, seed);
        let (i, j) = ((seed as usize) % dims.k, (seed as usize / 7) % dims.m);
        let s = sandwich_ab(&st, &basis_vector(dims.k, i), &basis_vector(dims.m, j)).unwrap();
        let b = i * dims.m + j;
        prop_assert_eq!(s, block(&st, b, b).unwrap());
        let corner = sandwich_ab(&st, &basis_vector(dims.k, dims.k - 1), &basis_vector(dims.m, dims.m - 1)).unwrap();
        prop_assert_eq!(corner, block(&st, dims.corner_block(), dims.corner_block()).unwrap());
    }

    #[test]
    fn blocks_are_adjoint_pairs(dims in dims_strategy(), seed in any::<u64>()) {
        let st = random_state(dims, seed);
        let nb = dims.blocks();
        let (r, c) = ((seed as usize) % nb, (seed as usize / 13) % nb);
        prop_assert_eq!(block(&st, r, c).unwrap(), block(&st, c, r).unwrap().adjoint());
    }

    #[test]
    fn psd_sqrt_squares_back(seed in any::<u64>(), n in 1usize..6) {
        let g = ginibre(&mut stream_rng(seed, 0), n, n);
        let x = hermitian_part(&(g.adjoint() * &g));
        let s = psd_sqrt(&x, 1e-10).unwrap();
        prop_assert!((&s * &s - &x).norm() <= 1e-12 * x.norm().max(1.0));
        prop_assert!((&s - s.adjoint()).norm() <= 1e-12 * s.norm().max(1.0));
        prop_assert!(eigvalsh(&s)[0] >= -1e-12);
    }

    #[test]
    fn rank_plus_kernel_dimension(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6, r in 0usize..6) {
        let r = r.min(rows).min(cols);
        let mut rng = stream_rng(seed, 0);
        let x = ginibre(&mut rng, rows, r) * ginibre(&mut rng, r, cols);
        let x = if r == 0 { CMatrix::zeros(rows, cols) } else { x };
        let rank = numeric_rank(&x, RankTol::Relative(1e-10));
        let sv = singular_values(&x);
        let smax = sv.first().copied().unwrap_or(0.0);
        let kernel = sv.iter().filter(|&&s| s <= 1e-10 * smax).count();
        prop_assert_eq!(rank, r);
        prop_assert_eq!(rank + kernel, rows.min(cols));
    }
}

#[test]
fn kron_is_associative() {
    let mut rng = stream_rng(11, 0);
    let (x, y, z) = (
        ginibre(&mut rng, 2, 3),
        ginibre(&mut rng, 2, 2),
        ginibre(&mut rng, 3, 1),
    );
    let left = pptcanon_core::tensor::kron(&pptcanon_core::tensor::kron(&x, &y), &z);
    let right = pptcanon_core::tensor::kron(&x, &pptcanon_core::tensor::kron(&y, &z));
    assert!((&left - &right).norm() <= 1e-14 * left.norm());
}
