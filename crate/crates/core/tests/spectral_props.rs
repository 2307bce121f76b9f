use proptest::prelude::*;
use sparse_spectra::problem::{random_matrix, random_psd};
use sparse_spectra::spectral::{
    largest_eigenpair, largest_singular_triplet, pivoted_cholesky, reference_spectrum, SymMatrix,
    DEFAULT_RANK_TOL,
};
use sparse_spectra::ssvd::augment;

fn symmetrized(n: usize, seed: u64) -> SymMatrix {
    let g = random_matrix(n, n, seed);
    SymMatrix::from_fn(n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_eigenvalue_dominates_rayleigh_quotients(n in 1usize..24, seed in any::<u64>(), probe in any::<u64>()) {
        let m = symmetrized(n, seed);
        let top = largest_eigenpair(&m, None, 1e-10).unwrap();
        let x: Vec<f64> = random_matrix(1, n, probe).row(0).to_vec();
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        prop_assume!(norm_sq > 1e-12);
        prop_assert!(m.quadratic_form(&x) / norm_sq <= top.value + 1e-9);
    }

    #[test]
    fn power_iteration_matches_reference(n in 1usize..32, seed in any::<u64>()) {
        let m = symmetrized(n, seed);
        let power = largest_eigenpair(&m, None, 1e-10).unwrap();
        let reference = reference_spectrum(&m).unwrap();
        prop_assert!((power.value - reference[0].value).abs() <= 1e-8);
    }

    #[test]
    fn cholesky_reconstructs_psd_input(n in 1usize..20, rank_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let rank = 1 + ((n - 1) as f64 * rank_frac) as usize;
        let a = random_psd(n, rank, seed);
        let f = pivoted_cholesky(&a, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(f.rank() <= rank);
        let r = f.reconstruct();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((r.get(i, j) - a.get(i, j)).abs() <= 1e-8 * a.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn augmented_spectrum_is_sign_symmetric(m in 1usize..8, n in 1usize..8, seed in any::<u64>()) {
        let b = random_matrix(m, n, seed);
        let spectrum = reference_spectrum(&augment(&b)).unwrap();
        let total = spectrum.len();
        for p in 0..total {
            prop_assert!((spectrum[p].value + spectrum[total - 1 - p].value).abs() <= 1e-8);
        }
        let sigma = largest_singular_triplet(&b).unwrap().sigma;
        prop_assert!((sigma - spectrum[0].value).abs() <= 1e-8);
    }
}
