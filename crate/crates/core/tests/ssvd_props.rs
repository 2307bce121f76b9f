use proptest::prelude::*;
use sparse_spectra::oracle::brute_force_ssvd;
use sparse_spectra::problem::random_matrix;
use sparse_spectra::problem::Selection;
use sparse_spectra::ssvd::{
    greedy_ssvd, local_search_ssvd, normalized_truncation, ssvd_objective, truncation_ssvd,
    upper_bound_ssvd, SsvdInstance,
};

fn instance(m: usize, n: usize, k1: usize, k2: usize, seed: u64) -> SsvdInstance {
    SsvdInstance::new(random_matrix(m, n, seed), k1.min(m), k2.min(n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heuristics_sit_between_ratio_and_optimum(m in 1usize..6, n in 1usize..7, k1 in 1usize..4, k2 in 1usize..4, seed in any::<u64>()) {
        let inst = instance(m, n, k1, k2, seed);
        let w = brute_force_ssvd(&inst, u128::MAX).unwrap().value;
        let floor = w / ((inst.k1() * inst.k2()) as f64).sqrt() - 1e-9;
        let g = greedy_ssvd(&inst);
        let l = local_search_ssvd(&inst, &g.rows, &g.cols).unwrap();
        let t = truncation_ssvd(&inst);
        for v in [g.value, l.value, t.value] {
            prop_assert!(v >= floor && v <= w + 1e-9);
        }
        prop_assert!(l.value >= g.value - 1e-12);
        let ub = upper_bound_ssvd(&inst, 500).unwrap();
        prop_assert!(ub >= w - 1e-6);
    }

    #[test]
    fn reported_value_matches_objective(m in 1usize..6, n in 1usize..7, k1 in 1usize..4, k2 in 1usize..4, seed in any::<u64>()) {
        let inst = instance(m, n, k1, k2, seed);
        let g = greedy_ssvd(&inst);
        let direct = ssvd_objective(inst.a(), &g.rows, &g.cols).unwrap();
        prop_assert!((direct - g.value).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn negated_matrix_has_the_same_optimum(m in 1usize..5, n in 1usize..6, k1 in 1usize..3, k2 in 1usize..3, seed in any::<u64>()) {
        let inst = instance(m, n, k1, k2, seed);
        let neg = random_matrix(m, n, seed);
        let neg = sparse_spectra::spectral::Matrix::from_fn(m, n, |i, j| -neg.get(i, j));
        let neg = SsvdInstance::new(neg, inst.k1(), inst.k2()).unwrap();
        let a = brute_force_ssvd(&inst, u128::MAX).unwrap();
        let b = brute_force_ssvd(&neg, u128::MAX).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9);
    }

    #[test]
    fn truncation_keeps_largest_entries(x in prop::collection::vec(-10.0f64..10.0, 1..12), s in 1usize..12) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        let s = s.min(x.len());
        let t = normalized_truncation(&x, s).unwrap();
        let kept: Vec<usize> = (0..x.len()).filter(|&i| t[i] != 0.0).collect();
        prop_assert!(kept.len() <= s);
        let norm: f64 = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        for &i in &kept {
            prop_assert!(t[i].signum() == x[i].signum());
        }
        let smallest_kept = kept.iter().map(|&i| x[i].abs()).fold(f64::INFINITY, f64::min);
        let dropped = (0..x.len()).filter(|i| !kept.contains(i)).map(|i| x[i].abs()).fold(0.0, f64::max);
        prop_assert!(kept.len() < s || dropped <= smallest_kept);
        let _ = Selection::new(kept, x.len()).unwrap();
    }
}
