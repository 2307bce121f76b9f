use proptest::prelude::*;
use sparse_spectra::bounds::{saddle_upper_bound, SaddleOptions};
use sparse_spectra::heuristics::greedy;
use sparse_spectra::milp::{
    build_milp, build_milp_fixed_j, check_point, expansion_bits, parse_lp, witness_fixed_j,
    witness_from_support, write_lp,
};
use sparse_spectra::oracle::{brute_force, DEFAULT_SIZE_GUARD};
use sparse_spectra::problem::{random_psd, SpcaInstance};

const EPS: f64 = 1e-4;

fn instance(n: usize, rank: usize, k: usize, seed: u64) -> SpcaInstance {
    SpcaInstance::new(random_psd(n, rank.clamp(1, n), seed), k.clamp(1, n)).unwrap()
}

fn window(inst: &SpcaInstance) -> (f64, f64) {
    let lower = greedy(inst).value;
    let (ub, _) = saddle_upper_bound(inst.factor(), inst.k(), &SaddleOptions::default()).unwrap();
    (lower, ub.max(lower + EPS))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn census_matches_closed_form(n in 2usize..9, rank in 1usize..9, k in 1usize..5, seed in any::<u64>()) {
        let inst = instance(n, rank, k, seed);
        let (wl, wu) = window(&inst);
        let model = build_milp(inst.factor(), inst.k(), EPS, wl, wu).unwrap();
        let (d, m) = (inst.factor().rank(), expansion_bits(wl, wu, EPS).unwrap());
        prop_assert_eq!(model.constraints.len(), 5 * n * d + 5 * m * d + 2 * d * d + 4 * d + 3);
        prop_assert_eq!(model.binary_count(), n + d + m);
        let fixed = build_milp_fixed_j(inst.factor(), inst.k(), EPS, wl, wu, 0).unwrap();
        prop_assert_eq!(fixed.constraints.len(), 5 * n * d + 5 * m * d + 4 * d + 3);
        prop_assert_eq!(fixed.binary_count(), n + m);
    }

    #[test]
    fn optimal_witness_is_feasible_in_band(n in 2usize..9, rank in 1usize..9, k in 1usize..5, seed in any::<u64>()) {
        let inst = instance(n, rank, k, seed);
        let best = brute_force(&inst, DEFAULT_SIZE_GUARD).unwrap();
        let (wl, wu) = window(&inst);
        let model = build_milp(inst.factor(), inst.k(), EPS, wl, wu).unwrap();
        let point = witness_from_support(&model, inst.factor(), &best.selection).unwrap();
        let check = check_point(&model, &point).unwrap();
        prop_assert!(check.feasible, "{:?}", check.violations.first());
        let d = inst.factor().rank() as f64;
        prop_assert!(check.objective >= best.value - EPS && check.objective <= best.value + EPS * d.sqrt());
    }

    #[test]
    fn fixed_j_witness_is_feasible(n in 2usize..8, rank in 1usize..8, k in 1usize..4, seed in any::<u64>()) {
        let inst = instance(n, rank, k, seed);
        let best = brute_force(&inst, DEFAULT_SIZE_GUARD).unwrap();
        let (wl, wu) = window(&inst);
        let probe = build_milp(inst.factor(), inst.k(), EPS, wl, wu).unwrap();
        let x = witness_from_support(&probe, inst.factor(), &best.selection).unwrap();
        let d = inst.factor().rank();
        let j = (0..d).find(|j| x.get(&format!("x_{}", j + 1)) == Some(1.0)).unwrap();
        let model = build_milp_fixed_j(inst.factor(), inst.k(), EPS, wl, wu, j).unwrap();
        let point = witness_fixed_j(&model, inst.factor(), &best.selection).unwrap();
        let check = check_point(&model, &point).unwrap();
        prop_assert!(check.feasible, "{:?}", check.violations.first());
    }

    #[test]
    fn lp_text_round_trips(n in 2usize..8, rank in 1usize..8, k in 1usize..4, seed in any::<u64>(), fixed in any::<bool>()) {
        let inst = instance(n, rank, k, seed);
        let (wl, wu) = window(&inst);
        let model = if fixed {
            build_milp_fixed_j(inst.factor(), inst.k(), EPS, wl, wu, 0).unwrap()
        } else {
            build_milp(inst.factor(), inst.k(), EPS, wl, wu).unwrap()
        };
        let text = write_lp(&model);
        let parsed = parse_lp(&text).unwrap();
        prop_assert!(parsed == model);
        prop_assert_eq!(write_lp(&parsed), text);
    }
}
