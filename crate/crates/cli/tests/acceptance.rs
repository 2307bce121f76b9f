//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use sparse_spectra::bnb::{solve_exact, BnbOptions};
use sparse_spectra::bounds::{saddle_upper_bound, SaddleOptions};
use sparse_spectra::heuristics::{greedy, greedy_local_search, local_search, s_swap_local_search};
use sparse_spectra::io::pitprops;
use sparse_spectra::milp::{build_milp, check_point, parse_lp, witness_from_support, write_lp};
use sparse_spectra::oracle::{brute_force, brute_force_ssvd, DEFAULT_SIZE_GUARD};
use sparse_spectra::problem::{
    gen_greedy_tight, gen_sswap_tight, random_matrix, random_psd, sswap_tight_start, SpcaInstance,
};
use sparse_spectra::spectral::{largest_eigenpair, reference_spectrum, SymMatrix};
use sparse_spectra::ssvd::{
    augment, gen_ssvd_tight, greedy_ssvd, local_search_ssvd, truncation_ssvd, upper_bound_ssvd,
    SsvdInstance,
};

const PITPROPS_W: [f64; 7] = [2.9375, 3.4062, 3.7710, 3.9962, 4.0686, 4.1386, 4.1726];
const PITPROPS_W1: [f64; 7] = [3.1065, 3.4868, 3.7859, 3.9962, 4.0805, 4.1386, 4.1763];
const TABLE_TOL: f64 = 1e-4;
const EXACT_TIME: Duration = Duration::from_secs(120);
const HEURISTIC_TIME: Duration = Duration::from_secs(1);
const CERT_TOL: f64 = 1e-6;
const W1_TOL: f64 = 1e-3;
const ORACLE_TOL: f64 = 1e-6;
const ORACLE_SUITE_TIME: Duration = Duration::from_secs(60);
const RATIO_TOL: f64 = 1e-9;
const MILP_EPS: f64 = 1e-4;
const SPECTRAL_TOL: f64 = 1e-8;

type Outcome = Result<String, String>;

fn cli(args: &[&str]) -> Result<(Value, Duration), String> {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_sparse-spectra"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!(
            "{args:?} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let v = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok((v, elapsed))
}

fn table_check(method: &str, extra: &[&str], limit: Duration) -> Result<Duration, String> {
    let mut slowest = Duration::ZERO;
    for (k, w) in (4..=10).zip(PITPROPS_W) {
        let ks = k.to_string();
        let mut args = vec![
            "solve", "--method", method, "--k", &ks, "--input", "pitprops",
        ];
        args.extend_from_slice(extra);
        let (v, elapsed) = cli(&args)?;
        if elapsed > EXACT_TIME {
            return Err(format!("{method} k={k}: process took {elapsed:?}"));
        }
        let value = v["value"].as_f64().ok_or("report lacks a value")?;
        if (value - w).abs() > TABLE_TOL {
            return Err(format!("{method} k={k}: {value:.6} vs {w}"));
        }
        let solver_time =
            Duration::from_secs_f64(v["wall_time_ms"].as_f64().unwrap_or(f64::INFINITY) / 1e3);
        if solver_time > limit {
            return Err(format!("{method} k={k}: {solver_time:?} exceeds {limit:?}"));
        }
        slowest = slowest.max(solver_time);
    }
    Ok(slowest)
}

fn criterion_1() -> Outcome {
    let slowest = table_check(
        "exact",
        &["--rel-tol", "0", "--abs-tol", "1e-9"],
        EXACT_TIME,
    )?;
    Ok(format!(
        "exact k=4..10 within {TABLE_TOL} of the table; slowest run {slowest:.2?}"
    ))
}

fn criterion_2() -> Outcome {
    let g = table_check("greedy", &[], HEURISTIC_TIME)?;
    let l = table_check("local", &[], HEURISTIC_TIME)?;
    Ok(format!(
        "greedy and local k=4..10 within {TABLE_TOL}; slowest {:.2?}",
        g.max(l)
    ))
}

fn criterion_3() -> Outcome {
    let a = pitprops().symmetric().map_err(|e| e.to_string())?;
    let mut worst = f64::INFINITY;
    for (k, w1) in (4..=10).zip(PITPROPS_W1) {
        let inst = SpcaInstance::new(a.clone(), k).map_err(|e| e.to_string())?;
        let w = brute_force(&inst, DEFAULT_SIZE_GUARD)
            .map_err(|e| e.to_string())?
            .value;
        let (ub, _) = saddle_upper_bound(inst.factor(), k, &SaddleOptions::default())
            .map_err(|e| e.to_string())?;
        let cert = (k as f64).min(13.0 / k as f64) * w + CERT_TOL;
        if ub < w - CERT_TOL || ub > cert {
            return Err(format!("k={k}: bound {ub:.6} outside [{w:.6}, {cert:.6}]"));
        }
        if ub < w1 - W1_TOL {
            return Err(format!("k={k}: bound {ub:.6} below {w1} - {W1_TOL}"));
        }
        worst = worst.min(ub - w1);
    }
    Ok(format!(
        "w* <= bound <= min(k,13/k) w* for k=4..10; min(bound - w1) = {worst:.4}"
    ))
}

/// Seeded small instance `i`: `n` in 5..=12, `k` in 1..=5, mixed ranks.
fn small_instance(i: u64, max_k: usize) -> SpcaInstance {
    let n = 5 + (i % 8) as usize;
    let k = 1 + ((i / 8) as usize % max_k.min(n));
    let rank = 1 + ((i * 7 + 3) as usize % n);
    SpcaInstance::new(random_psd(n, rank, 1000 + i), k).expect("valid instance")
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let opts = BnbOptions {
        abs_tol: 1e-9,
        rel_tol: 0.0,
        ..BnbOptions::default()
    };
    let mut worst = 0.0f64;
    for i in 0..50 {
        let inst = small_instance(i, 5);
        let exact = solve_exact(&inst, &opts);
        let oracle = brute_force(&inst, DEFAULT_SIZE_GUARD).map_err(|e| e.to_string())?;
        let diff = (exact.value - oracle.value).abs();
        worst = worst.max(diff);
        if diff > ORACLE_TOL {
            return Err(format!(
                "instance {i} (n={}, k={}): exact {} vs oracle {}",
                inst.n(),
                inst.k(),
                exact.value,
                oracle.value
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > ORACLE_SUITE_TIME {
        return Err(format!("suite took {elapsed:.2?}"));
    }
    Ok(format!(
        "50 instances, max |exact - oracle| = {worst:.1e}, {elapsed:.2?}"
    ))
}

fn criterion_5() -> Outcome {
    let mut min_ratio = f64::INFINITY;
    for i in 0..200 {
        let inst = small_instance(10_000 + i, 5);
        let k = inst.k() as f64;
        let w = brute_force(&inst, DEFAULT_SIZE_GUARD)
            .map_err(|e| e.to_string())?
            .value;
        let g = greedy(&inst);
        let l = local_search(&inst, &g.selection).map_err(|e| e.to_string())?;
        if g.value < w / k - RATIO_TOL || l.value < w / k - RATIO_TOL {
            return Err(format!(
                "instance {i}: greedy {} / local {} below w*/k = {}",
                g.value,
                l.value,
                w / k
            ));
        }
        let s = 1 + (i as usize % inst.k().min(3));
        let sw = s_swap_local_search(&inst, s, &g.selection).map_err(|e| e.to_string())?;
        if sw.value < s as f64 * w / k - RATIO_TOL {
            return Err(format!(
                "instance {i}: {s}-swap {} below {}",
                sw.value,
                s as f64 * w / k
            ));
        }
        min_ratio = min_ratio.min(g.value / w);
    }
    for k in 2..=6 {
        let inst = gen_greedy_tight(k).map_err(|e| e.to_string())?;
        let w = brute_force(&inst, DEFAULT_SIZE_GUARD)
            .map_err(|e| e.to_string())?
            .value;
        let ratio = greedy(&inst).value / w;
        if (ratio - 1.0 / k as f64).abs() > RATIO_TOL {
            return Err(format!("greedy-tight k={k}: ratio {ratio}"));
        }
    }
    for k in 2..=6 {
        for s in 1..k {
            let inst = gen_sswap_tight(k, s).map_err(|e| e.to_string())?;
            let r = s_swap_local_search(&inst, s, &sswap_tight_start(k, s))
                .map_err(|e| e.to_string())?;
            if (r.value - s as f64).abs() > RATIO_TOL {
                return Err(format!("sswap-tight k={k} s={s}: value {}", r.value));
            }
        }
    }
    Ok(format!(
        "200 instances above their ratios (min greedy/w* = {min_ratio:.3}); tight instances exact"
    ))
}

fn criterion_6() -> Outcome {
    for i in 0..100u64 {
        let m = 2 + (i % 5) as usize;
        let n = 2 + ((i / 5) % 7) as usize;
        let k1 = 1 + (i as usize % m.min(3));
        let k2 = 1 + ((i / 3) as usize % n.min(3));
        let inst =
            SsvdInstance::new(random_matrix(m, n, 500 + i), k1, k2).map_err(|e| e.to_string())?;
        let w = brute_force_ssvd(&inst, u128::MAX)
            .map_err(|e| e.to_string())?
            .value;
        let (fk1, fk2, fm, fn_) = (k1 as f64, k2 as f64, m as f64, n as f64);
        let g = greedy_ssvd(&inst);
        let l = local_search_ssvd(&inst, &g.rows, &g.cols).map_err(|e| e.to_string())?;
        let floor = w / (fk1 * fk2).sqrt() - RATIO_TOL;
        if g.value < floor || l.value < floor {
            return Err(format!(
                "instance {i}: greedy {} / local {} below {floor}",
                g.value, l.value
            ));
        }
        let t = truncation_ssvd(&inst);
        let t_ratio = (1.0 / fk1.sqrt())
            .max(1.0 / fk2.sqrt())
            .max((fk1 * fk2 / (fm * fn_)).sqrt());
        if t.value < w * t_ratio - RATIO_TOL {
            return Err(format!(
                "instance {i}: truncation {} below {}",
                t.value,
                w * t_ratio
            ));
        }
        let ub = upper_bound_ssvd(&inst, 1000).map_err(|e| e.to_string())?;
        let cap = (fm * fn_ / (fk1 * fk2)).sqrt() * w + 1e-6;
        if ub < w - 1e-6 || ub > cap {
            return Err(format!("instance {i}: bound {ub} outside [{w}, {cap}]"));
        }
    }
    for (k1, k2) in [(1, 2), (2, 2), (2, 3), (3, 3)] {
        let inst = gen_ssvd_tight(k1, k2).map_err(|e| e.to_string())?;
        let w = brute_force_ssvd(&inst, u128::MAX)
            .map_err(|e| e.to_string())?
            .value;
        let ratio = greedy_ssvd(&inst).value / w;
        if (ratio - 1.0 / ((k1 * k2) as f64).sqrt()).abs() > RATIO_TOL {
            return Err(format!("tight ({k1},{k2}): ratio {ratio}"));
        }
    }
    Ok("100 instances within their ratios; tight instances at 1/sqrt(k1 k2)".into())
}

fn criterion_7() -> Outcome {
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..50u64 {
        let n = 3 + (i % 6) as usize;
        let k = 1 + ((i / 6) as usize % n.min(4));
        let rank = 1 + ((i * 5) as usize % n);
        let inst =
            SpcaInstance::new(random_psd(n, rank, 7000 + i), k).map_err(|e| e.to_string())?;
        let best = brute_force(&inst, DEFAULT_SIZE_GUARD).map_err(|e| e.to_string())?;
        let w = best.value;
        let lower = greedy_local_search(&inst).value;
        let (ub, _) = saddle_upper_bound(inst.factor(), k, &SaddleOptions::default())
            .map_err(|e| e.to_string())?;
        let upper = ub.max(lower + MILP_EPS);
        let model =
            build_milp(inst.factor(), k, MILP_EPS, lower, upper).map_err(|e| e.to_string())?;
        let point = witness_from_support(&model, inst.factor(), &best.selection)
            .map_err(|e| e.to_string())?;
        let check = check_point(&model, &point).map_err(|e| e.to_string())?;
        if !check.feasible {
            let names: Vec<&str> = check
                .violations
                .iter()
                .take(3)
                .map(|v| v.name.as_str())
                .collect();
            return Err(format!("instance {i}: witness infeasible at {names:?}"));
        }
        let d = inst.factor().rank() as f64;
        let (lo, hi) = (w - MILP_EPS, w + MILP_EPS * d.sqrt());
        if check.objective < lo || check.objective > hi {
            return Err(format!(
                "instance {i}: objective {} outside [{lo}, {hi}]",
                check.objective
            ));
        }
        worst_excess = worst_excess.max(check.objective - w);
        let text = write_lp(&model);
        let parsed = parse_lp(&text).map_err(|e| e.to_string())?;
        if parsed != model || write_lp(&parsed) != text {
            return Err(format!("instance {i}: LP round trip changed the model"));
        }
        let again =
            build_milp(inst.factor(), k, MILP_EPS, lower, upper).map_err(|e| e.to_string())?;
        if write_lp(&again) != text {
            return Err(format!("instance {i}: LP output is not deterministic"));
        }
    }
    Ok(format!("50 witnesses feasible in the band (max objective - w* = {worst_excess:.2e}); LP round trip stable"))
}

fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
    let g = random_matrix(n, n, seed);
    SymMatrix::from_fn(n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)))
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let n = 1 + (i as usize * 13) % 64;
        let m = if i % 2 == 0 {
            random_symmetric(n, 9000 + i)
        } else {
            random_psd(n, 1 + (i as usize % n), 9000 + i)
        };
        let reference = reference_spectrum(&m).map_err(|e| e.to_string())?[0].value;
        let power = largest_eigenpair(&m, None, 1e-10)
            .map_err(|e| format!("n={n}: {e}"))?
            .value;
        let diff = (power - reference).abs();
        worst = worst.max(diff);
        if diff > SPECTRAL_TOL {
            return Err(format!("matrix {i} (n={n}): {power} vs {reference}"));
        }
    }
    let mut worst_sym = 0.0f64;
    for i in 0..100u64 {
        let (m, n) = (1 + (i % 9) as usize, 1 + (i / 9 % 12) as usize);
        let spectrum = reference_spectrum(&augment(&random_matrix(m, n, 11_000 + i)))
            .map_err(|e| e.to_string())?;
        let total = spectrum.len();
        for p in 0..total {
            let err = (spectrum[p].value + spectrum[total - 1 - p].value).abs();
            worst_sym = worst_sym.max(err);
            if err > SPECTRAL_TOL {
                return Err(format!("augmented {m}x{n}: eigenvalue pair off by {err}"));
            }
        }
    }
    Ok(format!(
        "max eigenvalue error {worst:.1e}; max augmented asymmetry {worst_sym:.1e}"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("Pitprops exactness", criterion_1),
        ("Pitprops heuristic optimality", criterion_2),
        ("upper-bound sandwich", criterion_3),
        ("oracle equivalence", criterion_4),
        ("approximation ratios", criterion_5),
        ("rank-one sparse SVD", criterion_6),
        ("MILP witness band", criterion_7),
        ("spectral correctness", criterion_8),
    ];
    let mut failed = 0;
    for (pos, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", pos + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", pos + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
