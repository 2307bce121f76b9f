use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds to 10 significant digits so reports do not carry solver noise.
pub fn sig10(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.9e}").parse().unwrap_or(v)
}

pub fn sig10_opt(v: Option<f64>) -> Option<f64> {
    v.map(sig10)
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum Instance {
    Symmetric {
        source: String,
        n: usize,
        k: usize,
    },
    Rectangular {
        source: String,
        m: usize,
        n: usize,
        k1: usize,
        k2: usize,
    },
}

/// Output of `solve` and `bound`.
#[derive(Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub command: &'static str,
    pub instance: Instance,
    pub method: String,
    pub value: f64,
    /// 1-based indices.
    pub support: Vec<usize>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub status: String,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

#[derive(Serialize)]
pub struct SsvdRunReport {
    pub version: &'static str,
    pub command: &'static str,
    pub instance: Instance,
    pub method: String,
    pub value: f64,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub wall_time_ms: f64,
}

#[derive(Serialize)]
pub struct PointReport {
    pub feasible: bool,
    pub objective: f64,
    pub violations: Vec<String>,
}

#[derive(Serialize)]
pub struct ExportReport {
    pub version: &'static str,
    pub command: &'static str,
    pub instance: Instance,
    pub out: String,
    pub d: usize,
    pub m: usize,
    pub eps: f64,
    pub w_lower: f64,
    pub w_upper: f64,
    pub fixed_j: Option<usize>,
    pub binaries: usize,
    pub continuous: usize,
    pub constraints: usize,
    pub witness: Option<PointReport>,
    pub solution: Option<PointReport>,
    pub wall_time_ms: f64,
}

#[derive(Serialize)]
pub struct BenchRow {
    pub k: usize,
    pub w_star: f64,
    pub support: Vec<usize>,
    pub nodes: usize,
    pub exact_time_ms: f64,
    pub greedy: f64,
    pub greedy_gap_pct: f64,
    pub local: f64,
    pub local_gap_pct: f64,
    pub upper_bound: f64,
    pub bound_gap_pct: f64,
}

#[derive(Serialize)]
pub struct BenchReport {
    pub version: &'static str,
    pub command: &'static str,
    pub instance: BenchInstance,
    pub rows: Vec<BenchRow>,
    pub wall_time_ms: f64,
}

#[derive(Serialize)]
pub struct BenchInstance {
    pub source: String,
    pub n: usize,
}

pub fn millis(d: std::time::Duration) -> f64 {
    sig10(d.as_secs_f64() * 1e3)
}

pub fn print<T: Serialize>(report: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("reports serialize")
    );
}
