//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but only turn into a non-zero exit status when
//! `ACCEPTANCE_STRICT=1` is set.

use std::time::{Duration, Instant};

use cni_core::clifford::single_qubit_cliffords;
use cni_core::estimator::{cni_run, estimate_seminorms, variance_bound, ObservableF};
use cni_core::experiment::{self, ExperimentConfig, Method, ResultRow};
use cni_core::noise::CircuitNoise;
use cni_core::rng::{derive_seed, stream};
use cni_core::shadow::{
    calibrate_srse, compute_g_h, deviated_observable_norm_check, estimate_shadow_norms,
    global_projector_shadow_norm_sq, two_class_table, EnsembleSpec, NoiseFamily, ShadowSetup,
};
use cni_core::stabilizer::StabilizerTableau;
use cni_core::verify::{
    compression_suite, neumann_check, neumann_test_model, oracle_suite, twirl_suite, zblock_suite, zz_fault_gammas,
};
use cni_core::{stats, CliffordCircuit, PauliString};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

const SEED: u64 = 20_240_601;

const ORACLE_CASES: usize = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const TWIRL_CASES: usize = 100;
const COMPRESSION_CASES: usize = 100;
const ZBLOCK_PAIRS: usize = 500;
const NEUMANN_DRAWS: usize = 100_000;
const NEUMANN_WEIGHT: f64 = 1.25;
const NEUMANN_Z_MAX: f64 = 5.0;

const BOUND_P: f64 = 0.1;
const BOUND_K: usize = 1000;
const BOUND_REPS: usize = 100;
const BOUND_SEMINORM_SAMPLES: usize = 200_000;
const BOUND_SE_FACTOR: f64 = 3.0;
const BOUND_BUDGET: Duration = Duration::from_secs(300);

const SWEEP: [f64; 6] = [0.0, 0.02, 0.04, 0.06, 0.08, 0.10];
const SHADOW_M: usize = 1000;
const SHADOW_REPS: usize = 50;
const UNBIASED_SE_FACTOR: f64 = 3.0;
const SRSE_BIAS_SE_FACTOR: f64 = 5.0;
const SWEEP_BUDGET: Duration = Duration::from_secs(600);
const MULTI_SHOT_K: usize = 1000;
const MULTI_SHOT_P: [f64; 2] = [0.06, 0.10];

const CONFIDENCE: f64 = 0.95;

const CALIB_ROUNDS: usize = 100_000;
const CALIB_SE_FACTOR: f64 = 5.0;

const TOY_SAMPLES: usize = 40_000;
const TOY_SE_FACTOR: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn f_critical(df1: usize, df2: usize) -> f64 {
    FisherSnedecor::new(df1 as f64, df2 as f64).unwrap().inverse_cdf(CONFIDENCE)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let report = oracle_suite(ORACLE_CASES, SEED);
    let elapsed = start.elapsed();
    let pass = report.ok() && report.cases == ORACLE_CASES && elapsed < ORACLE_BUDGET;
    Outcome::new(pass, format!("{report} in {:.2} s", elapsed.as_secs_f64()))
}

fn twirl_structure() -> Outcome {
    let report = twirl_suite(TWIRL_CASES, SEED);
    Outcome::new(report.ok() && report.cases == TWIRL_CASES, report.to_string())
}

fn compression_soundness() -> Outcome {
    let report = compression_suite(COMPRESSION_CASES, SEED);
    let (gamma, compressed) = zz_fault_gammas().unwrap();
    Outcome::new(
        report.ok() && compressed < gamma,
        format!("{report}; ZZ fault gamma {gamma:.4} -> {compressed:.4}"),
    )
}

fn zblock_algorithms() -> Outcome {
    let report = zblock_suite(ZBLOCK_PAIRS, SEED);
    Outcome::new(report.ok() && report.cases >= 2 * ZBLOCK_PAIRS, report.to_string())
}

fn neumann_unbiasedness() -> Outcome {
    let model = neumann_test_model().unwrap();
    let check = neumann_check(&model, NEUMANN_DRAWS, SEED).unwrap();
    let pass = (check.weight - NEUMANN_WEIGHT).abs() < 1e-12
        && check.weight_constant
        && check.exact_entries_ok
        && check.max_z_score <= NEUMANN_Z_MAX;
    Outcome::new(
        pass,
        format!(
            "|weight| = {} (constant: {}), max z-score {:.2} over {} draws",
            check.weight, check.weight_constant, check.max_z_score, check.draws
        ),
    )
}

fn variance_theorem() -> Outcome {
    let start = Instant::now();
    let n = 4;
    let circuit = CliffordCircuit::ghz_preparation(n).inverse();
    let input = StabilizerTableau::ghz(n);
    let noise = CircuitNoise::local_bitflip(&circuit, BOUND_P).unwrap();
    let f = ObservableF::basis_projector(n, 0).unwrap();
    let norms = estimate_seminorms(&f, &circuit, &noise, &input, BOUND_SEMINORM_SAMPLES, derive_seed(SEED, &[6])).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut variances = Vec::new();
    for l in [1usize, 10] {
        let means: Vec<f64> = (0..BOUND_REPS)
            .map(|rep| cni_run(&circuit, &input, &noise, &f, BOUND_K, l, derive_seed(SEED, &[6, l as u64, rep as u64])).unwrap())
            .map(|rec| rec.mean)
            .collect();
        let gamma = noise.inverse(&circuit, true).unwrap().gamma();
        let var = stats::variance(&means);
        let var_se = var * (2.0 / (BOUND_REPS as f64 - 1.0)).sqrt();
        let lf = l as f64;
        let bound = variance_bound(gamma, BOUND_K, l, norms.norm_star(), norms.norm_circ());
        let bound_se = gamma * gamma / BOUND_K as f64 * (norms.star_se / lf + (1.0 - 1.0 / lf) * norms.circ_se);
        let ok = var <= bound + BOUND_SE_FACTOR * (var_se + bound_se);
        pass &= ok;
        parts.push(format!("L={l}: Var {var:.3e} vs bound {bound:.3e}"));
        variances.push(var);
    }
    let ratio = variances[0] / variances[1];
    let critical = f_critical(BOUND_REPS - 1, BOUND_REPS - 1);
    pass &= ratio > critical;
    let elapsed = start.elapsed();
    pass &= elapsed < BOUND_BUDGET;
    parts.push(format!("Var(L=1)/Var(L=10) = {ratio:.2} (F crit {critical:.2})"));
    parts.push(format!("{:.1} s", elapsed.as_secs_f64()));
    Outcome::new(pass, parts.join("; "))
}

fn sweep_config(noise: &str, methods: &str, l: &str, k: usize, sweep: &[f64]) -> ExperimentConfig {
    let sweep: Vec<String> = sweep.iter().map(|p| p.to_string()).collect();
    ExperimentConfig::from_json(&format!(
        r#"{{"n": 4, "state": {{"kind": "ghz"}}, "methods": {methods}, "noise": "{noise}", "ensemble": "global",
            "m": {SHADOW_M}, "k": {k}, "l": {l}, "repetitions": {SHADOW_REPS}, "seed": {SEED},
            "sweep": [{}]}}"#,
        sweep.join(", ")
    ))
    .unwrap()
}

fn row(rows: &[ResultRow], method: Method, l: usize, p: f64) -> &ResultRow {
    rows.iter().find(|r| r.method == method && r.l == l && r.p == p).expect("row present")
}

fn rep_se(r: &ResultRow) -> f64 {
    r.std_of_means.unwrap() / (r.per_repetition_means.len() as f64).sqrt()
}

fn single_shot_sweep() -> Outcome {
    let start = Instant::now();
    let local = experiment::run(&sweep_config("local_bitflip", r#"["cni"]"#, "[1, 10]", 1, &SWEEP), None).unwrap();
    let global = experiment::run(&sweep_config("global_depol_first_order", r#"["cni", "srse"]"#, "[1, 10]", 1, &SWEEP), None).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for (label, out) in [("local", &local), ("global", &global)] {
        let rows = &out.results.rows;
        if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
            return Outcome::new(false, format!("{label}: {} failed at p={}: {:?}", bad.method.name(), bad.p, bad.error));
        }
        let mut worst: f64 = 0.0;
        let mut std_ok = true;
        for &p in &SWEEP {
            for l in [1, 10] {
                let r = row(rows, Method::Cni, l, p);
                worst = worst.max((r.mean_of_means.unwrap() - 1.0).abs() / rep_se(r));
            }
            std_ok &= row(rows, Method::Cni, 10, p).std_of_means <= row(rows, Method::Cni, 1, p).std_of_means;
        }
        pass &= worst <= UNBIASED_SE_FACTOR && std_ok;
        notes.push(format!("{label}: CNI max |mean-1|/SE {worst:.2}, std(L=10) <= std(L=1) {std_ok}"));
    }
    let rows = &global.results.rows;
    let biases: Vec<f64> = SWEEP.iter().map(|&p| (row(rows, Method::Srse, 1, p).mean_of_means.unwrap() - 1.0).abs()).collect();
    let increasing = biases.windows(2).all(|w| w[1] > w[0]);
    let last = row(rows, Method::Srse, 1, SWEEP[SWEEP.len() - 1]);
    let last_z = biases[biases.len() - 1] / rep_se(last);
    pass &= increasing && last_z > SRSE_BIAS_SE_FACTOR;
    let shown: Vec<String> = biases.iter().map(|b| format!("{b:.4}")).collect();
    notes.push(format!(
        "sRSE |bias| [{}] strictly increasing {increasing}, at p=0.10 {last_z:.2} SE",
        shown.join(", ")
    ));
    let elapsed = start.elapsed();
    pass &= elapsed < SWEEP_BUDGET;
    notes.push(format!("{:.1} s", elapsed.as_secs_f64()));
    Outcome::new(pass, notes.join("; "))
}

fn multi_shot_variance() -> Outcome {
    let start = Instant::now();
    let critical = f_critical(SHADOW_REPS - 1, SHADOW_REPS - 1);
    let mut pass = true;
    let mut notes = Vec::new();
    for noise in ["local_bitflip", "global_depol_first_order"] {
        let out = experiment::run(&sweep_config(noise, r#"["cni", "cpec"]"#, "1", MULTI_SHOT_K, &MULTI_SHOT_P), None).unwrap();
        let rows = &out.results.rows;
        for &p in &MULTI_SHOT_P {
            let cni = row(rows, Method::Cni, 1, p);
            let cpec = row(rows, Method::Cpec, 1, p);
            let ratio = (cpec.std_of_means.unwrap() / cni.std_of_means.unwrap()).powi(2);
            pass &= ratio > critical;
            notes.push(format!("{noise} p={p}: Var(cPEC)/Var(CNI) {ratio:.2}"));
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < SWEEP_BUDGET;
    notes.push(format!("F crit {critical:.2}; {:.1} s", elapsed.as_secs_f64()));
    Outcome::new(pass, notes.join("; "))
}

fn calibration_sanity() -> Outcome {
    let group = single_qubit_cliffords();
    let mut quarters = 0u64;
    for c in &group {
        let out = StabilizerTableau::from_circuit(&c.synthesize()).basis_support().unwrap();
        quarters += (0..2u64).map(|b| (4.0 * out.probability(b).powi(2)) as u64).sum::<u64>();
    }
    let denom = 4.0 * group.len() as f64;
    let exhaustive = (2.0 * quarters as f64 - denom) / denom;
    let (r, se) = calibrate_srse(&EnsembleSpec::global(1), &NoiseFamily::None, CALIB_ROUNDS, derive_seed(SEED, &[9])).unwrap();
    let pass = exhaustive == 1.0 / 3.0 && (r - 1.0 / 3.0).abs() <= CALIB_SE_FACTOR * se;
    Outcome::new(pass, format!("exhaustive r = {exhaustive}, sampled r = {r:.5} +- {se:.5}"))
}

fn dependence_bound() -> Outcome {
    let n = 4;
    let faults: [(PauliString, f64); 2] = [("XIII".parse().unwrap(), 0.1), ("IXII".parse().unwrap(), 0.2)];
    let table = two_class_table(&faults).unwrap();
    let (g, h) = compute_g_h(&table).unwrap();
    let mi = table.mutual_information();
    let spec = EnsembleSpec::global(n);
    let projector = StabilizerTableau::ghz(n);
    let mut rng = stream(SEED, &[10]);
    let small = EnsembleSpec::global(3);
    let conjugation_invariant = StabilizerTableau::ghz(3)
        .rows()
        .iter()
        .all(|row| deviated_observable_norm_check(row, &small, 50, &mut rng).unwrap());
    let s = global_projector_shadow_norm_sq(n);
    let rhs = g * s + (1.0 - g) * h * s;
    let setup = ShadowSetup::fidelity(projector, spec, NoiseFamily::TwoClass { faults });
    let norms = estimate_shadow_norms(&setup, TOY_SAMPLES, derive_seed(SEED, &[10])).unwrap();
    let pass = conjugation_invariant && rhs >= norms.ns1 - TOY_SE_FACTOR * norms.ns1_se && h.ln() >= mi;
    Outcome::new(
        pass,
        format!(
            "g = {g}, h = {h}, bound {rhs:.4} vs NS1 {:.4} +- {:.4}; ln h = {:.4} >= I = {mi:.4}",
            norms.ns1,
            norms.ns1_se,
            h.ln()
        ),
    )
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"n": 4, "methods": ["cni", "srse", "cpec", "plain"], "noise": "global_depol_first_order",
            "m": 60, "k": 4, "l": [1, 3], "repetitions": 6, "seed": {SEED}, "sweep": [0.0, 0.05, 0.1], "calib_m": 2000}}"#
    ))
    .unwrap();
    let reference = experiment::run(&cfg, Some(1)).unwrap();
    let json = experiment::results_json(&reference.results);
    let csv = experiment::results_csv(&reference.results);
    let mut pass = true;
    for threads in [2usize, 4] {
        let other = experiment::run(&cfg, Some(threads)).unwrap();
        pass &= experiment::results_json(&other.results) == json && experiment::results_csv(&other.results) == csv;
    }
    Outcome::new(pass, format!("results.json ({} bytes) and results.csv identical for 1, 2 and 4 threads", json.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("twirl structure", twirl_structure),
        ("compression soundness", compression_soundness),
        ("z-block comparison algorithms", zblock_algorithms),
        ("Neumann sampler unbiasedness", neumann_unbiasedness),
        ("variance bound and draw averaging", variance_theorem),
        ("single-shot sweep structure", single_shot_sweep),
        ("multi-shot variance ordering", multi_shot_variance),
        ("robust shadow calibration", calibration_sanity),
        ("dependence bound", dependence_bound),
        ("determinism across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!outcome.pass);
        println!("{verdict} {:>2} {name}: {} [{:.2} s]", i + 1, outcome.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
