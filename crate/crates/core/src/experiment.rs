//! Config-driven sweeps over noise strength for the shadow protocols.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::CliffordCircuit;
use crate::clifford::MAX_GLOBAL_CLIFFORD_QUBITS;
use crate::error::{Error, Result};
use crate::pauli::MAX_QUBITS;
use crate::rng::derive_seed;
use crate::shadow::{
    calibrate_srse, run_cni_shadow, run_cpec_shadow, run_plain_shadow, run_srse_calibrated, sampled_circuit, EnsembleSpec,
    NoiseFamily, ShadowSetup,
};
use crate::stabilizer::StabilizerTableau;
use crate::stats;

const CALIBRATION_PATH: u64 = 0xCA1B;

/// A single value or a list of values in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Ghz,
    /// Computational basis state; character `i` is qubit `i + 1`.
    Basis { bits: String },
    /// State prepared from `|0...0>` by a circuit in the text format.
    StabilizerCircuit { circuit: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cni,
    Srse,
    Cpec,
    Plain,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cni => "cni",
            Method::Srse => "srse",
            Method::Cpec => "cpec",
            Method::Plain => "plain",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    LocalBitflip,
    GlobalDepolFirstOrder,
    TerminalDepolarizing,
}

impl NoiseKind {
    pub fn family(&self, p: f64) -> NoiseFamily {
        match self {
            NoiseKind::None => NoiseFamily::None,
            NoiseKind::LocalBitflip => NoiseFamily::LocalBitflip { p },
            NoiseKind::GlobalDepolFirstOrder => NoiseFamily::GlobalDepolFirstOrder { p },
            NoiseKind::TerminalDepolarizing => NoiseFamily::TerminalDepolarizing { p },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Global,
    Local,
}

fn default_one() -> OneOrMany<usize> {
    OneOrMany::One(1)
}

fn default_ensemble() -> Ensemble {
    Ensemble::Global
}

fn default_state() -> StateSpec {
    StateSpec::Ghz
}

/// Experiment description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(default = "default_state")]
    pub state: StateSpec,
    #[serde(alias = "method")]
    pub methods: OneOrMany<Method>,
    pub noise: NoiseKind,
    #[serde(default = "default_ensemble")]
    pub ensemble: Ensemble,
    pub m: usize,
    pub k: usize,
    /// Inversion draws per shot; a list runs CNI once per value.
    #[serde(default = "default_one")]
    pub l: OneOrMany<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub sweep: Vec<f64>,
    /// Calibration rounds for robust shadows; defaults to `320 * m`.
    #[serde(default)]
    pub calib_m: Option<usize>,
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err("$", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.to_vec()
    }

    pub fn l_values(&self) -> Vec<usize> {
        self.l.to_vec()
    }

    pub fn calib_rounds(&self) -> usize {
        self.calib_m.unwrap_or(320 * self.m)
    }

    pub fn spec(&self) -> EnsembleSpec {
        match self.ensemble {
            Ensemble::Global => EnsembleSpec::global(self.n),
            Ensemble::Local => EnsembleSpec::local(self.n),
        }
    }

    pub fn state(&self) -> Result<StabilizerTableau> {
        match &self.state {
            StateSpec::Ghz => Ok(StabilizerTableau::ghz(self.n)),
            StateSpec::Basis { bits } => {
                if bits.len() != self.n {
                    return Err(config_err("state.bits", format!("expected {} characters, found {}", self.n, bits.len())));
                }
                let mut b = 0u64;
                for (i, c) in bits.chars().enumerate() {
                    match c {
                        '0' => {}
                        '1' => b |= 1 << i,
                        _ => return Err(config_err("state.bits", format!("unexpected character {c:?}"))),
                    }
                }
                StabilizerTableau::basis_state(self.n, b)
            }
            StateSpec::StabilizerCircuit { circuit } => {
                let c = CliffordCircuit::parse(self.n, circuit).map_err(|e| config_err("state.circuit", e.to_string()))?;
                Ok(StabilizerTableau::from_circuit(&c))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let limit = match self.ensemble {
            Ensemble::Global => MAX_GLOBAL_CLIFFORD_QUBITS,
            Ensemble::Local => MAX_QUBITS,
        };
        if self.n == 0 || self.n > limit {
            return Err(config_err("n", format!("must be between 1 and {limit} for this ensemble")));
        }
        for (path, v) in [("m", self.m), ("k", self.k), ("repetitions", self.repetitions)] {
            if v == 0 {
                return Err(config_err(path, "must be at least 1"));
            }
        }
        if self.calib_m == Some(0) {
            return Err(config_err("calib_m", "must be at least 1"));
        }
        let ls = self.l_values();
        if ls.is_empty() {
            return Err(config_err("l", "must not be empty"));
        }
        if let Some(i) = ls.iter().position(|&l| l == 0) {
            return Err(config_err(&format!("l[{i}]"), "must be at least 1"));
        }
        let methods = self.methods();
        if methods.is_empty() {
            return Err(config_err("methods", "must not be empty"));
        }
        if methods.contains(&Method::Srse) && self.ensemble != Ensemble::Global {
            return Err(config_err("ensemble", "robust shadow calibration needs the global ensemble"));
        }
        if self.sweep.is_empty() {
            return Err(config_err("sweep", "must not be empty"));
        }
        let upper = match self.noise {
            NoiseKind::TerminalDepolarizing | NoiseKind::None => 1.0,
            NoiseKind::LocalBitflip | NoiseKind::GlobalDepolFirstOrder => 0.5,
        };
        for (i, &p) in self.sweep.iter().enumerate() {
            if !(p.is_finite() && (0.0..upper).contains(&p)) {
                return Err(config_err(&format!("sweep[{i}]"), format!("{p} is outside [0, {upper})")));
            }
        }
        self.state()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Aggregate of one method at one noise strength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub l: usize,
    pub p: f64,
    pub mean_of_means: Option<f64>,
    pub std_of_means: Option<f64>,
    pub per_repetition_means: Vec<f64>,
    /// Per-circuit sample standard deviation within each repetition.
    pub per_repetition_stds: Vec<f64>,
    pub gamma_max: Option<f64>,
    pub r_hat: Option<f64>,
    pub r_se: Option<f64>,
    pub error: Option<String>,
    pub seed: u64,
}

/// Gate counts of the sampled circuits across all repetitions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateStats {
    pub circuits: usize,
    pub mean_gates: f64,
    pub mean_cnots: f64,
    pub max_cnots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub gate_stats: GateStats,
    pub rows: Vec<ResultRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowTiming {
    pub method: Method,
    pub l: usize,
    pub p: f64,
    pub runtime_ms: f64,
}

/// Wall-clock timings; kept apart from results so those stay reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
    pub threads: usize,
    pub rows: Vec<RowTiming>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub results: ResultsFile,
    pub timing: Timing,
}

struct RepOutcome {
    mean: f64,
    std: f64,
    gamma: f64,
    elapsed_ms: f64,
}

fn map_jobs<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<(R, usize)> {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| config_err("threads", e.to_string()))?;
        let used = pool.current_num_threads();
        Ok((pool.install(f), used))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok((f(), 1))
    }
}

/// Seed of repetition `rep`; shared by every method and noise strength.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, &[rep as u64])
}

/// Run every (method, L, p) combination of the config.
pub fn run(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentOutput> {
    config.validate()?;
    let start = Instant::now();
    let spec = config.spec();
    let state = config.state()?;
    let mut entries: Vec<(Method, usize)> = Vec::new();
    for m in config.methods() {
        if m == Method::Cni {
            entries.extend(config.l_values().into_iter().map(|l| (Method::Cni, l)));
        } else if !entries.iter().any(|&(e, _)| e == m) {
            entries.push((m, 1));
        }
    }
    let needs_srse = entries.iter().any(|&(m, _)| m == Method::Srse);
    let calib_seed = derive_seed(config.seed, &[CALIBRATION_PATH]);
    let calib_rounds = config.calib_rounds();

    let body = || {
        let calibrations: Vec<Option<Result<(f64, f64)>>> = map_jobs(&config.sweep, |&p| {
            needs_srse.then(|| calibrate_srse(&spec, &config.noise.family(p), calib_rounds, calib_seed))
        });

        let jobs: Vec<(usize, usize, usize)> = (0..entries.len())
            .flat_map(|e| (0..config.sweep.len()).flat_map(move |pi| (0..config.repetitions).map(move |r| (e, pi, r))))
            .collect();
        let outcomes: Vec<Result<RepOutcome>> = map_jobs(&jobs, |&(e, pi, rep)| {
            let t = Instant::now();
            let (method, l) = entries[e];
            let p = config.sweep[pi];
            let setup = ShadowSetup::fidelity(state.clone(), spec, config.noise.family(p));
            let seed = repetition_seed(config.seed, rep);
            let record = match method {
                Method::Cni => run_cni_shadow(&setup, config.m, config.k, l, seed)?,
                Method::Cpec => run_cpec_shadow(&setup, config.m, config.k, seed)?,
                Method::Plain => run_plain_shadow(&setup, config.m, config.k, seed)?,
                Method::Srse => {
                    let (r, r_se) = match &calibrations[pi] {
                        Some(Ok(c)) => *c,
                        Some(Err(e)) => return Err(e.clone()),
                        None => unreachable!("calibration runs whenever robust shadows are requested"),
                    };
                    run_srse_calibrated(&setup, config.m, config.k, r, r_se, seed)?.estimate
                }
            };
            Ok(RepOutcome {
                mean: record.mean,
                std: stats::std_dev(&record.per_sample),
                gamma: record.gamma_used,
                elapsed_ms: t.elapsed().as_secs_f64() * 1e3,
            })
        });

        let reps: Vec<usize> = (0..config.repetitions).collect();
        let counts: Vec<Result<Vec<(usize, usize)>>> = map_jobs(&reps, |&rep| {
            let seed = repetition_seed(config.seed, rep);
            (0..config.m as u64)
                .map(|i| sampled_circuit(&spec, seed, i).map(|c| (c.len(), c.cnot_count())))
                .collect()
        });
        (calibrations, outcomes, counts)
    };
    let ((calibrations, outcomes, counts), threads_used) = with_threads(threads, body)?;

    let counts: Vec<(usize, usize)> = counts.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let gate_stats = GateStats {
        circuits: counts.len(),
        mean_gates: counts.iter().map(|c| c.0 as f64).sum::<f64>() / counts.len() as f64,
        mean_cnots: counts.iter().map(|c| c.1 as f64).sum::<f64>() / counts.len() as f64,
        max_cnots: counts.iter().map(|c| c.1).max().unwrap_or(0),
    };

    let mut rows = Vec::new();
    let mut timing_rows = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for &(method, l) in &entries {
        for (pi, &p) in config.sweep.iter().enumerate() {
            let chunk: Vec<Result<RepOutcome>> = outcomes.by_ref().take(config.repetitions).collect();
            let runtime_ms = chunk.iter().map(|o| o.as_ref().map_or(0.0, |o| o.elapsed_ms)).sum();
            timing_rows.push(RowTiming { method, l, p, runtime_ms });
            let (r_hat, r_se) = match (method, &calibrations[pi]) {
                (Method::Srse, Some(Ok((r, se)))) => (Some(*r), Some(*se)),
                _ => (None, None),
            };
            let mut row = ResultRow {
                method,
                l,
                p,
                mean_of_means: None,
                std_of_means: None,
                per_repetition_means: Vec::new(),
                per_repetition_stds: Vec::new(),
                gamma_max: None,
                r_hat,
                r_se,
                error: None,
                seed: config.seed,
            };
            match chunk.into_iter().collect::<Result<Vec<_>>>() {
                Ok(done) => {
                    row.per_repetition_means = done.iter().map(|o| o.mean).collect();
                    row.per_repetition_stds = done.iter().map(|o| o.std).collect();
                    row.mean_of_means = Some(stats::mean(&row.per_repetition_means));
                    row.std_of_means = Some(stats::std_dev(&row.per_repetition_means));
                    row.gamma_max = Some(done.iter().map(|o| o.gamma).fold(1.0, f64::max));
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            rows.push(row);
        }
    }
    let results = ResultsFile { config: config.clone(), config_hash: config.hash(), gate_stats, rows };
    let timing = Timing { total_ms: start.elapsed().as_secs_f64() * 1e3, threads: threads_used, rows: timing_rows };
    Ok(ExperimentOutput { results, timing })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One line per (method, L, p).
pub fn results_csv(results: &ResultsFile) -> String {
    let mut out = String::from("method,l,p,repetitions,mean_of_means,std_of_means,gamma_max,r_hat,error\n");
    for r in &results.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.l,
            r.p,
            r.per_repetition_means.len(),
            opt(r.mean_of_means),
            opt(r.std_of_means),
            opt(r.gamma_max),
            opt(r.r_hat),
            csv_field(r.error.as_deref().unwrap_or("")),
        );
    }
    out
}

pub fn results_json(results: &ResultsFile) -> String {
    let mut s = serde_json::to_string_pretty(results).expect("results serialize");
    s.push('\n');
    s
}

/// Write `results.json`, `results.csv` and `timing.json` into `dir`.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.json"), results_json(&output.results))?;
    std::fs::write(dir.join("results.csv"), results_csv(&output.results))?;
    let mut timing = serde_json::to_string_pretty(&output.timing).expect("timing serializes");
    timing.push('\n');
    std::fs::write(dir.join("timing.json"), timing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"n": 3, "methods": {methods}, "noise": "local_bitflip", "m": 20, "k": 2,
                "l": [1, 3], "repetitions": 3, "seed": 11, "sweep": [0.0, 0.1], "calib_m": 200}}"#
        ))
        .unwrap()
    }

    #[test]
    fn parses_defaults_and_aliases() {
        let cfg = ExperimentConfig::from_json(
            r#"{"n": 2, "method": "plain", "noise": "none", "m": 1, "k": 1, "repetitions": 1, "seed": 0, "sweep": [0]}"#,
        )
        .unwrap();
        assert_eq!(cfg.methods(), vec![Method::Plain]);
        assert_eq!(cfg.l_values(), vec![1]);
        assert_eq!(cfg.state, StateSpec::Ghz);
        assert_eq!(cfg.calib_rounds(), 320);
    }

    #[test]
    fn invalid_fields_name_their_path() {
        let base = r#""n": 2, "method": "cni", "noise": "local_bitflip", "k": 1, "repetitions": 1, "seed": 0"#;
        let cases = [
            (format!(r#"{{{base}, "m": 0, "sweep": [0.1]}}"#), "m"),
            (format!(r#"{{{base}, "m": 1, "sweep": []}}"#), "sweep"),
            (format!(r#"{{{base}, "m": 1, "sweep": [0.5]}}"#), "sweep[0]"),
            (format!(r#"{{{base}, "m": 1, "sweep": [0.1], "l": [1, 0]}}"#), "l[1]"),
            (format!(r#"{{{base}, "m": 1, "sweep": [0.1], "state": {{"kind": "basis", "bits": "0"}}}}"#), "state.bits"),
        ];
        for (text, want) in cases {
            match ExperimentConfig::from_json(&text) {
                Err(Error::Config { path, .. }) => assert_eq!(path, want),
                other => panic!("expected config error at {want}, got {other:?}"),
            }
        }
        let local_srse = r#"{"n": 2, "method": "srse", "noise": "none", "ensemble": "local", "m": 1, "k": 1,
            "repetitions": 1, "seed": 0, "sweep": [0]}"#;
        assert!(matches!(ExperimentConfig::from_json(local_srse), Err(Error::Config { .. })));
    }

    #[test]
    fn std_of_means_is_recomputable() {
        let out = run(&small(r#"["cni", "plain"]"#), Some(1)).unwrap();
        assert_eq!(out.results.rows.len(), 6);
        for row in &out.results.rows {
            assert_eq!(row.std_of_means, Some(stats::std_dev(&row.per_repetition_means)));
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = small(r#"["cni", "srse", "cpec"]"#);
        let a = run(&cfg, Some(1)).unwrap();
        let b = run(&cfg, Some(3)).unwrap();
        assert_eq!(results_json(&a.results), results_json(&b.results));
        assert_eq!(results_csv(&a.results), results_csv(&b.results));
    }

}
