use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cni_core::compression::{compression_report, CompressionReport};
use cni_core::experiment::{self, ExperimentConfig};
use cni_core::noise::{invert_pauli_channel, Correlation, NoiseFile};
use cni_core::verify::{run_suite, SUITES};
use cni_core::CliffordCircuit;
use serde::Serialize;

const EXIT_INPUT: u8 = 1;
const EXIT_SUITE: u8 = 2;

#[derive(Parser)]
#[command(name = "cni", version, about = "Noise-inverted shadow experiments and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep from a JSON config and write results into a directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a property suite: oracle, compression, twirl, neumann, norms or all.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Invert a circuit's gate noise and report how far compression lowers the overhead.
    Compress {
        /// JSON noise file with `correlation` and per-gate `sites`.
        #[arg(long)]
        noise: PathBuf,
        /// Circuit in the line format (`H 1`, `S 2`, `CNOT 1 2`).
        #[arg(long)]
        circuit: PathBuf,
        /// Register size; inferred from the circuit when omitted.
        #[arg(long)]
        qubits: Option<usize>,
    },
}

#[derive(Serialize)]
struct CompressSummary {
    qubits: usize,
    gates: usize,
    cnots: usize,
    gamma_uncompressed: f64,
    gamma_compressed: f64,
    sites: Vec<CompressionReport>,
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(config: PathBuf, out: PathBuf, seed: Option<u64>, threads: Option<usize>) -> ExitCode {
    let text = match read(&config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    let mut cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if threads == Some(0) {
        return fail(EXIT_INPUT, "--threads must be positive");
    }
    let output = match experiment::run(&cfg, threads) {
        Ok(o) => o,
        Err(e) => return fail(EXIT_INPUT, e),
    };
    if let Err(e) = experiment::write_outputs(&out, &output) {
        return fail(EXIT_INPUT, format!("{}: {e}", out.display()));
    }
    for row in &output.results.rows {
        match (&row.error, row.mean_of_means, row.std_of_means) {
            (Some(err), _, _) => println!("{:<6} L={:<3} p={:<6} error: {err}", row.method.name(), row.l, row.p),
            (None, Some(mean), Some(std)) => {
                println!("{:<6} L={:<3} p={:<6} mean {mean:.5} std {std:.5}", row.method.name(), row.l, row.p)
            }
            _ => {}
        }
    }
    println!("wrote {}", out.display());
    ExitCode::SUCCESS
}

fn verify(suite: &str, seed: u64) -> ExitCode {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut all_ok = true;
    for name in names {
        let reports = match run_suite(name, seed) {
            Ok(r) => r,
            Err(e) => return fail(EXIT_INPUT, e),
        };
        for report in reports {
            println!("{} {report}", if report.ok() { "PASS" } else { "FAIL" });
            all_ok &= report.ok();
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_SUITE)
    }
}

fn compress(noise: PathBuf, circuit: PathBuf, qubits: Option<usize>) -> ExitCode {
    let summary = (|| -> Result<CompressSummary, String> {
        let text = read(&circuit)?;
        let circuit = match qubits {
            Some(n) => CliffordCircuit::parse(n, &text),
            None => CliffordCircuit::parse_infer(&text),
        }
        .map_err(|e| e.to_string())?;
        let file: NoiseFile = serde_json::from_str(&read(&noise)?).map_err(|e| format!("{}: {e}", noise.display()))?;
        let model = file.to_noise(&circuit).map_err(|e| e.to_string())?;
        let before = model.inverse(&circuit, false).map_err(|e| e.to_string())?;
        let after = model.inverse(&circuit, true).map_err(|e| e.to_string())?;
        let mut sites = Vec::new();
        if model.correlation == Correlation::Independent {
            for spec in &model.sites {
                let local = invert_pauli_channel(model.n, &spec.channel(model.n)).map_err(|e| e.to_string())?;
                let pushed = local.propagate(&circuit.tail(spec.gate_index));
                sites.push(compression_report(&pushed).map_err(|e| e.to_string())?);
            }
        }
        Ok(CompressSummary {
            qubits: circuit.n(),
            gates: circuit.len(),
            cnots: circuit.cnot_count(),
            gamma_uncompressed: before.gamma(),
            gamma_compressed: after.gamma(),
            sites,
        })
    })();
    match summary {
        Ok(s) => {
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_INPUT, e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config, out, seed, threads } => run(config, out, seed, threads),
        Command::Verify { suite, seed } => verify(&suite, seed),
        Command::Compress { noise, circuit, qubits } => compress(noise, circuit, qubits),
    }
}
