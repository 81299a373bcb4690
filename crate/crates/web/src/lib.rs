//! Browser demo: PTM twirling heatmaps, a small shadow-estimation sweep and a
//! compression explorer. Every export returns a JSON string for the page script.

use cni_core::clifford::random_clifford;
use cni_core::compression::compress;
use cni_core::estimator::EstimateRecord;
use cni_core::noise::{invert_pauli_channel, CircuitNoise};
use cni_core::ptm::dense::KrausChannel;
use cni_core::ptm::{Ptm, TwirlSet};
use cni_core::rng::{derive_seed, stream};
use cni_core::shadow::{
    calibrate_srse, run_cni_shadow, run_plain_shadow, run_srse_calibrated, EnsembleSpec, NoiseFamily, ShadowSetup,
};
use cni_core::stabilizer::StabilizerTableau;
use cni_core::stats;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_SWEEP_POINTS: usize = 11;
const MAX_SHADOW_WORK: usize = 400_000;

#[derive(Serialize)]
pub struct TwirlView {
    pub labels: Vec<String>,
    pub original: Vec<Vec<f64>>,
    pub twirled: Vec<Vec<f64>>,
    pub propagable: bool,
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub method: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Serialize)]
pub struct SiteGamma {
    pub gate_index: usize,
    pub gamma: f64,
    pub gamma_compressed: f64,
    pub terms: usize,
    pub terms_compressed: usize,
}

#[derive(Serialize)]
pub struct CompressionView {
    pub circuit: String,
    pub cnots: usize,
    pub sites: Vec<SiteGamma>,
    pub gamma: f64,
    pub gamma_compressed: f64,
}

fn rows(ptm: &Ptm) -> Vec<Vec<f64>> {
    let m = ptm.matrix();
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("view serializes")
}

/// PTM of a random channel before and after averaging over `set` ("z", "x" or "pauli").
pub fn twirl_view(qubits: usize, set: &str, seed: u64) -> Result<TwirlView, String> {
    if !(1..=2).contains(&qubits) {
        return Err("the heatmap supports one or two qubits".into());
    }
    let set = match set {
        "z" => TwirlSet::Z,
        "x" => TwirlSet::X,
        "pauli" => TwirlSet::Pauli,
        other => return Err(format!("unknown twirl set {other:?}")),
    };
    let mut rng = stream(seed, &[]);
    let original = Ptm::of_kraus(&KrausChannel::random(qubits, 2, &mut rng)).map_err(|e| e.to_string())?;
    let twirled = original.twirl_exact(set);
    let labels = (0..original.dim()).map(|i| cni_core::ptm::index_pauli(qubits, i).to_string()).collect();
    Ok(TwirlView { labels, original: rows(&original), twirled: rows(&twirled), propagable: twirled.check_propagable(0.0) })
}

fn summarize(p: f64, method: &str, reps: &[EstimateRecord]) -> SweepPoint {
    let means: Vec<f64> = reps.iter().map(|r| r.mean).collect();
    SweepPoint { p, method: method.into(), mean: stats::mean(&means), std: stats::std_dev(&means) }
}

/// GHZ fidelity estimates with plain, robust and noise-inverted shadows over a noise sweep.
pub fn shadow_sweep(
    qubits: usize,
    noise: &str,
    p_max: f64,
    points: usize,
    m: usize,
    repetitions: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, String> {
    if !(2..=5).contains(&qubits) {
        return Err("choose between 2 and 5 qubits".into());
    }
    if !(2..=MAX_SWEEP_POINTS).contains(&points) || m == 0 || repetitions < 2 {
        return Err(format!("need 2..={MAX_SWEEP_POINTS} points, M >= 1 and at least 2 repetitions"));
    }
    if points * m * repetitions > MAX_SHADOW_WORK {
        return Err(format!("points x M x repetitions must stay below {MAX_SHADOW_WORK}"));
    }
    if !(0.0..0.5).contains(&p_max) {
        return Err("p must lie in [0, 0.5)".into());
    }
    let spec = EnsembleSpec::global(qubits);
    let mut out = Vec::new();
    for i in 0..points {
        let p = p_max * i as f64 / (points - 1) as f64;
        let family = match noise {
            "local_bitflip" => NoiseFamily::LocalBitflip { p },
            "global_depol_first_order" => NoiseFamily::GlobalDepolFirstOrder { p },
            other => return Err(format!("unknown noise model {other:?}")),
        };
        let setup = ShadowSetup::fidelity(StabilizerTableau::ghz(qubits), spec, family.clone());
        let (r, r_se) = calibrate_srse(&spec, &family, 20 * m, derive_seed(seed, &[0xCA1B])).map_err(|e| e.to_string())?;
        let (mut plain, mut cni, mut srse) = (Vec::new(), Vec::new(), Vec::new());
        for rep in 0..repetitions {
            let s = derive_seed(seed, &[rep as u64]);
            plain.push(run_plain_shadow(&setup, m, 1, s).map_err(|e| e.to_string())?);
            cni.push(run_cni_shadow(&setup, m, 1, 1, s).map_err(|e| e.to_string())?);
            srse.push(run_srse_calibrated(&setup, m, 1, r, r_se, s).map_err(|e| e.to_string())?.estimate);
        }
        out.push(summarize(p, "plain", &plain));
        out.push(summarize(p, "srse", &srse));
        out.push(summarize(p, "cni", &cni));
    }
    Ok(out)
}

/// Bit-flip noise after every CNOT of a random Clifford: per-site overhead before and
/// after compression.
pub fn compression_view(qubits: usize, p: f64, seed: u64) -> Result<CompressionView, String> {
    if !(1..=6).contains(&qubits) {
        return Err("choose between 1 and 6 qubits".into());
    }
    let mut rng = stream(seed, &[]);
    let circuit = random_clifford(qubits, &mut rng).map_err(|e| e.to_string())?;
    let noise = CircuitNoise::local_bitflip(&circuit, p).map_err(|e| e.to_string())?;
    let mut sites = Vec::new();
    for spec in &noise.sites {
        let pushed = invert_pauli_channel(qubits, &spec.channel(qubits))
            .map_err(|e| e.to_string())?
            .propagate(&circuit.tail(spec.gate_index));
        let compressed = compress(&pushed).map_err(|e| e.to_string())?;
        sites.push(SiteGamma {
            gate_index: spec.gate_index,
            gamma: pushed.gamma(),
            gamma_compressed: compressed.gamma(),
            terms: pushed.len(),
            terms_compressed: compressed.len(),
        });
    }
    Ok(CompressionView {
        circuit: circuit.to_string(),
        cnots: circuit.cnot_count(),
        gamma: sites.iter().map(|s| s.gamma).product(),
        gamma_compressed: sites.iter().map(|s| s.gamma_compressed).product(),
        sites,
    })
}

#[wasm_bindgen]
pub fn twirl_heatmap(qubits: usize, set: &str, seed: u32) -> Result<String, JsValue> {
    twirl_view(qubits, set, u64::from(seed)).map(|v| to_json(&v)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fidelity_sweep(
    qubits: usize,
    noise: &str,
    p_max: f64,
    points: usize,
    m: usize,
    repetitions: usize,
    seed: u32,
) -> Result<String, JsValue> {
    shadow_sweep(qubits, noise, p_max, points, m, repetitions, u64::from(seed))
        .map(|v| to_json(&v))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compression_explorer(qubits: usize, p: f64, seed: u32) -> Result<String, JsValue> {
    compression_view(qubits, p, u64::from(seed)).map(|v| to_json(&v)).map_err(|e| JsValue::from_str(&e))
}
