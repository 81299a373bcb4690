//! Noise-inverted expectation values for a fixed Clifford circuit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::BasisChannel;
use crate::circuit::CliffordCircuit;
use crate::error::{Error, Result};
use crate::noise::{CircuitNoise, InverseSampler};
use crate::rng::stream;
use crate::stabilizer::{overlap_magnitude, BasisSupport, StabilizerTableau, TraceFactor};
use crate::stats;

/// Largest register for a tabulated diagonal observable.
pub const MAX_DIAGONAL_QUBITS: usize = 24;

/// Observable read out after a computational-basis measurement.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableF {
    /// Diagonal `F = sum_b f(b) |b><b|`, tabulated.
    Diagonal { n: usize, values: Vec<f64> },
    /// Projector onto a pure stabilizer state.
    Projector { state: StabilizerTableau, support: BasisSupport },
}

impl ObservableF {
    pub fn diagonal(n: usize, f: impl Fn(u64) -> f64) -> Result<Self> {
        if n > MAX_DIAGONAL_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_DIAGONAL_QUBITS));
        }
        Ok(ObservableF::Diagonal { n, values: (0..1u64 << n).map(f).collect() })
    }

    /// The projector `|b><b|`.
    pub fn basis_projector(n: usize, b: u64) -> Result<Self> {
        Self::diagonal(n, |x| if x == b { 1.0 } else { 0.0 })
    }

    pub fn projector(state: StabilizerTableau) -> Result<Self> {
        if state.trace_factor() != TraceFactor::ONE {
            return Err(Error::Unsupported("projector target must be a normalized state".into()));
        }
        let support = state.basis_support()?;
        Ok(ObservableF::Projector { state, support })
    }

    pub fn n(&self) -> usize {
        match self {
            ObservableF::Diagonal { n, .. } => *n,
            ObservableF::Projector { state, .. } => state.n(),
        }
    }

    /// `<<F|b>>` for a computational basis state.
    pub fn on_basis(&self, b: u64) -> f64 {
        match self {
            ObservableF::Diagonal { values, .. } => values[b as usize],
            ObservableF::Projector { support, .. } => support.probability(b),
        }
    }

    /// `Tr(F sigma)` for an unnormalized stabilizer state.
    pub fn on_state(&self, sigma: &StabilizerTableau) -> Result<f64> {
        if sigma.trace_factor().is_zero() {
            return Ok(0.0);
        }
        match self {
            ObservableF::Diagonal { values, .. } => {
                let support = sigma.basis_support()?;
                Ok(support.members().into_iter().map(|m| values[m as usize] * support.probability(m)).sum())
            }
            ObservableF::Projector { state, .. } => {
                let g = sigma.trace_factor().value();
                let mut normalized = sigma.clone();
                normalized.set_trace_factor(TraceFactor::ONE);
                Ok(g * overlap_magnitude(&normalized, state)?)
            }
        }
    }

    /// `<<F|B|b>>`.
    pub fn eval(&self, b_channel: &BasisChannel, b: u64) -> Result<f64> {
        if let Some(p) = b_channel.as_pauli() {
            return Ok(self.on_basis(b ^ p.x_mask()));
        }
        self.on_state(&b_channel.on_basis_state(b)?)
    }
}

/// Result of a Monte-Carlo estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub mean: f64,
    pub per_sample: Vec<f64>,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub gamma_used: f64,
    pub seed: u64,
}

impl EstimateRecord {
    pub fn new(per_sample: Vec<f64>, k: usize, l: usize, m: usize, gamma_used: f64, seed: u64) -> Self {
        Self { mean: stats::mean(&per_sample), per_sample, k, l, m, gamma_used, seed }
    }

    pub fn variance(&self) -> f64 {
        stats::variance(&self.per_sample)
    }

    pub fn std_err(&self) -> f64 {
        stats::std_err(&self.per_sample)
    }
}

/// One inversion draw applied to an observed outcome.
pub fn cni_single<R: Rng + ?Sized>(b: u64, d: &InverseSampler, f: &ObservableF, rng: &mut R) -> Result<f64> {
    if d.is_pauli() {
        let (w, p) = d.sample_pauli(rng)?;
        return Ok(w * f.on_basis(b ^ p.x_mask()));
    }
    let (w, ch) = d.sample(rng)?;
    Ok(w * f.eval(&ch, b)?)
}

fn check_dims(circuit: &CliffordCircuit, input: &StabilizerTableau, noise: &CircuitNoise, f: &ObservableF) -> Result<()> {
    for found in [input.n(), noise.n, f.n()] {
        if found != circuit.n() {
            return Err(Error::DimensionMismatch { expected: circuit.n(), found });
        }
    }
    Ok(())
}

fn ideal_support(circuit: &CliffordCircuit, input: &StabilizerTableau) -> Result<BasisSupport> {
    let mut t = input.clone();
    t.apply_circuit(circuit);
    t.basis_support()
}

/// Noisy execution with `K` shots and `L` classical inversion draws per shot.
///
/// `per_sample` holds the per-shot averages over the `L` draws.
pub fn cni_run(
    circuit: &CliffordCircuit,
    input: &StabilizerTableau,
    noise: &CircuitNoise,
    f: &ObservableF,
    k: usize,
    l: usize,
    seed: u64,
) -> Result<EstimateRecord> {
    check_dims(circuit, input, noise, f)?;
    if k == 0 || l == 0 {
        return Err(Error::Unsupported("K and L must be positive".into()));
    }
    let support = ideal_support(circuit, input)?;
    let hardware = noise.hardware(circuit)?;
    let inverse = noise.inverse(circuit, true)?;
    let mut per_sample = Vec::with_capacity(k);
    for shot in 0..k {
        let mut rng = stream(seed, &[shot as u64]);
        let b = support.sample(&mut rng) ^ hardware.sample_flip(&mut rng);
        let mut acc = 0.0;
        for _ in 0..l {
            acc += cni_single(b, &inverse, f, &mut rng)?;
        }
        per_sample.push(acc / l as f64);
    }
    Ok(EstimateRecord::new(per_sample, k, l, 1, inverse.gamma(), seed))
}

/// Conventional cancellation: each of `M` circuits carries one inserted inverse draw and
/// is measured `K` times. `per_sample` holds the per-circuit estimates.
pub fn cpec_run(
    circuit: &CliffordCircuit,
    input: &StabilizerTableau,
    noise: &CircuitNoise,
    f: &ObservableF,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<EstimateRecord> {
    check_dims(circuit, input, noise, f)?;
    if k == 0 || m == 0 {
        return Err(Error::Unsupported("M and K must be positive".into()));
    }
    let support = ideal_support(circuit, input)?;
    let hardware = noise.hardware(circuit)?;
    let inverse = noise.inverse(circuit, false)?;
    let mut per_sample = Vec::with_capacity(m);
    for idx in 0..m {
        let mut rng = stream(seed, &[idx as u64]);
        let (w, ch) = inverse.sample(&mut rng)?;
        let mut acc = 0.0;
        if let Some(p) = ch.as_pauli() {
            for _ in 0..k {
                let b = support.sample(&mut rng) ^ hardware.sample_flip(&mut rng) ^ p.x_mask();
                acc += f.on_basis(b);
            }
        } else {
            for _ in 0..k {
                let b = support.sample(&mut rng) ^ hardware.sample_flip(&mut rng);
                let mut t = StabilizerTableau::basis_state(circuit.n(), b)?;
                ch.apply_to(&mut t);
                if t.trace_factor().is_zero() {
                    continue;
                }
                let g = t.trace_factor().value();
                let out = t.basis_support()?;
                acc += g * f.on_basis(out.sample(&mut rng));
            }
        }
        per_sample.push(w * acc / k as f64);
    }
    Ok(EstimateRecord::new(per_sample, k, 1, m, inverse.gamma(), seed))
}

/// Squared semi-norms at a fixed input state, with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub star_sq: f64,
    pub star_se: f64,
    pub circ_sq: f64,
    pub circ_se: f64,
}

impl SeminormEstimate {
    pub fn norm_star(&self) -> f64 {
        self.star_sq.max(0.0).sqrt()
    }

    pub fn norm_circ(&self) -> f64 {
        self.circ_sq.max(0.0).sqrt()
    }
}

/// Monte-Carlo estimates of `E[<<F|B|b>>^2]` and `E_b[(E_B[sgn <<F|B|b>>])^2]`.
///
/// The inner expectation is squared with two independent draws per outcome.
pub fn estimate_seminorms(
    f: &ObservableF,
    circuit: &CliffordCircuit,
    noise: &CircuitNoise,
    input: &StabilizerTableau,
    samples: usize,
    seed: u64,
) -> Result<SeminormEstimate> {
    check_dims(circuit, input, noise, f)?;
    let support = ideal_support(circuit, input)?;
    let hardware = noise.hardware(circuit)?;
    let inverse = noise.inverse(circuit, true)?;
    let gamma = inverse.gamma();
    let mut star = Vec::with_capacity(samples);
    let mut circ = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut rng = stream(seed, &[s as u64]);
        let b = support.sample(&mut rng) ^ hardware.sample_flip(&mut rng);
        let x1 = cni_single(b, &inverse, f, &mut rng)? / gamma;
        let x2 = cni_single(b, &inverse, f, &mut rng)? / gamma;
        star.push(x1 * x1);
        circ.push(x1 * x2);
    }
    Ok(SeminormEstimate {
        star_sq: stats::mean(&star),
        star_se: stats::std_err(&star),
        circ_sq: stats::mean(&circ),
        circ_se: stats::std_err(&circ),
    })
}

/// Upper bound on the variance of the `K`-shot, `L`-draw estimator.
pub fn variance_bound(gamma_prime: f64, k: usize, l: usize, norm_star: f64, norm_circ: f64) -> f64 {
    let (k, l) = (k as f64, l as f64);
    gamma_prime * gamma_prime / k * (norm_star * norm_star / l + (1.0 - 1.0 / l) * norm_circ * norm_circ)
}
