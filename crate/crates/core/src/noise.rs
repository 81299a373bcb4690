//! Gate noise, quasi-probability inverses and Neumann-series sampling.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{decompose, BasisChannel, MAX_DECOMPOSE_QUBITS};
use crate::circuit::CliffordCircuit;
use crate::compression::{compress, compress_global};
use crate::error::{Error, Result};
use crate::pauli::{low_mask, PauliString};
use crate::ptm::{Ptm, MAX_PTM_QUBITS};
use crate::stabilizer::StabilizerTableau;

/// Coefficients below this magnitude are treated as exact zeros.
pub const ZERO_COEFF: f64 = 1e-13;

/// Deepest Neumann-series order the sampler will return.
pub const NEUMANN_CAP: usize = 64;

/// Largest Pauli-channel support handled by the Walsh-Hadamard inversion.
pub const MAX_INVERSION_SUPPORT: usize = 10;

/// A channel written as `sum_i q_i B_i` with simulable basis channels `B_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiProbDecomposition {
    n: usize,
    terms: Vec<(BasisChannel, f64)>,
    cumulative: Vec<f64>,
    gamma: f64,
}

impl QuasiProbDecomposition {
    pub fn new(n: usize, terms: Vec<(BasisChannel, f64)>) -> Result<Self> {
        if let Some((c, _)) = terms.iter().find(|(c, _)| c.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.n() });
        }
        if terms.iter().any(|(_, q)| !q.is_finite()) {
            return Err(Error::InvalidNoise("non-finite quasi-probability".into()));
        }
        let terms: Vec<(BasisChannel, f64)> = terms.into_iter().filter(|(_, q)| q.abs() > ZERO_COEFF).collect();
        let gamma: f64 = terms.iter().map(|(_, q)| q.abs()).sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = terms
            .iter()
            .map(|(_, q)| {
                acc += q.abs() / gamma;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self { n, terms, cumulative, gamma })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, vec![(BasisChannel::identity(n), 1.0)]).expect("identity term")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(BasisChannel, f64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of absolute coefficients.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.terms[i].1.abs() / self.gamma
    }

    pub fn is_pauli(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.as_pauli().is_some())
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= u).min(self.terms.len() - 1)
    }

    /// One draw `B ~ |q_B| / gamma` with its importance weight `gamma * sgn(q_B)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, &BasisChannel) {
        let i = self.sample_index(rng);
        let (c, q) = &self.terms[i];
        (self.gamma * q.signum(), c)
    }

    pub fn propagate(&self, tail: &CliffordCircuit) -> Self {
        let terms = self.terms.iter().map(|(c, q)| (c.propagate(tail), *q)).collect();
        Self::new(self.n, terms).expect("propagation keeps dimensions")
    }

    pub fn ptm(&self) -> Result<Ptm> {
        let ptms = self.terms.iter().map(|(c, _)| c.ptm()).collect::<Result<Vec<_>>>()?;
        let refs: Vec<(f64, &Ptm)> = self.terms.iter().zip(&ptms).map(|((_, q), p)| (*q, p)).collect();
        Ptm::linear_combination(self.n, &refs)
    }
}

fn pext(word: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    for q in 0..64 {
        if (mask >> q) & 1 == 1 {
            out |= ((word >> q) & 1) << k;
            k += 1;
        }
    }
    out
}

fn pdep(word: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut k = 0;
    for q in 0..64 {
        if (mask >> q) & 1 == 1 {
            out |= ((word >> k) & 1) << q;
            k += 1;
        }
    }
    out
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Pauli eigenvalues `lambda_sigma` of the Pauli channel `sum_P c_P P . P`, indexed
/// over the support qubits.
fn pauli_eigenvalues(k: usize, coeffs: &[f64]) -> Vec<f64> {
    let mut v = coeffs.to_vec();
    walsh_hadamard(&mut v);
    let swap = |idx: usize| (idx >> k) | ((idx & ((1 << k) - 1)) << k);
    (0..v.len()).map(|s| v[swap(s)]).collect()
}

/// Exact inverse of a Pauli channel as a signed Pauli mixture.
pub fn invert_pauli_channel(n: usize, channel: &[(PauliString, f64)]) -> Result<QuasiProbDecomposition> {
    if let Some((p, _)) = channel.iter().find(|(p, _)| p.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.n() });
    }
    let support = channel.iter().filter(|(_, c)| *c != 0.0).fold(0u64, |acc, (p, _)| acc | p.support());
    let k = support.count_ones() as usize;
    if k > MAX_INVERSION_SUPPORT {
        return Err(Error::TooManyQubits(k, MAX_INVERSION_SUPPORT));
    }
    let size = 1usize << (2 * k);
    let mut coeffs = vec![0.0; size];
    for (p, c) in channel {
        let idx = pext(p.z_mask(), support) as usize | ((pext(p.x_mask(), support) as usize) << k);
        coeffs[idx] += c;
    }
    let lambdas = pauli_eigenvalues(k, &coeffs);
    if let Some(&l) = lambdas.iter().find(|l| l.abs() < 1e-12) {
        return Err(Error::SingularChannel(l));
    }
    let recips: Vec<f64> = lambdas.iter().map(|l| 1.0 / l).collect();
    let q = pauli_eigenvalues(k, &recips);
    let scale = 1.0 / size as f64;
    let terms = q
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let z = pdep((idx & ((1 << k) - 1)) as u64, support);
            let x = pdep((idx >> k) as u64, support);
            (BasisChannel::pauli(PauliString::new(n, false, z, x).expect("support within register")), v * scale)
        })
        .collect();
    QuasiProbDecomposition::new(n, terms)
}

/// Inverse of an arbitrary small channel over the universal basis.
pub fn invert_channel(ptm: &Ptm) -> Result<QuasiProbDecomposition> {
    if ptm.n() > MAX_DECOMPOSE_QUBITS {
        return Err(Error::TooManyQubits(ptm.n(), MAX_DECOMPOSE_QUBITS));
    }
    let inv = ptm.inverse()?;
    QuasiProbDecomposition::new(ptm.n(), decompose(&inv)?)
}

/// One non-identity term of a global noise model `eta (Pr(I) I + sum_B +-Pr(B) B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseTerm {
    pub channel: BasisChannel,
    pub prob: f64,
    pub negative: bool,
}

impl NoiseTerm {
    pub fn signed_prob(&self) -> f64 {
        if self.negative {
            -self.prob
        } else {
            self.prob
        }
    }
}

/// End-of-circuit noise `E = eta (Pr(I) I + sum_B sgn_B Pr(B) B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalNoiseModel {
    n: usize,
    eta: f64,
    pr_identity: f64,
    terms: Vec<NoiseTerm>,
    cumulative: Vec<f64>,
    pr_noise: f64,
}

impl GlobalNoiseModel {
    pub fn new(n: usize, eta: f64, pr_identity: f64, terms: Vec<NoiseTerm>) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidNoise(format!("eta must be positive, got {eta}")));
        }
        if pr_identity < 0.0 || terms.iter().any(|t| t.prob < 0.0 || !t.prob.is_finite()) {
            return Err(Error::InvalidNoise("probabilities must be non-negative".into()));
        }
        if let Some(t) = terms.iter().find(|t| t.channel.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: t.channel.n() });
        }
        let terms: Vec<NoiseTerm> = terms.into_iter().filter(|t| t.prob > 0.0).collect();
        let pr_noise: f64 = terms.iter().map(|t| t.prob).sum();
        if (pr_identity + pr_noise - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNoise(format!("probabilities sum to {}", pr_identity + pr_noise)));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = terms
            .iter()
            .map(|t| {
                acc += t.prob / pr_noise;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self { n, eta, pr_identity, terms, cumulative, pr_noise })
    }

    pub fn noiseless(n: usize) -> Self {
        Self::new(n, 1.0, 1.0, Vec::new()).expect("trivial model")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn pr_identity(&self) -> f64 {
        self.pr_identity
    }

    pub fn pr_noise(&self) -> f64 {
        self.pr_noise
    }

    pub fn terms(&self) -> &[NoiseTerm] {
        &self.terms
    }

    pub fn is_invertible(&self) -> bool {
        self.pr_identity > self.pr_noise
    }

    /// Sampling overhead of the Neumann-series inverse.
    pub fn gamma(&self) -> Result<f64> {
        if !self.is_invertible() {
            return Err(Error::NotInvertible { pr_identity: self.pr_identity, pr_noise: self.pr_noise });
        }
        Ok(1.0 / (self.eta * (self.pr_identity - self.pr_noise)))
    }

    pub fn ptm(&self) -> Result<Ptm> {
        let ptms = self.terms.iter().map(|t| t.channel.ptm()).collect::<Result<Vec<_>>>()?;
        let id = Ptm::identity(self.n)?;
        let mut refs: Vec<(f64, &Ptm)> = vec![(self.eta * self.pr_identity, &id)];
        refs.extend(self.terms.iter().zip(&ptms).map(|(t, p)| (self.eta * t.signed_prob(), p)));
        Ptm::linear_combination(self.n, &refs)
    }

    fn sample_term<R: Rng + ?Sized>(&self, rng: &mut R) -> &NoiseTerm {
        let u: f64 = rng.gen();
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.terms.len() - 1);
        &self.terms[i]
    }

    fn sample_order<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.gamma()?;
        if self.pr_noise == 0.0 {
            return Ok(0);
        }
        let r = self.pr_noise / self.pr_identity;
        let u: f64 = rng.gen();
        let l = ((1.0 - u).ln() / r.ln()).floor();
        if l > NEUMANN_CAP as f64 {
            return Err(Error::NeumannCapExceeded(NEUMANN_CAP));
        }
        Ok(l as usize)
    }

    /// One draw from the Neumann-series inverse with its importance weight.
    pub fn neumann_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, BasisChannel)> {
        let l = self.sample_order(rng)?;
        let mut negative = l % 2 == 1;
        let mut channel = BasisChannel::identity(self.n);
        for _ in 0..l {
            let t = self.sample_term(rng);
            negative ^= t.negative;
            channel = channel.then(&t.channel);
        }
        let w = self.gamma()?;
        Ok((if negative { -w } else { w }, channel))
    }

    pub fn is_pauli(&self) -> bool {
        self.terms.iter().all(|t| t.channel.as_pauli().is_some())
    }

    /// Pauli-only fast path returning the composed Pauli.
    pub fn neumann_sample_pauli<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, PauliString)> {
        let l = self.sample_order(rng)?;
        let mut negative = l % 2 == 1;
        let mut acc = PauliString::identity(self.n);
        for _ in 0..l {
            let t = self.sample_term(rng);
            negative ^= t.negative;
            let p = t.channel.as_pauli().ok_or_else(|| Error::Unsupported("non-Pauli term".into()))?;
            acc = acc.mul(&p).1;
        }
        let w = self.gamma()?;
        Ok((if negative { -w } else { w }, acc.unsigned()))
    }
}

/// Pauli faults injected after a given number of executed gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateNoiseSpec {
    pub gate_index: usize,
    /// Non-identity faults on the full register with their probabilities.
    pub faults: Vec<(PauliString, f64)>,
}

impl GateNoiseSpec {
    pub fn rate(&self) -> f64 {
        self.faults.iter().map(|(_, p)| p).sum()
    }

    /// The full Pauli channel including its identity term.
    pub fn channel(&self, n: usize) -> Vec<(PauliString, f64)> {
        let mut out = vec![(PauliString::identity(n), 1.0 - self.rate())];
        out.extend(self.faults.iter().copied());
        out
    }

    fn validate(&self, n: usize, circuit_len: usize) -> Result<()> {
        if self.gate_index > circuit_len {
            return Err(Error::InvalidNoise(format!(
                "fault after gate {} but the circuit has {circuit_len} gates",
                self.gate_index
            )));
        }
        for (p, q) in &self.faults {
            if p.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: p.n() });
            }
            if p.is_identity() {
                return Err(Error::InvalidNoise("identity listed as a fault".into()));
            }
            if !(*q >= 0.0 && q.is_finite()) {
                return Err(Error::InvalidNoise(format!("fault probability {q}")));
            }
        }
        if self.rate() > 1.0 + 1e-12 {
            return Err(Error::InvalidNoise(format!("fault rate {} exceeds one", self.rate())));
        }
        Ok(())
    }
}

/// How the per-gate fault sites combine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correlation {
    /// Every site draws its own fault.
    Independent,
    /// At most one fault per circuit run, drawn across all sites.
    SingleFault,
}

/// Noise attached to one Clifford circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitNoise {
    pub n: usize,
    pub correlation: Correlation,
    pub sites: Vec<GateNoiseSpec>,
}

const TWO_QUBIT_LETTERS: [(u64, u64); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

impl CircuitNoise {
    pub fn none(n: usize) -> Self {
        Self { n, correlation: Correlation::Independent, sites: Vec::new() }
    }

    pub fn new(n: usize, correlation: Correlation, sites: Vec<GateNoiseSpec>, circuit: &CliffordCircuit) -> Result<Self> {
        if circuit.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: circuit.n() });
        }
        for s in &sites {
            s.validate(n, circuit.len())?;
        }
        let noise = Self { n, correlation, sites };
        if correlation == Correlation::SingleFault && noise.total_rate() >= 1.0 {
            return Err(Error::InvalidNoise(format!("total fault rate {} is not below one", noise.total_rate())));
        }
        Ok(noise)
    }

    /// `XX` flip with probability `p` after every CNOT, independently.
    pub fn local_bitflip(circuit: &CliffordCircuit, p: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::InvalidNoise(format!("bit-flip probability {p} outside [0, 0.5)")));
        }
        let n = circuit.n();
        let sites = circuit
            .cnot_positions()
            .into_iter()
            .map(|i| {
                let (c, t) = circuit.gates()[i].qubits();
                let mask = (1u64 << c) | (1u64 << t.expect("two-qubit gate"));
                GateNoiseSpec { gate_index: i + 1, faults: vec![(PauliString::new(n, false, 0, mask).expect("mask"), p)] }
            })
            .collect();
        Self::new(n, Correlation::Independent, sites, circuit)
    }

    /// Two-qubit depolarizing faults after each CNOT, truncated to at most one fault per
    /// circuit. `p_total` is the probability that the circuit suffers a fault.
    pub fn global_depolarizing_first_order(circuit: &CliffordCircuit, p_total: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&p_total) {
            return Err(Error::InvalidNoise(format!("total fault rate {p_total} outside [0, 0.5)")));
        }
        let n = circuit.n();
        let positions = circuit.cnot_positions();
        if positions.is_empty() || p_total == 0.0 {
            return Ok(Self { n, correlation: Correlation::SingleFault, sites: Vec::new() });
        }
        let each = p_total / (15.0 * positions.len() as f64);
        let sites = positions
            .into_iter()
            .map(|i| {
                let (c, t) = circuit.gates()[i].qubits();
                let t = t.expect("two-qubit gate");
                let mut faults = Vec::with_capacity(15);
                for (zc, xc) in TWO_QUBIT_LETTERS {
                    for (zt, xt) in TWO_QUBIT_LETTERS {
                        if zc | xc | zt | xt == 0 {
                            continue;
                        }
                        let z = (zc << c) | (zt << t);
                        let x = (xc << c) | (xt << t);
                        faults.push((PauliString::new(n, false, z, x).expect("mask"), each));
                    }
                }
                GateNoiseSpec { gate_index: i + 1, faults }
            })
            .collect();
        Self::new(n, Correlation::SingleFault, sites, circuit)
    }

    /// Append gate-independent depolarizing noise `(1 - p) rho + p I/d` at the end of the circuit.
    pub fn with_terminal_depolarizing(mut self, circuit: &CliffordCircuit, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidNoise(format!("depolarizing strength {p} outside [0, 1)")));
        }
        if p == 0.0 {
            return Ok(self);
        }
        let n = self.n;
        if n > MAX_INVERSION_SUPPORT / 2 {
            return Err(Error::TooManyQubits(n, MAX_INVERSION_SUPPORT / 2));
        }
        let each = p / (1u64 << (2 * n)) as f64;
        let faults = (1..(1u64 << (2 * n)))
            .map(|i| (PauliString::new(n, false, i & low_mask(n), i >> n).expect("mask"), each))
            .collect();
        self.sites.push(GateNoiseSpec { gate_index: circuit.len(), faults });
        Self::new(n, self.correlation, self.sites, circuit)
    }

    pub fn total_rate(&self) -> f64 {
        self.sites.iter().map(GateNoiseSpec::rate).sum()
    }

    pub fn is_noiseless(&self) -> bool {
        self.total_rate() == 0.0
    }

    /// Faults pushed to the end of `circuit`, ready for fast sampling.
    pub fn hardware(&self, circuit: &CliffordCircuit) -> Result<HardwareNoise> {
        self.check_circuit(circuit)?;
        let site = |spec: &GateNoiseSpec| {
            let tail = circuit.tail(spec.gate_index);
            let faults: Vec<(PauliString, f64)> = spec
                .faults
                .iter()
                .map(|(p, q)| {
                    let mut f = *p;
                    for &g in tail.gates() {
                        f.apply_gate(g);
                    }
                    (f.unsigned(), *q)
                })
                .collect();
            faults
        };
        let sites = match self.correlation {
            Correlation::Independent => self.sites.iter().map(|s| FaultSampler::new(site(s))).collect(),
            Correlation::SingleFault => vec![FaultSampler::new(self.sites.iter().flat_map(site).collect())],
        };
        Ok(HardwareNoise { n: self.n, sites })
    }

    /// Bit flip from one run's faults, propagating only the faults that occur.
    ///
    /// Same distribution as [`HardwareNoise::sample_flip`] without the precomputation.
    pub fn sample_flip_lazy<R: Rng + ?Sized>(&self, circuit: &CliffordCircuit, rng: &mut R) -> u64 {
        let push = |spec: &GateNoiseSpec, p: &PauliString| {
            let mut f = *p;
            for &g in &circuit.gates()[spec.gate_index..] {
                f.apply_gate(g);
            }
            f.x_mask()
        };
        match self.correlation {
            Correlation::Independent => {
                let mut flip = 0;
                for spec in &self.sites {
                    let u: f64 = rng.gen();
                    if let Some(p) = pick(spec, u) {
                        flip ^= push(spec, p);
                    }
                }
                flip
            }
            Correlation::SingleFault => {
                let mut u: f64 = rng.gen();
                for spec in &self.sites {
                    let rate = spec.rate();
                    if u < rate {
                        return pick(spec, u).map_or(0, |p| push(spec, p));
                    }
                    u -= rate;
                }
                0
            }
        }
    }

    fn check_circuit(&self, circuit: &CliffordCircuit) -> Result<()> {
        if circuit.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: circuit.n() });
        }
        for s in &self.sites {
            s.validate(self.n, circuit.len())?;
        }
        Ok(())
    }

    /// First-order truncation as an end-of-circuit global model.
    pub fn truncated_model(&self, circuit: &CliffordCircuit) -> Result<GlobalNoiseModel> {
        self.check_circuit(circuit)?;
        truncate_gatewise(self.n, &self.sites, circuit)
    }

    /// Sampler for the inverse of the noise, pushed to the end of `circuit`.
    pub fn inverse(&self, circuit: &CliffordCircuit, compressed: bool) -> Result<InverseSampler> {
        self.check_circuit(circuit)?;
        match self.correlation {
            Correlation::Independent => {
                let mut sites = Vec::with_capacity(self.sites.len());
                for spec in &self.sites {
                    let local = invert_pauli_channel(self.n, &spec.channel(self.n))?;
                    let pushed = local.propagate(&circuit.tail(spec.gate_index));
                    let site = if compressed { compress(&pushed)? } else { pushed };
                    if !(compressed && site.len() == 1 && site.terms()[0].0.is_identity()) {
                        sites.push(site);
                    }
                }
                Ok(InverseSampler::Product { n: self.n, sites })
            }
            Correlation::SingleFault => {
                let model = self.truncated_model(circuit)?;
                let model = if compressed { compress_global(&model)? } else { model };
                model.gamma()?;
                Ok(InverseSampler::Neumann(model))
            }
        }
    }

    /// Dense PTM of the noisy circuit (small registers only).
    pub fn noisy_circuit_ptm(&self, circuit: &CliffordCircuit) -> Result<Ptm> {
        self.check_circuit(circuit)?;
        if self.n > MAX_PTM_QUBITS {
            return Err(Error::TooManyQubits(self.n, MAX_PTM_QUBITS));
        }
        let ideal = Ptm::of_unitary(circuit)?;
        match self.correlation {
            Correlation::Independent => {
                let mut acc = Ptm::identity(self.n)?;
                for pos in 0..=circuit.len() {
                    for spec in self.sites.iter().filter(|s| s.gate_index == pos) {
                        acc = Ptm::of_pauli_channel(self.n, &spec.channel(self.n))?.compose(&acc)?;
                    }
                    if pos < circuit.len() {
                        let g = CliffordCircuit::new(self.n, vec![circuit.gates()[pos]])?;
                        acc = Ptm::of_unitary(&g)?.compose(&acc)?;
                    }
                }
                Ok(acc)
            }
            Correlation::SingleFault => self.truncated_model(circuit)?.ptm()?.compose(&ideal),
        }
    }
}

fn pick(spec: &GateNoiseSpec, mut u: f64) -> Option<&PauliString> {
    for (p, q) in &spec.faults {
        if u < *q {
            return Some(p);
        }
        u -= q;
    }
    None
}

/// Categorical sampler over end-of-circuit faults for one site.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultSampler {
    rate: f64,
    cumulative: Vec<f64>,
    faults: Vec<PauliString>,
}

impl FaultSampler {
    fn new(faults: Vec<(PauliString, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = faults
            .iter()
            .map(|(_, q)| {
                acc += q;
                acc
            })
            .collect();
        Self { rate: acc, cumulative, faults: faults.into_iter().map(|(p, _)| p).collect() }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&PauliString> {
        let u: f64 = rng.gen();
        if u >= self.rate {
            return None;
        }
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.faults.len() - 1);
        Some(&self.faults[i])
    }
}

/// Noise of one circuit with every fault propagated to the end of the circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct HardwareNoise {
    n: usize,
    sites: Vec<FaultSampler>,
}

impl HardwareNoise {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> &[FaultSampler] {
        &self.sites
    }

    /// Total end-of-circuit Pauli fault for one run.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PauliString {
        let mut acc = PauliString::identity(self.n);
        for s in &self.sites {
            if let Some(p) = s.sample(rng) {
                acc = acc.mul(p).1;
            }
        }
        acc.unsigned()
    }

    /// Bit flip applied to the measured string by one run's faults.
    pub fn sample_flip<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sites.iter().filter_map(|s| s.sample(rng)).fold(0, |acc, p| acc ^ p.x_mask())
    }
}

/// Reference shot: inject faults gate by gate into the tableau and measure.
pub fn simulate_noisy_shot<R: Rng + ?Sized>(
    circuit: &CliffordCircuit,
    input: &StabilizerTableau,
    noise: &CircuitNoise,
    rng: &mut R,
) -> Result<u64> {
    noise.check_circuit(circuit)?;
    let mut t = input.clone();
    let samplers: Vec<FaultSampler> = noise.sites.iter().map(|s| FaultSampler::new(s.faults.clone())).collect();
    let chosen: Vec<Option<PauliString>> = match noise.correlation {
        Correlation::Independent => samplers.iter().map(|s| s.sample(rng).copied()).collect(),
        Correlation::SingleFault => {
            let all: Vec<(usize, PauliString, f64)> = noise
                .sites
                .iter()
                .enumerate()
                .flat_map(|(i, s)| s.faults.iter().map(move |(p, q)| (i, *p, *q)))
                .collect();
            let mut out = vec![None; noise.sites.len()];
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, p, q) in all {
                acc += q;
                if u < acc {
                    out[i] = Some(p);
                    break;
                }
            }
            out
        }
    };
    for pos in 0..=circuit.len() {
        for (spec, fault) in noise.sites.iter().zip(&chosen) {
            if spec.gate_index == pos {
                if let Some(p) = fault {
                    t.apply_pauli(p);
                }
            }
        }
        if pos < circuit.len() {
            t.apply_gate(circuit.gates()[pos]);
        }
    }
    t.measure_all(rng)
}

/// Push every fault of a single-fault model to the end of the circuit.
pub fn truncate_gatewise(n: usize, sites: &[GateNoiseSpec], circuit: &CliffordCircuit) -> Result<GlobalNoiseModel> {
    let total: f64 = sites.iter().map(GateNoiseSpec::rate).sum();
    if total >= 1.0 {
        return Err(Error::InvalidNoise(format!("total fault rate {total} is not below one")));
    }
    let mut terms = Vec::new();
    for spec in sites {
        let tail = circuit.tail(spec.gate_index);
        for (p, q) in &spec.faults {
            terms.push(NoiseTerm {
                channel: BasisChannel::pauli(*p).propagate(&tail),
                prob: *q,
                negative: false,
            });
        }
    }
    GlobalNoiseModel::new(n, 1.0, 1.0 - total, terms)
}

/// Quasi-probability sampler for an inverse noise channel at the end of a circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum InverseSampler {
    /// Product of independent per-site inverses.
    Product { n: usize, sites: Vec<QuasiProbDecomposition> },
    /// Neumann series of a global model.
    Neumann(GlobalNoiseModel),
}

impl InverseSampler {
    pub fn identity(n: usize) -> Self {
        InverseSampler::Product { n, sites: Vec::new() }
    }

    pub fn n(&self) -> usize {
        match self {
            InverseSampler::Product { n, .. } => *n,
            InverseSampler::Neumann(m) => m.n(),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            InverseSampler::Product { sites, .. } => sites.iter().map(QuasiProbDecomposition::gamma).product(),
            InverseSampler::Neumann(m) => m.gamma().unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_pauli(&self) -> bool {
        match self {
            InverseSampler::Product { sites, .. } => sites.iter().all(QuasiProbDecomposition::is_pauli),
            InverseSampler::Neumann(m) => m.is_pauli(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, BasisChannel)> {
        match self {
            InverseSampler::Product { n, sites } => {
                let mut w = 1.0;
                let mut ch = BasisChannel::identity(*n);
                for s in sites {
                    let (ws, c) = s.sample(rng);
                    w *= ws;
                    ch = ch.then(c);
                }
                Ok((w, ch))
            }
            InverseSampler::Neumann(m) => m.neumann_sample(rng),
        }
    }

    /// Pauli-only fast path.
    pub fn sample_pauli<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, PauliString)> {
        match self {
            InverseSampler::Product { n, sites } => {
                let mut w = 1.0;
                let mut acc = PauliString::identity(*n);
                for s in sites {
                    let (ws, c) = s.sample(rng);
                    w *= ws;
                    let p = c.as_pauli().ok_or_else(|| Error::Unsupported("non-Pauli inverse term".into()))?;
                    acc = acc.mul(&p).1;
                }
                Ok((w, acc.unsigned()))
            }
            InverseSampler::Neumann(m) => m.neumann_sample_pauli(rng),
        }
    }

    /// Dense PTM of the sampled inverse (Neumann series summed exactly).
    pub fn ptm(&self) -> Result<Ptm> {
        match self {
            InverseSampler::Product { n, sites } => {
                let mut acc = Ptm::identity(*n)?;
                for s in sites {
                    acc = s.ptm()?.compose(&acc)?;
                }
                Ok(acc)
            }
            InverseSampler::Neumann(m) => {
                m.gamma()?;
                m.ptm()?.inverse()
            }
        }
    }
}

/// Noise description as stored in JSON files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseFile {
    pub correlation: Correlation,
    pub sites: Vec<NoiseFileSite>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseFileSite {
    pub gate_index: usize,
    pub faults: BTreeMap<String, f64>,
}

impl NoiseFile {
    pub fn to_noise(&self, circuit: &CliffordCircuit) -> Result<CircuitNoise> {
        let n = circuit.n();
        let sites = self
            .sites
            .iter()
            .map(|s| {
                let faults = s
                    .faults
                    .iter()
                    .map(|(k, q)| Ok((k.parse::<PauliString>()?, *q)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GateNoiseSpec { gate_index: s.gate_index, faults })
            })
            .collect::<Result<Vec<_>>>()?;
        CircuitNoise::new(n, self.correlation, sites, circuit)
    }
}
