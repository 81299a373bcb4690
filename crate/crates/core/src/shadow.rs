//! Random-Clifford classical shadows under gate noise.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::BasisChannel;
use crate::circuit::CliffordCircuit;
use crate::clifford::{random_clifford_tableau, random_local_clifford, CliffordTableau, MAX_GLOBAL_CLIFFORD_QUBITS};
use crate::error::{Error, Result};
use crate::estimator::EstimateRecord;
use crate::noise::{CircuitNoise, Correlation, GateNoiseSpec, InverseSampler};
use crate::pauli::PauliString;
use crate::ptm::dense;
use crate::rng::{stream, SimRng};
use crate::stabilizer::{common_stabilizers, overlap_magnitude, row_echelon, BasisSupport, StabilizerTableau, TraceFactor};
use crate::stats;

const PURPOSE_UNITARY: u64 = 0;
const PURPOSE_HARDWARE: u64 = 1;
const PURPOSE_INVERSE: u64 = 2;
const PURPOSE_CALIBRATION: u64 = 3;
const PURPOSE_NOISELESS: u64 = 4;

/// Which random unitaries are applied before measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    GlobalClifford,
    LocalCliffordTensor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn global(n: usize) -> Self {
        Self { kind: EnsembleKind::GlobalClifford, n }
    }

    pub fn local(n: usize) -> Self {
        Self { kind: EnsembleKind::LocalCliffordTensor, n }
    }

    pub fn dim(&self) -> f64 {
        (self.n as f64).exp2()
    }
}

/// A uniformly random element of the ensemble, compiled to gates.
pub fn sample_clifford<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<CliffordCircuit> {
    match spec.kind {
        EnsembleKind::GlobalClifford => {
            if spec.n > MAX_GLOBAL_CLIFFORD_QUBITS {
                return Err(Error::TooManyQubits(spec.n, MAX_GLOBAL_CLIFFORD_QUBITS));
            }
            Ok(random_clifford_tableau(spec.n, rng)?.synthesize())
        }
        EnsembleKind::LocalCliffordTensor => random_local_clifford(spec.n, rng),
    }
}

/// Snapshot evaluator for one sampled unitary `U` and target projector `|psi><psi|`.
///
/// Works in the rotated frame where the target is `U|psi>`.
#[derive(Clone, Debug)]
pub struct ShadowFrame {
    spec: EnsembleSpec,
    rotated: StabilizerTableau,
    support: BasisSupport,
    /// Local ensemble only: `(w, 3^|w| * sign / 2^n)` for each `+-Z_w` stabilizing `U|psi>`.
    local_terms: Vec<(u64, f64)>,
}

impl ShadowFrame {
    pub fn new(spec: &EnsembleSpec, u: &CliffordCircuit, target: &StabilizerTableau) -> Result<Self> {
        if u.n() != spec.n || target.n() != spec.n {
            return Err(Error::DimensionMismatch { expected: spec.n, found: u.n().max(target.n()) });
        }
        let mut rotated = target.clone();
        rotated.apply_circuit(u);
        let ech = row_echelon(&rotated)?;
        let support = ech.basis_support();
        let local_terms = match spec.kind {
            EnsembleKind::GlobalClifford => Vec::new(),
            EnsembleKind::LocalCliffordTensor => {
                let scale = spec.dim().recip();
                ech.z_subgroup()
                    .into_iter()
                    .map(|p| {
                        let c = 3f64.powi(p.z_mask().count_ones() as i32) * scale;
                        (p.z_mask(), if p.sign() { -c } else { c })
                    })
                    .collect()
            }
        };
        Ok(Self { spec: *spec, rotated, support, local_terms })
    }

    /// `<<O| M^-1 U^dagger |b>>`.
    pub fn snapshot(&self, b: u64) -> f64 {
        match self.spec.kind {
            EnsembleKind::GlobalClifford => (self.spec.dim() + 1.0) * self.support.probability(b) - 1.0,
            EnsembleKind::LocalCliffordTensor => self
                .local_terms
                .iter()
                .map(|&(w, c)| if (w & b).count_ones() & 1 == 1 { -c } else { c })
                .sum(),
        }
    }

    /// Snapshot of an arbitrary (unnormalized) stabilizer state in place of `|b><b|`.
    pub fn snapshot_state(&self, sigma: &StabilizerTableau) -> Result<f64> {
        let g = sigma.trace_factor();
        if g.is_zero() {
            return Ok(0.0);
        }
        let gv = g.value();
        let mut normalized = sigma.clone();
        normalized.set_trace_factor(TraceFactor::ONE);
        match self.spec.kind {
            EnsembleKind::GlobalClifford => {
                Ok((self.spec.dim() + 1.0) * gv * overlap_magnitude(&normalized, &self.rotated)? - gv)
            }
            EnsembleKind::LocalCliffordTensor => {
                let common = common_stabilizers(&normalized, &self.rotated)?;
                let n = self.spec.n;
                let mut elements = vec![PauliString::identity(n)];
                for gen in &common.generators {
                    let extra: Vec<PauliString> = elements.iter().map(|e| e.mul(gen).1).collect();
                    elements.extend(extra);
                }
                let mut total = 0.0;
                for q in elements {
                    let s1 = normalized.sign_in_group(&q).expect("common element");
                    let s2 = self.rotated.sign_in_group(&q).expect("common element");
                    let c = 3f64.powi(q.weight() as i32);
                    total += if s1 == s2 { c } else { -c };
                }
                Ok(gv * total / self.spec.dim())
            }
        }
    }

    /// Snapshot after an extra basis channel acts on the measured state.
    pub fn snapshot_with(&self, b: u64, extra: &BasisChannel) -> Result<f64> {
        if let Some(p) = extra.as_pauli() {
            return Ok(self.snapshot(b ^ p.x_mask()));
        }
        self.snapshot_state(&extra.on_basis_state(b)?)
    }
}

/// `<<rho| M^-1 U^dagger B |b>>` for a pure stabilizer target.
pub fn snapshot_overlap(
    u: &CliffordCircuit,
    b: u64,
    target: &StabilizerTableau,
    spec: &EnsembleSpec,
    extra: Option<&BasisChannel>,
) -> Result<f64> {
    let frame = ShadowFrame::new(spec, u, target)?;
    match extra {
        None => Ok(frame.snapshot(b)),
        Some(ch) => frame.snapshot_with(b, ch),
    }
}

/// Gate noise as a function of the sampled circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseFamily {
    None,
    /// `XX` flip after each CNOT with probability `p`.
    LocalBitflip { p: f64 },
    /// Depolarizing faults after CNOTs with total per-circuit fault probability `p`.
    GlobalDepolFirstOrder { p: f64 },
    /// Gate-independent depolarizing noise `(1 - p) rho + p I/d` before measurement.
    TerminalDepolarizing { p: f64 },
    /// Terminal Pauli fault whose identity depends on one uniformly random bit of `U`.
    TwoClass { faults: [(PauliString, f64); 2] },
}

impl NoiseFamily {
    pub fn for_circuit(&self, u: &CliffordCircuit) -> Result<CircuitNoise> {
        match self {
            NoiseFamily::None => Ok(CircuitNoise::none(u.n())),
            NoiseFamily::LocalBitflip { p } => CircuitNoise::local_bitflip(u, *p),
            NoiseFamily::GlobalDepolFirstOrder { p } => CircuitNoise::global_depolarizing_first_order(u, *p),
            NoiseFamily::TerminalDepolarizing { p } => CircuitNoise::none(u.n()).with_terminal_depolarizing(u, *p),
            NoiseFamily::TwoClass { faults } => {
                let (p, q) = faults[two_class_index(u)];
                let spec = GateNoiseSpec { gate_index: u.len(), faults: vec![(p, q)] };
                CircuitNoise::new(u.n(), Correlation::Independent, vec![spec], u)
            }
        }
    }

    pub fn is_noiseless(&self) -> bool {
        match self {
            NoiseFamily::None => true,
            NoiseFamily::LocalBitflip { p }
            | NoiseFamily::GlobalDepolFirstOrder { p }
            | NoiseFamily::TerminalDepolarizing { p } => *p == 0.0,
            NoiseFamily::TwoClass { faults } => faults.iter().all(|(_, q)| *q == 0.0),
        }
    }
}

/// Class of a circuit in the two-class family: the sign of the image of `X_1`.
pub fn two_class_index(u: &CliffordCircuit) -> usize {
    usize::from(CliffordTableau::from_circuit(u).x_images()[0].sign())
}

/// Input state, target projector, ensemble and noise of a shadow experiment.
#[derive(Clone, Debug)]
pub struct ShadowSetup {
    pub state: StabilizerTableau,
    pub target: StabilizerTableau,
    pub spec: EnsembleSpec,
    pub noise: NoiseFamily,
}

impl ShadowSetup {
    /// Fidelity estimation of a pure stabilizer state with itself as the prepared input.
    pub fn fidelity(state: StabilizerTableau, spec: EnsembleSpec, noise: NoiseFamily) -> Self {
        Self { target: state.clone(), state, spec, noise }
    }
}

/// Everything needed to run one sampled circuit.
struct Prepared {
    circuit: CliffordCircuit,
    frame: ShadowFrame,
    output: BasisSupport,
    noise: CircuitNoise,
}

impl Prepared {
    fn new(setup: &ShadowSetup, seed: u64, index: u64) -> Result<Self> {
        let mut rng = stream(seed, &[index, PURPOSE_UNITARY]);
        let circuit = sample_clifford(&setup.spec, &mut rng)?;
        let frame = ShadowFrame::new(&setup.spec, &circuit, &setup.target)?;
        let mut out = setup.state.clone();
        out.apply_circuit(&circuit);
        let output = out.basis_support()?;
        let noise = setup.noise.for_circuit(&circuit)?;
        Ok(Self { circuit, frame, output, noise })
    }

    fn shots(&self, k: usize, rng: &mut SimRng) -> Result<Vec<u64>> {
        if k <= 2 || self.noise.is_noiseless() {
            Ok((0..k).map(|_| self.output.sample(rng) ^ self.noise.sample_flip_lazy(&self.circuit, rng)).collect())
        } else {
            let hw = self.noise.hardware(&self.circuit)?;
            Ok((0..k).map(|_| self.output.sample(rng) ^ hw.sample_flip(rng)).collect())
        }
    }

    fn weighted_snapshot(&self, inverse: &InverseSampler, b: u64, rng: &mut SimRng) -> Result<f64> {
        if inverse.is_pauli() {
            let (w, p) = inverse.sample_pauli(rng)?;
            Ok(w * self.frame.snapshot(b ^ p.x_mask()))
        } else {
            let (w, ch) = inverse.sample(rng)?;
            Ok(w * self.frame.snapshot_with(b, &ch)?)
        }
    }
}

fn check_counts(counts: &[usize]) -> Result<()> {
    if counts.contains(&0) {
        return Err(Error::Unsupported("sample counts must be positive".into()));
    }
    Ok(())
}

/// Shadows with classical noise inversion; `per_sample` holds per-circuit averages.
pub fn run_cni_shadow(setup: &ShadowSetup, m: usize, k: usize, l: usize, seed: u64) -> Result<EstimateRecord> {
    check_counts(&[m, k, l])?;
    let mut per_sample = Vec::with_capacity(m);
    let mut gamma_max: f64 = 1.0;
    for idx in 0..m as u64 {
        let prep = Prepared::new(setup, seed, idx)?;
        let inverse = prep.noise.inverse(&prep.circuit, true)?;
        gamma_max = gamma_max.max(inverse.gamma());
        let shots = prep.shots(k, &mut stream(seed, &[idx, PURPOSE_HARDWARE]))?;
        let mut rng = stream(seed, &[idx, PURPOSE_INVERSE]);
        let mut acc = 0.0;
        for &b in &shots {
            for _ in 0..l {
                acc += prep.weighted_snapshot(&inverse, b, &mut rng)?;
            }
        }
        per_sample.push(acc / (k * l) as f64);
    }
    Ok(EstimateRecord::new(per_sample, k, l, m, gamma_max, seed))
}

/// Unmitigated shadows.
pub fn run_plain_shadow(setup: &ShadowSetup, m: usize, k: usize, seed: u64) -> Result<EstimateRecord> {
    check_counts(&[m, k])?;
    let mut per_sample = Vec::with_capacity(m);
    for idx in 0..m as u64 {
        let prep = Prepared::new(setup, seed, idx)?;
        let shots = prep.shots(k, &mut stream(seed, &[idx, PURPOSE_HARDWARE]))?;
        per_sample.push(shots.iter().map(|&b| prep.frame.snapshot(b)).sum::<f64>() / k as f64);
    }
    Ok(EstimateRecord::new(per_sample, k, 1, m, 1.0, seed))
}

/// Conventional cancellation: one inverse draw inserted into each executed circuit.
pub fn run_cpec_shadow(setup: &ShadowSetup, m: usize, k: usize, seed: u64) -> Result<EstimateRecord> {
    check_counts(&[m, k])?;
    let mut per_sample = Vec::with_capacity(m);
    let mut gamma_max: f64 = 1.0;
    for idx in 0..m as u64 {
        let prep = Prepared::new(setup, seed, idx)?;
        let inverse = prep.noise.inverse(&prep.circuit, false)?;
        gamma_max = gamma_max.max(inverse.gamma());
        let (w, ch) = inverse.sample(&mut stream(seed, &[idx, PURPOSE_INVERSE]))?;
        let mut rng = stream(seed, &[idx, PURPOSE_HARDWARE]);
        let shots = prep.shots(k, &mut rng)?;
        let mut acc = 0.0;
        if let Some(p) = ch.as_pauli() {
            for &b in &shots {
                acc += prep.frame.snapshot(b ^ p.x_mask());
            }
        } else {
            for &b in &shots {
                let mut t = StabilizerTableau::basis_state(setup.spec.n, b)?;
                ch.apply_to(&mut t);
                if t.trace_factor().is_zero() {
                    continue;
                }
                let g = t.trace_factor().value();
                let outcome = t.basis_support()?.sample(&mut rng);
                acc += g * prep.frame.snapshot(outcome);
            }
        }
        per_sample.push(w * acc / k as f64);
    }
    Ok(EstimateRecord::new(per_sample, k, 1, m, gamma_max, seed))
}

/// Result of robust shadow estimation: the estimate and the calibrated `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrseRecord {
    pub estimate: EstimateRecord,
    pub r_hat: f64,
    pub r_se: f64,
}

/// Calibrate `r` from `calib_m` noisy single-shot rounds on `|0...0>`.
pub fn calibrate_srse(spec: &EnsembleSpec, noise: &NoiseFamily, calib_m: usize, seed: u64) -> Result<(f64, f64)> {
    if spec.kind != EnsembleKind::GlobalClifford {
        return Err(Error::Unsupported("robust shadow calibration needs the global ensemble".into()));
    }
    check_counts(&[calib_m])?;
    let d = spec.dim();
    let mut acc = stats::Accumulator::new();
    for i in 0..calib_m as u64 {
        let mut rng = stream(seed, &[PURPOSE_CALIBRATION, i]);
        let u = sample_clifford(spec, &mut rng)?;
        let out = StabilizerTableau::from_circuit(&u).basis_support()?;
        let flip = if noise.is_noiseless() { 0 } else { noise.for_circuit(&u)?.sample_flip_lazy(&u, &mut rng) };
        let b = out.sample(&mut rng) ^ flip;
        acc.push(out.probability(b));
    }
    let r = (d * acc.mean() - 1.0) / (d - 1.0);
    let r_se = d / (d - 1.0) * acc.std_err();
    if r <= 0.0 {
        return Err(Error::CalibrationFailed(r));
    }
    Ok((r, r_se))
}

/// Robust shadow estimation with a depolarizing-calibrated inverse.
pub fn run_srse(setup: &ShadowSetup, m: usize, k: usize, calib_m: usize, seed: u64) -> Result<SrseRecord> {
    check_counts(&[m, k, calib_m])?;
    let (r, r_se) = calibrate_srse(&setup.spec, &setup.noise, calib_m, seed)?;
    run_srse_calibrated(setup, m, k, r, r_se, seed)
}

/// Estimation phase of robust shadows with an externally calibrated `r`.
pub fn run_srse_calibrated(setup: &ShadowSetup, m: usize, k: usize, r: f64, r_se: f64, seed: u64) -> Result<SrseRecord> {
    check_counts(&[m, k])?;
    if r <= 0.0 {
        return Err(Error::CalibrationFailed(r));
    }
    let d = setup.spec.dim();
    let offset = (1.0 - r) / (r * d);
    let mut per_sample = Vec::with_capacity(m);
    for idx in 0..m as u64 {
        let prep = Prepared::new(setup, seed, idx)?;
        let shots = prep.shots(k, &mut stream(seed, &[idx, PURPOSE_HARDWARE]))?;
        let total: f64 = shots.iter().map(|&b| prep.frame.support.probability(b) / r - offset).sum();
        per_sample.push(total / k as f64);
    }
    Ok(SrseRecord { estimate: EstimateRecord::new(per_sample, k, 1, m, 1.0 / r, seed), r_hat: r, r_se })
}

/// The circuit drawn for index `index` by every protocol run with `seed`.
pub fn sampled_circuit(spec: &EnsembleSpec, seed: u64, index: u64) -> Result<CliffordCircuit> {
    sample_clifford(spec, &mut stream(seed, &[index, PURPOSE_UNITARY]))
}

/// Squared noisy shadow norms at a fixed input state, with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowNorms {
    pub ns1: f64,
    pub ns1_se: f64,
    pub ns2: f64,
    pub ns2_se: f64,
    pub xs: f64,
    pub xs_se: f64,
    pub gamma_max: f64,
}

/// Monte-Carlo estimates of the squared norms `NS1`, `NS2` and `XS` at the setup's input state.
pub fn estimate_shadow_norms(setup: &ShadowSetup, samples: usize, seed: u64) -> Result<ShadowNorms> {
    check_counts(&[samples])?;
    let (mut ns1, mut ns2, mut xs) = (Vec::new(), Vec::new(), Vec::new());
    let mut gamma_max: f64 = 1.0;
    for idx in 0..samples as u64 {
        let prep = Prepared::new(setup, seed, idx)?;
        let inverse = prep.noise.inverse(&prep.circuit, true)?;
        let gamma = inverse.gamma();
        gamma_max = gamma_max.max(gamma);
        let b = prep.shots(1, &mut stream(seed, &[idx, PURPOSE_HARDWARE]))?[0];
        let mut rng = stream(seed, &[idx, PURPOSE_INVERSE]);
        let s1 = prep.weighted_snapshot(&inverse, b, &mut rng)? / gamma;
        let s2 = prep.weighted_snapshot(&inverse, b, &mut rng)? / gamma;
        ns1.push(s1 * s1);
        ns2.push(s1 * s2);
        let mut clean = stream(seed, &[idx, PURPOSE_NOISELESS]);
        let c1 = prep.frame.snapshot(prep.output.sample(&mut clean));
        let c2 = prep.frame.snapshot(prep.output.sample(&mut clean));
        xs.push(c1 * c2);
    }
    Ok(ShadowNorms {
        ns1: stats::mean(&ns1),
        ns1_se: stats::std_err(&ns1),
        ns2: stats::mean(&ns2),
        ns2_se: stats::std_err(&ns2),
        xs: stats::mean(&xs),
        xs_se: stats::std_err(&xs),
        gamma_max,
    })
}

/// Variance bound of the `M`-circuit, `K`-shot, `L`-draw shadow estimator from squared norms.
pub fn shadow_variance_bound(m: usize, k: usize, l: usize, gamma_max: f64, ns1: f64, ns2: f64, xs: f64) -> f64 {
    let (m, k, l) = (m as f64, k as f64, l as f64);
    (gamma_max * gamma_max / k * (ns1 / l + (1.0 - 1.0 / l) * ns2) + (1.0 - 1.0 / k) * xs) / m
}

/// Global-Clifford second moment `E[o^2]` of a stabilizer-projector shadow at a state
/// with fidelity `f` to the target.
pub fn global_projector_second_moment(n: usize, f: f64) -> f64 {
    let d = (n as f64).exp2();
    d * (1.0 + 2.0 * f) / (d + 2.0)
}

/// Squared global-Clifford shadow norm of a stabilizer projector.
pub fn global_projector_shadow_norm_sq(n: usize) -> f64 {
    global_projector_second_moment(n, 1.0)
}

/// Third-moment formula `E[<b|U sigma U^+|b> <b|U Y U^+|b>^2]`-weighted sum over outcomes,
/// with `Y = (d+1) O - Tr(O) I` described by its traces.
pub fn three_design_second_moment(d: f64, tr_y: f64, tr_y2: f64, tr_sigma_y: f64, tr_sigma_y2: f64) -> f64 {
    (tr_y * tr_y + tr_y2 + 2.0 * tr_y * tr_sigma_y + 2.0 * tr_sigma_y2) / ((d + 1.0) * (d + 2.0))
}

/// Conditional distribution of inverse draws given the circuit class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    pub weight: f64,
    pub pr_identity: f64,
    pub faults: Vec<(String, f64)>,
}

/// Map `U -> Pr(. | U)` over a finite ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalNoiseTable {
    pub rows: Vec<ConditionalRow>,
}

impl ConditionalNoiseTable {
    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.rows.iter().map(|r| r.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidNoise(format!("ensemble weights sum to {total}")));
        }
        for r in &self.rows {
            let s = r.pr_identity + r.faults.iter().map(|(_, p)| p).sum::<f64>();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidNoise(format!("conditional distribution sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn pr_identity(&self) -> f64 {
        self.rows.iter().map(|r| r.weight * r.pr_identity).sum()
    }

    /// Marginal probability of each non-identity label.
    pub fn marginals(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for r in &self.rows {
            for (label, p) in &r.faults {
                match out.iter_mut().find(|(l, _)| l == label) {
                    Some(e) => e.1 += r.weight * p,
                    None => out.push((label.clone(), r.weight * p)),
                }
            }
        }
        out
    }

    fn marginal(&self, label: &str) -> f64 {
        self.marginals().into_iter().find(|(l, _)| l == label).map_or(0.0, |(_, p)| p)
    }

    /// Mutual information (nats) between the circuit and the drawn channel.
    pub fn mutual_information(&self) -> f64 {
        let pi = self.pr_identity();
        let mut total = 0.0;
        for r in &self.rows {
            if r.pr_identity > 0.0 {
                total += r.weight * r.pr_identity * (r.pr_identity / pi).ln();
            }
            for (label, p) in &r.faults {
                if *p > 0.0 {
                    total += r.weight * p * (p / self.marginal(label)).ln();
                }
            }
        }
        total
    }
}

/// `(g, h)`: the smallest conditional identity probability and the dependence factor.
pub fn compute_g_h(table: &ConditionalNoiseTable) -> Result<(f64, f64)> {
    table.validate()?;
    let g = table.rows.iter().map(|r| r.pr_identity).fold(f64::INFINITY, f64::min);
    let mut h1: f64 = 1.0;
    let mut first = true;
    for r in &table.rows {
        for (label, p) in &r.faults {
            if *p > 0.0 {
                let ratio = p / table.marginal(label);
                h1 = if first { ratio } else { h1.max(ratio) };
                first = false;
            }
        }
    }
    let pi = table.pr_identity();
    let h2 = if pi - g > 1e-15 {
        table.rows.iter().map(|r| (r.pr_identity - g) / (pi - g)).fold(0.0, f64::max)
    } else {
        1.0
    };
    let h = h1.max(h2);
    Ok((g, h))
}

/// Conditional table of the inverse draws for a [`NoiseFamily::TwoClass`] family.
pub fn two_class_table(faults: &[(PauliString, f64); 2]) -> Result<ConditionalNoiseTable> {
    let mut rows = Vec::new();
    for (p, q) in faults {
        if !(0.0..0.5).contains(q) {
            return Err(Error::InvalidNoise(format!("fault probability {q} outside [0, 0.5)")));
        }
        let faults = if *q > 0.0 { vec![(p.to_string(), *q)] } else { Vec::new() };
        rows.push(ConditionalRow { weight: 0.5, pr_identity: 1.0 - q, faults });
    }
    Ok(ConditionalNoiseTable { rows })
}

/// Check that deviated observables keep their Frobenius norm (global ensemble) or their
/// Pauli weight (local ensemble) under random circuits and Pauli channels.
pub fn deviated_observable_norm_check<R: Rng + ?Sized>(
    o: &PauliString,
    spec: &EnsembleSpec,
    trials: usize,
    rng: &mut R,
) -> Result<bool> {
    let n = spec.n;
    if o.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: o.n() });
    }
    if n > 3 {
        return Err(Error::TooManyQubits(n, 3));
    }
    let d = spec.dim();
    let o_mat = dense::pauli_matrix(&o.unsigned());
    let frob = |m: &dense::CMatrix| (m * m).trace().re;
    let target = frob(&o_mat);
    let apply_measure = |a: &dense::CMatrix, inverse: bool| -> dense::CMatrix {
        match spec.kind {
            EnsembleKind::GlobalClifford => {
                let tr = a.trace();
                let id = dense::CMatrix::identity(a.nrows(), a.ncols());
                if inverse {
                    a * dense::C64::from(d + 1.0) - id * tr
                } else {
                    (a + id * tr) / dense::C64::from(d + 1.0)
                }
            }
            EnsembleKind::LocalCliffordTensor => {
                let mut out = dense::CMatrix::zeros(a.nrows(), a.ncols());
                for idx in 0..(1u64 << (2 * n)) {
                    let p = PauliString::new(n, false, idx & ((1 << n) - 1), idx >> n).expect("mask");
                    let c = dense::trace_with_pauli(&p, a) / dense::C64::from(d);
                    let f = 3f64.powi(p.weight() as i32);
                    let f = if inverse { f } else { 1.0 / f };
                    out += dense::pauli_matrix(&p) * (c * dense::C64::from(f));
                }
                out
            }
        }
    };
    for _ in 0..trials {
        let u = sample_clifford(spec, rng)?;
        let um = dense::circuit_unitary(&u);
        let z: u64 = rng.gen::<u64>() & ((1 << n) - 1);
        let x: u64 = rng.gen::<u64>() & ((1 << n) - 1);
        let b = dense::pauli_matrix(&PauliString::new(n, false, z, x)?);
        let conj = um.adjoint() * &b * &um;
        let deviated = apply_measure(&(&conj * apply_measure(&o_mat, true) * conj.adjoint()), false);
        match spec.kind {
            EnsembleKind::GlobalClifford => {
                if (frob(&deviated) - target).abs() > 1e-9 {
                    return Ok(false);
                }
            }
            EnsembleKind::LocalCliffordTensor => {
                for idx in 0..(1u64 << (2 * n)) {
                    let p = PauliString::new(n, false, idx & ((1 << n) - 1), idx >> n)?;
                    if dense::trace_with_pauli(&p, &deviated).norm() > 1e-9 && p.weight() != o.weight() {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}
