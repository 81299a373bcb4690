//! Cross-module property suites that compare the fast paths against dense references.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{single_qubit_basis, BasisChannel};
use crate::circuit::Gate;
use crate::clifford::random_clifford;
use crate::compression::{compress, compress_pairwise, compression_classes, same_z_block_clifford, same_z_block_general};
use crate::error::{Error, Result};
use crate::noise::{invert_channel, invert_pauli_channel, GlobalNoiseModel, NoiseTerm, QuasiProbDecomposition};
use crate::pauli::{low_mask, PauliString};
use crate::ptm::dense::{self, KrausChannel};
use crate::ptm::{index_pauli, Ptm, TwirlSet};
use crate::rng::{stream, SimRng};
use crate::shadow::{estimate_shadow_norms, global_projector_shadow_norm_sq, EnsembleSpec, NoiseFamily, ShadowSetup};
use crate::stabilizer::{Axis, Op, StabilizerTableau};

/// Entrywise tolerance of the stabilizer-versus-dense comparison.
pub const ORACLE_TOL: f64 = 1e-12;
/// Tolerance for equality of dense Z-blocks.
pub const ZBLOCK_TOL: f64 = 1e-12;
const MAX_RECORDED_FAILURES: usize = 10;

/// Outcome of one property suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        Self { suite: suite.to_string(), cases: 0, passed: 0, failures: Vec::new() }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if ok {
            self.passed += 1;
        } else if self.failures.len() < MAX_RECORDED_FAILURES {
            self.failures.push(describe());
        }
    }

    fn record_result(&mut self, outcome: Result<Option<String>>) {
        match outcome {
            Ok(None) => self.record(true, String::new),
            Ok(Some(msg)) => self.record(false, || msg),
            Err(e) => self.record(false, || format!("error: {e}")),
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.cases
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} passed", self.suite, self.passed, self.cases)?;
        for msg in &self.failures {
            write!(f, "\n  {msg}")?;
        }
        Ok(())
    }
}

pub const SUITES: [&str; 5] = ["oracle", "compression", "twirl", "neumann", "norms"];

/// Run a named suite at its default size.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(match name {
        "oracle" => vec![oracle_suite(1000, seed)],
        "compression" => vec![compression_suite(100, seed), zblock_suite(500, seed)],
        "twirl" => vec![twirl_suite(100, seed)],
        "neumann" => vec![neumann_suite(100_000, seed)?],
        "norms" => vec![norms_suite(4000, seed)?],
        other => return Err(Error::Unsupported(format!("unknown suite {other:?}; expected one of {SUITES:?}"))),
    })
}

fn random_pauli(n: usize, rng: &mut SimRng) -> PauliString {
    let mask = low_mask(n);
    PauliString::new(n, false, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask).expect("masked to register")
}

fn random_gate(n: usize, rng: &mut SimRng) -> Gate {
    let q = rng.gen_range(0..n);
    match rng.gen_range(0..if n > 1 { 3 } else { 2 }) {
        0 => Gate::H(q),
        1 => Gate::S(q),
        _ => {
            let t = (q + rng.gen_range(1..n)) % n;
            Gate::Cnot(q, t)
        }
    }
}

fn random_axis(rng: &mut SimRng) -> Axis {
    [Axis::X, Axis::Y, Axis::Z][rng.gen_range(0..3)]
}

/// A random elementary operation; projectors only when allowed.
pub fn random_op(n: usize, projectors: bool, rng: &mut SimRng) -> Op {
    match rng.gen_range(0..if projectors { 4 } else { 3 }) {
        0 | 1 => Op::Gate(random_gate(n, rng)),
        2 => Op::Pauli(random_pauli(n, rng)),
        _ => Op::Project { qubit: rng.gen_range(0..n), axis: random_axis(rng), outcome: rng.gen() },
    }
}

/// Random sequence mixing single-qubit basis channels with elementary operations.
pub fn random_basis_sequence(n: usize, len: usize, projectors: bool, rng: &mut SimRng) -> Vec<Op> {
    let basis = single_qubit_basis();
    let mut ops = Vec::new();
    for _ in 0..len {
        if rng.gen_bool(0.5) {
            let ch = &basis[rng.gen_range(0..basis.len())];
            if !projectors && ch.has_projector() {
                continue;
            }
            let q = rng.gen_range(0..n);
            ops.extend(ch.embed(n, &[q]).expect("qubit in range").ops());
        } else {
            ops.push(random_op(n, projectors, rng));
        }
    }
    ops
}

/// Stabilizer engine versus dense Kraus evolution on random operation sequences.
pub fn oracle_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("oracle");
    for case in 0..cases {
        let mut rng = stream(seed, &[0x0AC1E, case as u64]);
        let n = 1 + case % 3;
        let mut t = StabilizerTableau::from_circuit(&random_clifford(n, &mut rng).expect("small register"));
        let rho = dense::tableau_density(&t);
        let len = rng.gen_range(1..=8);
        let ops = random_basis_sequence(n, len, true, &mut rng);
        for op in &ops {
            t.apply_op(op);
        }
        let expected = KrausChannel::from_ops(&ops, n).apply(&rho);
        let diff = dense::max_abs_diff(&dense::tableau_density(&t), &expected);
        report.record(diff <= ORACLE_TOL, || format!("case {case}: n={n}, ops={ops:?}, max diff {diff:e}"));
    }
    report
}

/// Twirl by enumerating every element of the Pauli subgroup.
pub fn twirl_enumerated(ptm: &Ptm, set: TwirlSet) -> Ptm {
    let n = ptm.n();
    let dim = ptm.dim();
    let elements: Vec<PauliString> = match set {
        TwirlSet::Z => (0..1u64 << n).map(|z| PauliString::new(n, false, z, 0).expect("in range")).collect(),
        TwirlSet::X => (0..1u64 << n).map(|x| PauliString::new(n, false, 0, x).expect("in range")).collect(),
        TwirlSet::Pauli => (0..dim).map(|i| index_pauli(n, i)).collect(),
    };
    let paulis: Vec<PauliString> = (0..dim).map(|i| index_pauli(n, i)).collect();
    let mut sign_sums = DMatrix::<i64>::zeros(dim, dim);
    for p in &elements {
        let signs: Vec<i64> = paulis.iter().map(|s| if p.commutes_with(s) { 1 } else { -1 }).collect();
        for c in 0..dim {
            for r in 0..dim {
                sign_sums[(r, c)] += signs[r] * signs[c];
            }
        }
    }
    let count = elements.len() as f64;
    let acc = DMatrix::from_fn(dim, dim, |r, c| sign_sums[(r, c)] as f64 / count * ptm.matrix()[(r, c)]);
    Ptm::from_matrix(n, acc).expect("square of the right size")
}

/// Structural zeros of Z- and Pauli-twirls of random two-qubit channels.
pub fn twirl_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("twirl");
    let n = 2;
    let dim = 16;
    for case in 0..cases {
        let mut rng = stream(seed, &[0x7E1, case as u64]);
        let kraus = rng.gen_range(1..=4);
        let ptm = match Ptm::of_kraus(&KrausChannel::random(n, kraus, &mut rng)) {
            Ok(p) => p,
            Err(e) => {
                report.record(false, || format!("case {case}: {e}"));
                continue;
            }
        };
        let orig = ptm.matrix();
        let z = twirl_enumerated(&ptm, TwirlSet::Z);
        let z_fast = ptm.twirl_exact(TwirlSet::Z);
        let pauli = twirl_enumerated(&ptm, TwirlSet::Pauli);
        let pauli_fast = ptm.twirl_exact(TwirlSet::Pauli);
        let mut problems = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let (a, b) = (index_pauli(n, r), index_pauli(n, c));
                let keep_z = a.x_mask() == b.x_mask();
                for (name, m) in [("enumerated Z", z.matrix()), ("structural Z", z_fast.matrix())] {
                    let ok = if keep_z { (m[(r, c)] - orig[(r, c)]).abs() <= 1e-15 } else { m[(r, c)] == 0.0 };
                    if !ok {
                        problems.push(format!("{name} twirl entry ({a},{b}) = {:e}", m[(r, c)]));
                    }
                }
                for (name, m) in [("enumerated Pauli", pauli.matrix()), ("structural Pauli", pauli_fast.matrix())] {
                    let ok = if r == c { (m[(r, c)] - orig[(r, c)]).abs() <= 1e-15 } else { m[(r, c)] == 0.0 };
                    if !ok {
                        problems.push(format!("{name} twirl entry ({a},{b}) = {:e}", m[(r, c)]));
                    }
                }
            }
        }
        if !z.check_propagable(0.0) || !z_fast.check_propagable(0.0) {
            problems.push("Z-twirled channel is not propagable".into());
        }
        report.record(problems.is_empty(), || format!("case {case}: {}", problems.join("; ")));
    }
    report
}

fn z_block_of(c: &BasisChannel) -> Result<DMatrix<f64>> {
    Ok(c.ptm()?.z_block())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Check a compressed decomposition: members of each class share the dense Z-block.
fn classes_sound(qpd: &QuasiProbDecomposition) -> Result<Option<String>> {
    let classes = compression_classes(qpd)?;
    let mut reps: HashMap<usize, DMatrix<f64>> = HashMap::new();
    for ((c, _), k) in qpd.terms().iter().zip(classes) {
        let block = z_block_of(c)?;
        match reps.get(&k) {
            Some(rep) => {
                let d = max_abs(&(rep - &block));
                if d > ZBLOCK_TOL {
                    return Ok(Some(format!("class {k}: member {c} differs by {d:e}")));
                }
            }
            None => {
                reps.insert(k, block);
            }
        }
    }
    Ok(None)
}

/// Random Pauli channel with identity weight at least `floor`.
fn random_pauli_channel(n: usize, floor: f64, rng: &mut SimRng) -> Vec<(PauliString, f64)> {
    let faults = rng.gen_range(1..=4);
    let budget = (1.0 - floor) * rng.gen::<f64>();
    let weights: Vec<f64> = (0..faults).map(|_| rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut channel = vec![(PauliString::identity(n), 1.0 - budget)];
    channel.extend(weights.iter().map(|w| (random_pauli(n, rng), budget * w / total)));
    channel
}

/// Compression of one Pauli model propagated through a random tail.
fn pauli_compression_case(n: usize, rng: &mut SimRng) -> Result<Option<String>> {
    let channel = random_pauli_channel(n, 0.6, rng);
    let tail = random_clifford(n, rng)?;
    let inverse = invert_pauli_channel(n, &channel)?.propagate(&tail);
    let propagated: Vec<(PauliString, f64)> =
        channel.iter().map(|(p, q)| (BasisChannel::pauli(*p).propagate(&tail).as_pauli().expect("Pauli"), *q)).collect();
    let noise = Ptm::of_pauli_channel(n, &propagated)?;
    let compressed = compress(&inverse)?;
    if let Some(msg) = classes_sound(&inverse)? {
        return Ok(Some(msg));
    }
    let mz = Ptm::measurement_channel(n)?;
    let lhs = compressed.ptm()?.compose(&mz.compose(&noise)?)?;
    let diff = lhs.max_abs_diff(&mz);
    if diff > ZBLOCK_TOL {
        return Ok(Some(format!("compressed inverse misses measurement identity by {diff:e}")));
    }
    if compressed.gamma() > inverse.gamma() + 1e-12 {
        return Ok(Some(format!("gamma grew from {} to {}", inverse.gamma(), compressed.gamma())));
    }
    Ok(None)
}

/// Compression of the generic inverse of a Z-twirled random channel.
fn general_compression_case(n: usize, rng: &mut SimRng) -> Result<Option<String>> {
    let raw = Ptm::of_kraus(&KrausChannel::random(n, 2, rng))?;
    let identity = Ptm::identity(n)?;
    let mixed = Ptm::linear_combination(n, &[(0.8, &identity), (0.2, &raw)])?;
    let noise = mixed.twirl_exact(TwirlSet::Z);
    let inverse = invert_channel(&noise)?;
    let compressed = compress(&inverse)?;
    if let Some(msg) = classes_sound(&inverse)? {
        return Ok(Some(msg));
    }
    let reference = compress_pairwise(&inverse)?;
    if (reference.gamma() - compressed.gamma()).abs() > 1e-9 {
        return Ok(Some(format!("keyed gamma {} vs pairwise {}", compressed.gamma(), reference.gamma())));
    }
    let mz = Ptm::measurement_channel(n)?;
    let lhs = mz.compose(&compressed.ptm()?)?.compose(&mz)?.compose(&noise)?;
    let diff = lhs.max_abs_diff(&mz);
    if diff > 1e-9 {
        return Ok(Some(format!("measured compressed inverse misses identity by {diff:e}")));
    }
    if compressed.gamma() > inverse.gamma() + 1e-12 {
        return Ok(Some(format!("gamma grew from {} to {}", inverse.gamma(), compressed.gamma())));
    }
    Ok(None)
}

/// The two-qubit `ZZ` fault whose inverse compresses into the identity.
pub fn zz_fault_gammas() -> Result<(f64, f64)> {
    let zz: PauliString = "ZZ".parse()?;
    let inverse = invert_pauli_channel(2, &[(PauliString::identity(2), 0.9), (zz, 0.1)])?;
    Ok((inverse.gamma(), compress(&inverse)?.gamma()))
}

/// Soundness of compression and the overhead reduction on random propagable models.
pub fn compression_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("compression");
    for case in 0..cases {
        let mut rng = stream(seed, &[0xC0, case as u64]);
        let outcome = if case % 3 == 2 {
            general_compression_case(1 + case % 2, &mut rng)
        } else {
            pauli_compression_case(1 + case % 3, &mut rng)
        };
        report.record_result(outcome.map(|m| m.map(|s| format!("case {case}: {s}"))));
    }
    report.record_result(zz_fault_gammas().map(|(g, g2)| {
        (g2 >= g || (g2 - 1.0).abs() > 1e-12).then(|| format!("ZZ fault: gamma {g} -> {g2}, expected strict drop to 1"))
    }));
    report
}

fn random_sequence_channel(n: usize, projectors: bool, rng: &mut SimRng) -> BasisChannel {
    let len = rng.gen_range(1..=6);
    let ops = random_basis_sequence(n, len, projectors, rng);
    BasisChannel::sequence(n, ops).expect("ops in range")
}

fn random_diagonal(n: usize, rng: &mut SimRng) -> Vec<Op> {
    (0..rng.gen_range(0..=3))
        .map(|_| {
            if rng.gen_bool(0.5) {
                Op::Gate(Gate::S(rng.gen_range(0..n)))
            } else {
                Op::Pauli(PauliString::new(n, false, rng.gen::<u64>() & low_mask(n), 0).expect("masked"))
            }
        })
        .collect()
}

/// A partner channel: either independent or the same channel dressed with diagonal operations.
fn partner(a: &BasisChannel, projectors: bool, rng: &mut SimRng) -> BasisChannel {
    let n = a.n();
    if rng.gen_bool(0.4) {
        return random_sequence_channel(n, projectors, rng);
    }
    let mut ops = random_diagonal(n, rng);
    ops.extend(a.ops());
    ops.extend(random_diagonal(n, rng));
    if rng.gen_bool(0.2) {
        ops.push(Op::Pauli(random_pauli(n, rng)));
    }
    BasisChannel::sequence(n, ops).expect("ops in range")
}

/// Both Z-block comparison algorithms against dense Z-blocks.
pub fn zblock_suite(pairs: usize, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::new("zblock");
    for (label, projectors) in [("clifford", false), ("general", true)] {
        let mut same = 0;
        for case in 0..pairs {
            let mut rng = stream(seed, &[0x2B, projectors as u64, case as u64]);
            let n = 1 + case % 3;
            let a = random_sequence_channel(n, projectors, &mut rng);
            let b = partner(&a, projectors, &mut rng);
            let outcome = (|| -> Result<Option<String>> {
                let truth = max_abs(&(z_block_of(&a)? - z_block_of(&b)?)) <= 1e-9;
                same += usize::from(truth);
                let fast = if projectors { same_z_block_general(&a, &b)? } else { same_z_block_clifford(&a, &b)? };
                Ok((fast != truth).then(|| format!("{label} pair {case}: {a} vs {b}: algorithm {fast}, dense {truth}")))
            })();
            report.record_result(outcome);
        }
        report.record(same > 0 && same < pairs, || format!("{label}: degenerate pair mix ({same} equal of {pairs})"));
    }
    report
}

/// Two-qubit model with `Pr(N) = 0.1` mixing Pauli and unitary terms.
pub fn neumann_test_model() -> Result<GlobalNoiseModel> {
    let xx = BasisChannel::pauli("XX".parse()?);
    let zi = BasisChannel::pauli("ZI".parse()?);
    let h = BasisChannel::sequence(2, vec![Op::Gate(Gate::H(0))])?;
    GlobalNoiseModel::new(
        2,
        1.0,
        0.9,
        vec![
            NoiseTerm { channel: xx, prob: 0.04, negative: false },
            NoiseTerm { channel: zi, prob: 0.03, negative: true },
            NoiseTerm { channel: h, prob: 0.03, negative: false },
        ],
    )
}

/// Result of the Neumann-series Monte-Carlo check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannCheck {
    pub draws: usize,
    pub weight: f64,
    pub weight_constant: bool,
    pub max_z_score: f64,
    pub exact_entries_ok: bool,
}

/// Monte-Carlo mean of `sampled inverse * E` against the identity PTM.
pub fn neumann_check(model: &GlobalNoiseModel, draws: usize, seed: u64) -> Result<NeumannCheck> {
    let noise = model.ptm()?;
    let gamma = model.gamma()?;
    let mut rng = stream(seed, &[0x4E]);
    let mut products: HashMap<String, DMatrix<f64>> = HashMap::new();
    let mut counts: HashMap<(String, bool), usize> = HashMap::new();
    let mut weight_constant = true;
    for _ in 0..draws {
        let (w, ch) = model.neumann_sample(&mut rng)?;
        weight_constant &= w.abs() == gamma;
        let key = ch.to_string();
        if !products.contains_key(&key) {
            products.insert(key.clone(), ch.ptm()?.compose(&noise)?.matrix().clone());
        }
        *counts.entry((key, w < 0.0)).or_default() += 1;
    }
    let dim = noise.dim();
    let mut sum = DMatrix::<f64>::zeros(dim, dim);
    let mut sum_sq = DMatrix::<f64>::zeros(dim, dim);
    for ((key, negative), count) in &counts {
        let w = if *negative { -gamma } else { gamma };
        let m = &products[key] * w;
        sum += &m * *count as f64;
        sum_sq += m.component_mul(&m) * *count as f64;
    }
    let nf = draws as f64;
    let mut max_z: f64 = 0.0;
    let mut exact_ok = true;
    for r in 0..dim {
        for c in 0..dim {
            let mean = sum[(r, c)] / nf;
            let var = (sum_sq[(r, c)] / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
            let se = (var / nf).sqrt();
            let target = if r == c { 1.0 } else { 0.0 };
            if se < 1e-12 {
                exact_ok &= (mean - target).abs() <= 1e-9;
            } else {
                max_z = max_z.max((mean - target).abs() / se);
            }
        }
    }
    Ok(NeumannCheck { draws, weight: gamma, weight_constant, max_z_score: max_z, exact_entries_ok: exact_ok })
}

pub fn neumann_suite(draws: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("neumann");
    let model = neumann_test_model()?;
    let check = neumann_check(&model, draws, seed)?;
    report.record((check.weight - 1.25).abs() < 1e-12 && check.weight_constant, || {
        format!("weight {} (constant: {})", check.weight, check.weight_constant)
    });
    report.record(check.max_z_score <= 5.0 && check.exact_entries_ok, || {
        format!("max z-score {} (exact entries ok: {})", check.max_z_score, check.exact_entries_ok)
    });
    Ok(report)
}

/// Noisy shadow norm orderings and the noiseless shadow norm.
pub fn norms_suite(samples: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("norms");
    let n = 3;
    let cases = [
        (EnsembleSpec::global(n), NoiseFamily::None),
        (EnsembleSpec::global(n), NoiseFamily::LocalBitflip { p: 0.1 }),
        (EnsembleSpec::global(n), NoiseFamily::GlobalDepolFirstOrder { p: 0.1 }),
        (EnsembleSpec::local(n), NoiseFamily::TerminalDepolarizing { p: 0.1 }),
    ];
    for (i, (spec, noise)) in cases.into_iter().enumerate() {
        let setup = ShadowSetup::fidelity(StabilizerTableau::ghz(n), spec, noise.clone());
        let norms = estimate_shadow_norms(&setup, samples, seed.wrapping_add(i as u64))?;
        let se = (norms.ns1_se.powi(2) + norms.ns2_se.powi(2)).sqrt();
        report.record(norms.ns2 <= norms.ns1 + 3.0 * se, || {
            format!("{noise:?}: NS2 {} exceeds NS1 {} by more than 3 SE", norms.ns2, norms.ns1)
        });
        if i == 0 {
            let exact = global_projector_shadow_norm_sq(n);
            report.record((norms.ns1 - exact).abs() <= 5.0 * norms.ns1_se.max(1e-12), || {
                format!("noiseless NS1 {} vs exact {exact} (SE {})", norms.ns1, norms.ns1_se)
            });
        }
    }
    Ok(report)
}
