//! Merging basis channels that act identically after computational-basis measurement.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::channel::BasisChannel;
use crate::error::{Error, Result};
use crate::noise::{GlobalNoiseModel, NoiseTerm, QuasiProbDecomposition, ZERO_COEFF};
use crate::pauli::PauliString;
use crate::stabilizer::{row_echelon, Op, StabilizerTableau, TraceFactor};

/// Canonical fingerprint of the measurement-visible block of a basis channel.
///
/// Two channels have equal fingerprints exactly when their PTMs agree on every
/// entry between Z-type Paulis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ZBlockKey {
    /// Reduced basis of `{w : B(Z_w) is Z-type}` with the signed image of each basis word.
    Clifford(Vec<(u64, PauliString)>),
    /// Trace factor and X-free stabilizers of the Choi state.
    Choi(TraceFactor, Vec<PauliString>),
    /// The channel annihilates every input.
    Zero,
}

fn forward_image(ops: &[Op], start: PauliString) -> Result<PauliString> {
    let mut p = start;
    for op in ops {
        match op {
            Op::Gate(g) => p.apply_gate(*g),
            Op::Pauli(q) => p.apply_pauli(q),
            Op::Project { .. } => return Err(Error::ProjectorInClifford),
        }
    }
    Ok(p)
}

/// Fingerprint of a Clifford (projector-free) basis channel.
pub fn clifford_key(b: &BasisChannel) -> Result<ZBlockKey> {
    let n = b.n();
    if let Some(p) = b.as_pauli() {
        let x = p.x_mask();
        let pairs = (0..n).map(|i| (1u64 << i, PauliString::single_z(n, i).with_sign((x >> i) & 1 == 1))).collect();
        return Ok(ZBlockKey::Clifford(pairs));
    }
    let ops = b.ops();
    let images = (0..n).map(|i| forward_image(&ops, PauliString::single_z(n, i))).collect::<Result<Vec<_>>>()?;
    // Kernel of w -> x-part of the image of Z_w, by elimination with tags.
    let mut rows: Vec<(u64, u64)> = images.iter().enumerate().map(|(i, p)| (p.x_mask(), 1u64 << i)).collect();
    let mut kernel = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(found) = (r..rows.len()).find(|&i| (rows[i].0 >> col) & 1 == 1) else {
            continue;
        };
        rows.swap(r, found);
        let pivot = rows[r];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && (row.0 >> col) & 1 == 1 {
                row.0 ^= pivot.0;
                row.1 ^= pivot.1;
            }
        }
        r += 1;
    }
    kernel.extend(rows[r..].iter().map(|&(_, tag)| tag));
    let kernel = reduce_words(kernel);
    let pairs = kernel
        .into_iter()
        .map(|w| {
            let mut acc = PauliString::identity(n);
            for (i, img) in images.iter().enumerate() {
                if (w >> i) & 1 == 1 {
                    acc = acc.mul(img).1;
                }
            }
            (w, acc)
        })
        .collect();
    Ok(ZBlockKey::Clifford(pairs))
}

/// Reduced row-echelon basis of the span of bit words, pivots at the lowest set bit.
fn reduce_words(mut words: Vec<u64>) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for col in 0..64 {
        let Some(pos) = words.iter().position(|w| (w >> col) & 1 == 1 && w & ((1u64 << col) - 1) == 0) else {
            continue;
        };
        let pivot = words.swap_remove(pos);
        for w in words.iter_mut().chain(out.iter_mut()) {
            if (*w >> col) & 1 == 1 {
                *w ^= pivot;
            }
        }
        out.push(pivot);
        words.retain(|&w| w != 0);
    }
    out
}

/// Fingerprint of any basis channel through its Choi state (registers up to 32 qubits).
pub fn choi_key(b: &BasisChannel) -> Result<ZBlockKey> {
    let n = b.n();
    if 2 * n > crate::pauli::MAX_QUBITS {
        return Err(Error::TooManyQubits(n, crate::pauli::MAX_QUBITS / 2));
    }
    let m = 2 * n;
    let mut gens = Vec::with_capacity(m);
    for i in 0..n {
        let pair = (1u64 << i) | (1u64 << (i + n));
        gens.push(PauliString::new(m, false, 0, pair)?);
        gens.push(PauliString::new(m, false, pair, 0)?);
    }
    let mut t = StabilizerTableau::from_generators(m, gens)?;
    for op in b.ops() {
        t.apply_op(&op.shifted(m, 0));
        if t.trace_factor().is_zero() {
            return Ok(ZBlockKey::Zero);
        }
    }
    match row_echelon(&t) {
        Ok(e) => Ok(ZBlockKey::Choi(e.trace_factor(), e.d_rows().to_vec())),
        Err(Error::ZeroTrace) => Ok(ZBlockKey::Zero),
        Err(e) => Err(e),
    }
}

/// Fingerprint using the cheapest exact method for the channel.
pub fn z_block_key(b: &BasisChannel) -> Result<ZBlockKey> {
    if b.has_projector() {
        choi_key(b)
    } else {
        clifford_key(b)
    }
}

/// Whether two projector-free basis channels share their measurement-visible block.
pub fn same_z_block_clifford(a: &BasisChannel, b: &BasisChannel) -> Result<bool> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    if a.has_projector() || b.has_projector() {
        return Err(Error::ProjectorInClifford);
    }
    Ok(clifford_key(a)? == clifford_key(b)?)
}

/// Whether two arbitrary basis channels share their measurement-visible block.
pub fn same_z_block_general(a: &BasisChannel, b: &BasisChannel) -> Result<bool> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    if !a.has_projector() && !b.has_projector() {
        return same_z_block_clifford(a, b);
    }
    Ok(choi_key(a)? == choi_key(b)?)
}

enum Keys {
    XMask(Vec<u64>),
    Full(Vec<ZBlockKey>),
}

fn keys_for(channels: &[&BasisChannel]) -> Result<Keys> {
    if channels.iter().all(|c| c.as_pauli().is_some()) {
        return Ok(Keys::XMask(channels.iter().map(|c| c.as_pauli().expect("checked").x_mask()).collect()));
    }
    let any_projector = channels.iter().any(|c| c.has_projector());
    let keys = channels
        .iter()
        .map(|c| if any_projector { choi_key(c) } else { clifford_key(c) })
        .collect::<Result<Vec<_>>>()?;
    Ok(Keys::Full(keys))
}

/// Class index of every term of `qpd` as used by [`compress`].
pub fn compression_classes(qpd: &QuasiProbDecomposition) -> Result<Vec<usize>> {
    let channels: Vec<&BasisChannel> = qpd.terms().iter().map(|(c, _)| c).collect();
    classify(&channels)
}

/// Class index of every channel (first-seen order).
fn classify(channels: &[&BasisChannel]) -> Result<Vec<usize>> {
    fn assign<K: std::hash::Hash + Eq>(keys: Vec<K>) -> Vec<usize> {
        let mut seen: HashMap<K, usize> = HashMap::new();
        keys.into_iter()
            .map(|k| {
                let next = seen.len();
                *seen.entry(k).or_insert(next)
            })
            .collect()
    }
    Ok(match keys_for(channels)? {
        Keys::XMask(k) => assign(k),
        Keys::Full(k) => assign(k),
    })
}

fn merge(n: usize, terms: &[(BasisChannel, f64)], classes: &[usize]) -> Result<QuasiProbDecomposition> {
    let count = classes.iter().copied().max().map_or(0, |m| m + 1);
    let mut reps: Vec<Option<BasisChannel>> = vec![None; count];
    let mut sums = vec![0.0; count];
    for ((c, q), &k) in terms.iter().zip(classes) {
        if reps[k].is_none() {
            reps[k] = Some(c.clone());
        }
        sums[k] += q;
    }
    let merged = reps.into_iter().zip(sums).map(|(r, s)| (r.expect("every class has a member"), s)).collect();
    QuasiProbDecomposition::new(n, merged)
}

/// Merge terms with equal measurement-visible blocks, keeping the first member of each class.
pub fn compress(qpd: &QuasiProbDecomposition) -> Result<QuasiProbDecomposition> {
    let channels: Vec<&BasisChannel> = qpd.terms().iter().map(|(c, _)| c).collect();
    let classes = classify(&channels)?;
    merge(qpd.n(), qpd.terms(), &classes)
}

/// Quadratic-time compression by direct pairwise comparison; used as a reference.
pub fn compress_pairwise(qpd: &QuasiProbDecomposition) -> Result<QuasiProbDecomposition> {
    let mut reps: Vec<&BasisChannel> = Vec::new();
    let mut classes = Vec::with_capacity(qpd.len());
    for (c, _) in qpd.terms() {
        let mut found = None;
        for (k, r) in reps.iter().enumerate() {
            if same_z_block_general(r, c)? {
                found = Some(k);
                break;
            }
        }
        classes.push(match found {
            Some(k) => k,
            None => {
                reps.push(c);
                reps.len() - 1
            }
        });
    }
    merge(qpd.n(), qpd.terms(), &classes)
}

/// Compress a global noise model; the identity class absorbs every equivalent term.
pub fn compress_global(model: &GlobalNoiseModel) -> Result<GlobalNoiseModel> {
    let n = model.n();
    let identity = BasisChannel::identity(n);
    let mut channels: Vec<&BasisChannel> = vec![&identity];
    channels.extend(model.terms().iter().map(|t| &t.channel));
    let classes = classify(&channels)?;
    let count = classes.iter().copied().max().map_or(0, |m| m + 1);
    let mut reps: Vec<Option<&BasisChannel>> = vec![None; count];
    let mut sums = vec![0.0; count];
    sums[classes[0]] += model.pr_identity();
    reps[classes[0]] = Some(&identity);
    for (t, &k) in model.terms().iter().zip(&classes[1..]) {
        if reps[k].is_none() {
            reps[k] = Some(&t.channel);
        }
        sums[k] += t.signed_prob();
    }
    let c_identity = sums[classes[0]];
    if c_identity <= 0.0 {
        return Err(Error::NotInvertible { pr_identity: c_identity, pr_noise: model.pr_noise() });
    }
    let others: Vec<(BasisChannel, f64)> = reps
        .into_iter()
        .zip(sums)
        .enumerate()
        .filter(|(k, (_, s))| *k != classes[0] && s.abs() > ZERO_COEFF)
        .map(|(_, (r, s))| (r.expect("every class has a member").clone(), s))
        .collect();
    let norm = c_identity + others.iter().map(|(_, s)| s.abs()).sum::<f64>();
    let terms = others
        .into_iter()
        .map(|(channel, s)| NoiseTerm { channel, prob: s.abs() / norm, negative: s < 0.0 })
        .collect();
    GlobalNoiseModel::new(n, model.eta() * norm, c_identity / norm, terms)
}

/// One merged class in a compression report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub representative: String,
    pub members: usize,
    pub coefficient: f64,
}

/// Outcome of compressing a decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub terms_before: usize,
    pub gamma_before: f64,
    pub gamma_after: f64,
    pub classes: Vec<ClassSummary>,
}

pub fn compression_report(qpd: &QuasiProbDecomposition) -> Result<CompressionReport> {
    let channels: Vec<&BasisChannel> = qpd.terms().iter().map(|(c, _)| c).collect();
    let classes = classify(&channels)?;
    let compressed = merge(qpd.n(), qpd.terms(), &classes)?;
    let mut members = vec![0usize; classes.iter().copied().max().map_or(0, |m| m + 1)];
    for &k in &classes {
        members[k] += 1;
    }
    let mut summaries = Vec::new();
    let mut coeffs = vec![0.0; members.len()];
    let mut reps: Vec<Option<String>> = vec![None; members.len()];
    for ((c, q), &k) in qpd.terms().iter().zip(&classes) {
        coeffs[k] += q;
        reps[k].get_or_insert_with(|| c.to_string());
    }
    for k in 0..members.len() {
        summaries.push(ClassSummary {
            representative: reps[k].clone().unwrap_or_default(),
            members: members[k],
            coefficient: coeffs[k],
        });
    }
    Ok(CompressionReport {
        terms_before: qpd.len(),
        gamma_before: qpd.gamma(),
        gamma_after: compressed.gamma(),
        classes: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::stabilizer::Axis;

    fn p(s: &str) -> BasisChannel {
        BasisChannel::pauli(s.parse().unwrap())
    }

    #[test]
    fn pauli_classes_follow_x_part() {
        assert!(same_z_block_clifford(&p("ZI"), &BasisChannel::identity(2)).unwrap());
        assert!(same_z_block_clifford(&p("XZ"), &p("YI")).unwrap());
        assert!(!same_z_block_clifford(&p("XI"), &p("IX")).unwrap());
    }

    #[test]
    fn hadamard_and_phase_variant_agree() {
        let h = BasisChannel::sequence(1, vec![Op::Gate(Gate::H(0))]).unwrap();
        let hs = BasisChannel::sequence(1, vec![Op::Gate(Gate::H(0)), Op::Gate(Gate::S(0))]).unwrap();
        assert!(same_z_block_clifford(&h, &hs).unwrap());
        assert!(!same_z_block_clifford(&h, &BasisChannel::identity(1)).unwrap());
    }

    #[test]
    fn projector_rejected_by_clifford_check() {
        let proj = BasisChannel::sequence(1, vec![Op::Project { qubit: 0, axis: Axis::Z, outcome: false }]).unwrap();
        assert_eq!(same_z_block_clifford(&proj, &p("X")), Err(Error::ProjectorInClifford));
        let hproj = BasisChannel::sequence(1, vec![Op::Project { qubit: 0, axis: Axis::X, outcome: false }]).unwrap();
        let hproj_minus =
            BasisChannel::sequence(1, vec![Op::Project { qubit: 0, axis: Axis::X, outcome: true }]).unwrap();
        assert!(same_z_block_general(&hproj, &hproj_minus).unwrap());
        assert!(!same_z_block_general(&proj, &hproj).unwrap());
    }

    #[test]
    fn compress_bitflip_pair() {
        let q = QuasiProbDecomposition::new(2, vec![(p("II"), 1.25), (p("ZZ"), -0.25), (p("XX"), 0.1)]).unwrap();
        let c = compress(&q).unwrap();
        assert_eq!(c.len(), 2);
        assert!((c.terms()[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(compress_pairwise(&q).unwrap(), c);
    }

    #[test]
    fn global_compression_absorbs_z_faults() {
        let m = GlobalNoiseModel::new(
            2,
            1.0,
            0.8,
            vec![
                NoiseTerm { channel: p("ZI"), prob: 0.1, negative: false },
                NoiseTerm { channel: p("XI"), prob: 0.1, negative: false },
            ],
        )
        .unwrap();
        let c = compress_global(&m).unwrap();
        assert_eq!(c.terms().len(), 1);
        assert!((c.gamma().unwrap() - 1.0 / 0.8).abs() < 1e-12);
        assert!(c.gamma().unwrap() <= m.gamma().unwrap());
    }
}
