//! Classically simulable basis channels and the universal single-qubit basis.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::circuit::{CliffordCircuit, Gate};
use crate::clifford::single_qubit_cliffords;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::ptm::{dense, Ptm};
use crate::stabilizer::{run_channel_sequence, Axis, Op, StabilizerTableau};

/// A channel `rho -> K rho K^dagger` with `K` a product of Clifford gates,
/// Pauli strings and Pauli-eigenbasis projectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BasisChannel {
    Identity { n: usize },
    /// Conjugation by a Pauli string (stored sign-free).
    Pauli(PauliString),
    Sequence { n: usize, ops: Vec<Op> },
}

fn op_qubits(op: &Op) -> Vec<usize> {
    match op {
        Op::Gate(g) => {
            let (a, b) = g.qubits();
            std::iter::once(a).chain(b).collect()
        }
        Op::Pauli(p) => (0..p.n()).filter(|q| (p.support() >> q) & 1 == 1).collect(),
        Op::Project { qubit, .. } => vec![*qubit],
    }
}

impl BasisChannel {
    pub fn identity(n: usize) -> Self {
        BasisChannel::Identity { n }
    }

    pub fn pauli(p: PauliString) -> Self {
        if p.is_identity() {
            BasisChannel::Identity { n: p.n() }
        } else {
            BasisChannel::Pauli(p.unsigned())
        }
    }

    pub fn sequence(n: usize, ops: Vec<Op>) -> Result<Self> {
        for op in &ops {
            if let Op::Pauli(p) = op {
                if p.n() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: p.n() });
                }
            }
            for q in op_qubits(op) {
                if q >= n {
                    return Err(Error::InvalidQubit { index: q + 1, n });
                }
            }
            if let Op::Gate(Gate::Cnot(c, t)) = op {
                if c == t {
                    return Err(Error::Parse("CNOT control and target coincide".into()));
                }
            }
        }
        Ok(if ops.is_empty() { BasisChannel::Identity { n } } else { BasisChannel::Sequence { n, ops } })
    }

    pub fn n(&self) -> usize {
        match self {
            BasisChannel::Identity { n } | BasisChannel::Sequence { n, .. } => *n,
            BasisChannel::Pauli(p) => p.n(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, BasisChannel::Identity { .. })
    }

    pub fn as_pauli(&self) -> Option<PauliString> {
        match self {
            BasisChannel::Identity { n } => Some(PauliString::identity(*n)),
            BasisChannel::Pauli(p) => Some(*p),
            BasisChannel::Sequence { .. } => None,
        }
    }

    pub fn has_projector(&self) -> bool {
        match self {
            BasisChannel::Sequence { ops, .. } => ops.iter().any(Op::is_projector),
            _ => false,
        }
    }

    /// The elementary operations, in time order.
    pub fn ops(&self) -> Vec<Op> {
        match self {
            BasisChannel::Identity { .. } => Vec::new(),
            BasisChannel::Pauli(p) => vec![Op::Pauli(*p)],
            BasisChannel::Sequence { ops, .. } => ops.clone(),
        }
    }

    /// `next` applied after `self`.
    pub fn then(&self, next: &BasisChannel) -> BasisChannel {
        match (self, next) {
            (BasisChannel::Identity { .. }, _) => next.clone(),
            (_, BasisChannel::Identity { .. }) => self.clone(),
            (BasisChannel::Pauli(a), BasisChannel::Pauli(b)) => BasisChannel::pauli(a.mul(b).1),
            _ => {
                let mut ops = self.ops();
                ops.extend(next.ops());
                BasisChannel::Sequence { n: self.n(), ops }
            }
        }
    }

    /// `U B U^dagger` for the ideal tail `U` that follows the channel.
    pub fn propagate(&self, tail: &CliffordCircuit) -> BasisChannel {
        match self {
            BasisChannel::Identity { .. } => self.clone(),
            BasisChannel::Pauli(p) => {
                let mut q = *p;
                for &g in tail.gates() {
                    q.apply_gate(g);
                }
                BasisChannel::pauli(q)
            }
            BasisChannel::Sequence { n, ops } => {
                if tail.is_empty() {
                    return self.clone();
                }
                let mut out: Vec<Op> = tail.inverse().gates().iter().map(|&g| Op::Gate(g)).collect();
                out.extend(ops.iter().copied());
                out.extend(tail.gates().iter().map(|&g| Op::Gate(g)));
                BasisChannel::Sequence { n: *n, ops: out }
            }
        }
    }

    /// Place a channel defined on `qubits.len()` qubits into an `n`-qubit register.
    pub fn embed(&self, n: usize, qubits: &[usize]) -> Result<BasisChannel> {
        if qubits.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: qubits.len() });
        }
        if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
            return Err(Error::InvalidQubit { index: q + 1, n });
        }
        let map_mask = |m: u64| -> u64 {
            qubits.iter().enumerate().filter(|(i, _)| (m >> i) & 1 == 1).fold(0, |acc, (_, &q)| acc | (1 << q))
        };
        let map_pauli = |p: &PauliString| PauliString::new(n, p.sign(), map_mask(p.z_mask()), map_mask(p.x_mask()));
        Ok(match self {
            BasisChannel::Identity { .. } => BasisChannel::Identity { n },
            BasisChannel::Pauli(p) => BasisChannel::pauli(map_pauli(p)?),
            BasisChannel::Sequence { ops, .. } => {
                let mapped = ops
                    .iter()
                    .map(|op| {
                        Ok(match *op {
                            Op::Gate(Gate::H(r)) => Op::Gate(Gate::H(qubits[r])),
                            Op::Gate(Gate::S(r)) => Op::Gate(Gate::S(qubits[r])),
                            Op::Gate(Gate::Cnot(c, t)) => Op::Gate(Gate::Cnot(qubits[c], qubits[t])),
                            Op::Pauli(p) => Op::Pauli(map_pauli(&p)?),
                            Op::Project { qubit, axis, outcome } => Op::Project { qubit: qubits[qubit], axis, outcome },
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                BasisChannel::Sequence { n, ops: mapped }
            }
        })
    }

    pub fn apply_to(&self, t: &mut StabilizerTableau) {
        match self {
            BasisChannel::Identity { .. } => {}
            BasisChannel::Pauli(p) => t.apply_pauli(p),
            BasisChannel::Sequence { ops, .. } => {
                for op in ops {
                    t.apply_op(op);
                    if t.trace_factor().is_zero() {
                        break;
                    }
                }
            }
        }
    }

    /// The (unnormalized) output tableau on input `|b>`.
    pub fn on_basis_state(&self, b: u64) -> Result<StabilizerTableau> {
        run_channel_sequence(self.n(), b, &self.ops())
    }

    pub fn kraus(&self) -> dense::KrausChannel {
        dense::KrausChannel::from_ops(&self.ops(), self.n())
    }

    pub fn ptm(&self) -> Result<Ptm> {
        match self {
            BasisChannel::Identity { n } => Ptm::identity(*n),
            BasisChannel::Pauli(p) => Ptm::of_pauli_channel(p.n(), &[(*p, 1.0)]),
            BasisChannel::Sequence { n, ops } => Ptm::of_ops(*n, ops),
        }
    }
}

impl fmt::Display for BasisChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisChannel::Identity { .. } => f.write_str("I"),
            BasisChannel::Pauli(p) => write!(f, "{p}"),
            BasisChannel::Sequence { ops, .. } => {
                let parts: Vec<String> = ops
                    .iter()
                    .map(|op| match op {
                        Op::Gate(g) => g.to_string(),
                        Op::Pauli(p) => format!("P {p}"),
                        Op::Project { qubit, axis, outcome } => {
                            format!("PROJ {:?}{} {}", axis, if *outcome { "-" } else { "+" }, qubit + 1)
                        }
                    })
                    .collect();
                write!(f, "[{}]", parts.join("; "))
            }
        }
    }
}

fn vec_of(ptm: &Ptm) -> DVector<f64> {
    let m = ptm.matrix();
    DVector::from_fn(16, |j, _| m[(j / 4, j % 4)])
}

fn build_single_qubit_basis() -> (Vec<BasisChannel>, DMatrix<f64>) {
    let mut candidates: Vec<BasisChannel> = vec![BasisChannel::identity(1)];
    for p in ["X", "Y", "Z"] {
        candidates.push(BasisChannel::pauli(p.parse().expect("literal Pauli")));
    }
    let cliffords: Vec<Vec<Op>> =
        single_qubit_cliffords().iter().map(|t| t.synthesize().gates().iter().map(|&g| Op::Gate(g)).collect()).collect();
    for ops in &cliffords {
        candidates.push(BasisChannel::sequence(1, ops.clone()).expect("single-qubit ops"));
    }
    for axis in [Axis::Z, Axis::X, Axis::Y] {
        for outcome in [false, true] {
            for ops in &cliffords {
                let mut seq = vec![Op::Project { qubit: 0, axis, outcome }];
                seq.extend(ops.iter().copied());
                candidates.push(BasisChannel::sequence(1, seq).expect("single-qubit ops"));
            }
        }
    }
    let mut chosen: Vec<BasisChannel> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    let mut columns: Vec<DVector<f64>> = Vec::new();
    for c in candidates {
        let v = vec_of(&c.ptm().expect("single qubit"));
        let mut r = v.clone();
        for q in &ortho {
            let proj = q.dot(&r);
            r -= q * proj;
        }
        let norm = r.norm();
        if norm > 1e-8 {
            ortho.push(r / norm);
            columns.push(v);
            chosen.push(c);
        }
        if chosen.len() == 16 {
            break;
        }
    }
    assert_eq!(chosen.len(), 16, "candidate set spans the single-qubit PTM space");
    let m = DMatrix::from_columns(&columns);
    let minv = m.try_inverse().expect("basis columns are independent");
    (chosen, minv)
}

fn single_qubit_data() -> &'static (Vec<BasisChannel>, DMatrix<f64>) {
    static DATA: OnceLock<(Vec<BasisChannel>, DMatrix<f64>)> = OnceLock::new();
    DATA.get_or_init(build_single_qubit_basis)
}

/// The 16 single-qubit basis channels spanning all linear maps on one qubit.
pub fn single_qubit_basis() -> &'static [BasisChannel] {
    &single_qubit_data().0
}

/// Largest register for which generic channel decomposition is offered.
pub const MAX_DECOMPOSE_QUBITS: usize = 3;

/// Tensor product of single-qubit basis elements, `indices[r]` on qubit `r`.
pub fn tensor_basis_channel(indices: &[usize]) -> BasisChannel {
    let n = indices.len();
    let basis = single_qubit_basis();
    let mut ops = Vec::new();
    for (r, &k) in indices.iter().enumerate() {
        for op in basis[k].ops() {
            ops.push(match op {
                Op::Pauli(p) => Op::Pauli(
                    PauliString::new(n, false, p.z_mask() << r, p.x_mask() << r).expect("qubit within register"),
                ),
                other => other.shifted(n, r),
            });
        }
    }
    let all_pauli = ops.iter().all(|op| matches!(op, Op::Pauli(_)));
    if all_pauli {
        let mut acc = PauliString::identity(n);
        for op in &ops {
            if let Op::Pauli(p) = op {
                acc = acc.mul(p).1;
            }
        }
        return BasisChannel::pauli(acc);
    }
    BasisChannel::sequence(n, ops).expect("tensor ops within register")
}

/// Coefficients of `ptm` over the tensor-product universal basis.
pub fn decompose(ptm: &Ptm) -> Result<Vec<(BasisChannel, f64)>> {
    let n = ptm.n();
    if n > MAX_DECOMPOSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DECOMPOSE_QUBITS));
    }
    let minv = &single_qubit_data().1;
    let total = 1usize << (4 * n);
    let mat = ptm.matrix();
    // Regroup the matrix so each qubit contributes one 16-valued digit (row digit * 4 + column digit).
    let mut t = vec![0.0; total];
    for (j, slot) in t.iter_mut().enumerate() {
        let (mut row, mut col) = (0usize, 0usize);
        for r in 0..n {
            let digit = (j >> (4 * r)) & 15;
            row |= (digit / 4) << (2 * r);
            col |= (digit % 4) << (2 * r);
        }
        *slot = mat[(row, col)];
    }
    for r in 0..n {
        let stride = 1usize << (4 * r);
        let mut next = vec![0.0; total];
        for (j, out) in next.iter_mut().enumerate() {
            let k = (j / stride) % 16;
            let base = j - k * stride;
            *out = (0..16).map(|m| minv[(k, m)] * t[base + m * stride]).sum();
        }
        t = next;
    }
    let mut terms = Vec::new();
    for (j, &q) in t.iter().enumerate() {
        if q.abs() > 1e-12 {
            let indices: Vec<usize> = (0..n).map(|r| (j >> (4 * r)) & 15).collect();
            terms.push((tensor_basis_channel(&indices), q));
        }
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptm::dense::KrausChannel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn basis_starts_with_paulis() {
        let b = single_qubit_basis();
        assert_eq!(b.len(), 16);
        assert!(b[0].is_identity());
        assert_eq!(b[1], BasisChannel::pauli(p("X")));
        assert!(b.iter().any(BasisChannel::has_projector));
    }

    #[test]
    fn propagation_examples() {
        let xx = BasisChannel::pauli(p("XX"));
        assert_eq!(xx.propagate(&CliffordCircuit::empty(2)), xx);
        let cx = CliffordCircuit::new(2, vec![Gate::Cnot(0, 1)]).unwrap();
        assert_eq!(BasisChannel::pauli(p("XI")).propagate(&cx), xx);
        let h = CliffordCircuit::new(1, vec![Gate::H(0)]).unwrap();
        assert_eq!(BasisChannel::pauli(p("Z")).propagate(&h), BasisChannel::pauli(p("X")));
    }

    #[test]
    fn propagated_sequence_matches_dense() {
        let c = CliffordCircuit::parse(2, "H 1\nCNOT 1 2\nS 2").unwrap();
        let b = BasisChannel::sequence(2, vec![Op::Project { qubit: 0, axis: Axis::X, outcome: true }, Op::Gate(Gate::S(1))])
            .unwrap();
        let prop = b.propagate(&c).ptm().unwrap();
        let u = Ptm::of_unitary(&c).unwrap();
        let lhs = prop.compose(&u).unwrap();
        let rhs = u.compose(&b.ptm().unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn decomposition_reconstructs_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=2 {
            let target = Ptm::of_kraus(&KrausChannel::random(n, 2, &mut rng)).unwrap();
            let terms = decompose(&target).unwrap();
            let ptms: Vec<Ptm> = terms.iter().map(|(c, _)| c.ptm().unwrap()).collect();
            let refs: Vec<(f64, &Ptm)> = terms.iter().zip(&ptms).map(|((_, q), e)| (*q, e)).collect();
            let rebuilt = Ptm::linear_combination(n, &refs).unwrap();
            assert!(rebuilt.max_abs_diff(&target) < 1e-10);
        }
    }

    #[test]
    fn embed_places_ops() {
        let b = BasisChannel::pauli(p("XZ"));
        let e = b.embed(3, &[2, 0]).unwrap();
        assert_eq!(e, BasisChannel::pauli(p("ZIX")));
    }
}
