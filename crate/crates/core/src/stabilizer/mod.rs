//! Tableau simulation of stabilizer states with non-trace-preserving
//! projectors. A tableau holds `n` commuting generators and a trace factor
//! `g` so that the represented operator is `g * prod_j (I + S_j) / 2`.

mod echelon;
mod overlap;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use echelon::{row_echelon, BasisSupport, EchelonForm};
pub use overlap::{common_stabilizers, overlap_magnitude, CommonStabilizers};

use crate::circuit::{CliffordCircuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, MAX_QUBITS};

/// Trace factor `g`, either zero or `2^-exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceFactor {
    zero: bool,
    exp: u32,
}

impl TraceFactor {
    pub const ONE: TraceFactor = TraceFactor { zero: false, exp: 0 };
    pub const ZERO: TraceFactor = TraceFactor { zero: true, exp: 0 };

    pub fn pow2_neg(exp: u32) -> Self {
        Self { zero: false, exp }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// The exponent `m` in `g = 2^-m`, or `None` for `g = 0`.
    pub fn exponent(&self) -> Option<u32> {
        (!self.zero).then_some(self.exp)
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            (-(self.exp as f64)).exp2()
        }
    }

    pub fn halve(&mut self) {
        if !self.zero {
            self.exp += 1;
        }
    }

    pub fn annihilate(&mut self) {
        *self = Self::ZERO;
    }
}

impl fmt::Display for TraceFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.zero {
            f.write_str("g=0")
        } else {
            write!(f, "g=2^-{}", self.exp)
        }
    }
}

/// Eigenbasis of a single-qubit projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Elementary operation of a universal basis channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Gate(Gate),
    /// Conjugation by a Pauli string (its sign is irrelevant).
    Pauli(PauliString),
    /// Projector onto the `(-1)^outcome` eigenspace of the axis Pauli on `qubit`.
    Project { qubit: usize, axis: Axis, outcome: bool },
}

impl Op {
    pub fn is_projector(&self) -> bool {
        matches!(self, Op::Project { .. })
    }

    /// Expand into gates, Paulis and Z-basis projectors only.
    pub fn compile(&self) -> Vec<Op> {
        match *self {
            Op::Project { qubit, axis: Axis::X, outcome } => vec![
                Op::Gate(Gate::H(qubit)),
                Op::Project { qubit, axis: Axis::Z, outcome },
                Op::Gate(Gate::H(qubit)),
            ],
            Op::Project { qubit, axis: Axis::Y, outcome } => vec![
                Op::Gate(Gate::S(qubit)),
                Op::Gate(Gate::S(qubit)),
                Op::Gate(Gate::S(qubit)),
                Op::Gate(Gate::H(qubit)),
                Op::Project { qubit, axis: Axis::Z, outcome },
                Op::Gate(Gate::H(qubit)),
                Op::Gate(Gate::S(qubit)),
            ],
            op => vec![op],
        }
    }

    /// The same operation with qubit indices shifted by `offset` inside an `n`-qubit register.
    pub fn shifted(&self, n: usize, offset: usize) -> Op {
        match *self {
            Op::Gate(g) => Op::Gate(g.shifted(offset)),
            Op::Pauli(p) => Op::Pauli(PauliString::from_parts(
                n,
                false,
                p.z_mask() << offset,
                p.x_mask() << offset,
            )),
            Op::Project { qubit, axis, outcome } => Op::Project { qubit: qubit + offset, axis, outcome },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StabilizerTableau {
    n: usize,
    rows: Vec<PauliString>,
    g: TraceFactor,
}

impl StabilizerTableau {
    /// Computational basis state `|b>`; bit `r` of `b` is qubit `r + 1`.
    pub fn basis_state(n: usize, b: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_QUBITS));
        }
        let rows = (0..n).map(|r| PauliString::single_z(n, r).with_sign((b >> r) & 1 == 1)).collect();
        Ok(Self { n, rows, g: TraceFactor::ONE })
    }

    pub fn zero_state(n: usize) -> Self {
        Self::basis_state(n, 0).expect("qubit count checked by caller")
    }

    /// The state `C|0...0>`.
    pub fn from_circuit(c: &CliffordCircuit) -> Self {
        let mut t = Self::zero_state(c.n());
        t.apply_circuit(c);
        t
    }

    pub fn ghz(n: usize) -> Self {
        Self::from_circuit(&CliffordCircuit::ghz_preparation(n))
    }

    /// Build from explicit generators; they must commute pairwise and be independent.
    pub fn from_generators(n: usize, rows: Vec<PauliString>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rows.len() });
        }
        for r in &rows {
            if r.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.n() });
            }
        }
        for i in 0..n {
            for j in 0..i {
                if !rows[i].commutes_with(&rows[j]) {
                    return Err(Error::Parse(format!("generators {} and {} anticommute", rows[j], rows[i])));
                }
            }
        }
        let t = Self { n, rows, g: TraceFactor::ONE };
        if t.rank() != n {
            return Err(Error::Parse("generators are not independent".into()));
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliString] {
        &self.rows
    }

    pub fn trace_factor(&self) -> TraceFactor {
        self.g
    }

    pub fn set_trace_factor(&mut self, g: TraceFactor) {
        self.g = g;
    }

    pub fn apply_gate(&mut self, gate: Gate) {
        for row in &mut self.rows {
            row.apply_gate(gate);
        }
    }

    pub fn apply_circuit(&mut self, c: &CliffordCircuit) {
        for &g in c.gates() {
            self.apply_gate(g);
        }
    }

    /// Conjugation by a Pauli string.
    pub fn apply_pauli(&mut self, p: &PauliString) {
        for row in &mut self.rows {
            row.apply_pauli(p);
        }
    }

    pub fn apply_op(&mut self, op: &Op) {
        match op {
            Op::Gate(g) => self.apply_gate(*g),
            Op::Pauli(p) => self.apply_pauli(p),
            Op::Project { qubit, axis: Axis::Z, outcome } => self.apply_projector(*qubit, *outcome),
            other => {
                for inner in other.compile() {
                    self.apply_op(&inner);
                }
            }
        }
    }

    fn anticommuting_rows(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows.iter().enumerate().filter(move |(_, row)| (row.x_mask() >> r) & 1 == 1).map(|(i, _)| i)
    }

    /// Reduce so that exactly one row anticommutes with `Z_r`; returns its index.
    fn isolate_pivot(&mut self, r: usize) -> Option<usize> {
        let mut it = self.anticommuting_rows(r);
        let pivot = it.next()?;
        let others: Vec<usize> = it.collect();
        let pivot_row = self.rows[pivot];
        for q in others {
            self.rows[q] = self.rows[q].mul_commuting(&pivot_row);
        }
        Some(pivot)
    }

    /// Computational-basis measurement of qubit `r` (0-based).
    pub fn measure_z<R: Rng + ?Sized>(&mut self, r: usize, rng: &mut R) -> Result<bool> {
        if self.g.is_zero() {
            return Err(Error::ZeroTrace);
        }
        if r >= self.n {
            return Err(Error::InvalidQubit { index: r + 1, n: self.n });
        }
        if let Some(pivot) = self.isolate_pivot(r) {
            let outcome: bool = rng.gen();
            self.rows[pivot] = PauliString::single_z(self.n, r).with_sign(outcome);
            Ok(outcome)
        } else {
            let z = PauliString::single_z(self.n, r);
            let sign = self.sign_in_group(&z).expect("Z_r commutes with a full-rank group, so it is a member");
            Ok(sign)
        }
    }

    /// Apply the projector onto outcome `outcome` of qubit `r`, tracking the trace.
    pub fn apply_projector(&mut self, r: usize, outcome: bool) {
        if self.g.is_zero() {
            return;
        }
        if let Some(pivot) = self.isolate_pivot(r) {
            self.g.halve();
            self.rows[pivot] = PauliString::single_z(self.n, r).with_sign(outcome);
        } else {
            let z = PauliString::single_z(self.n, r);
            match self.sign_in_group(&z) {
                Some(forced) if forced == outcome => {}
                _ => self.g.annihilate(),
            }
        }
    }

    /// Measure all qubits; returns the outcome bitstring.
    pub fn measure_all<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<u64> {
        let mut b = 0u64;
        for r in 0..self.n {
            if self.measure_z(r, rng)? {
                b |= 1 << r;
            }
        }
        Ok(b)
    }

    /// If `+-P` belongs to the stabilizer group, the sign bit of the member.
    pub fn sign_in_group(&self, p: &PauliString) -> Option<bool> {
        let ech = echelon::reduce_rows(&self.rows, self.n);
        echelon::express_in(&ech, p).map(|acc| acc.sign())
    }

    /// GF(2) rank of the generator matrix.
    pub fn rank(&self) -> usize {
        echelon::reduce_rows(&self.rows, self.n).len()
    }

    /// Outcome distribution of a full computational-basis measurement.
    pub fn basis_support(&self) -> Result<BasisSupport> {
        Ok(row_echelon(self)?.basis_support())
    }

    /// Text dump: one generator per line plus a trace-factor trailer.
    pub fn dump(&self) -> String {
        self.to_string()
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut g = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("g=") {
                g = Some(if rest == "0" {
                    TraceFactor::ZERO
                } else {
                    let m = rest
                        .strip_prefix("2^-")
                        .and_then(|m| m.parse::<u32>().ok())
                        .ok_or_else(|| Error::Parse(format!("bad trace factor line {line:?}")))?;
                    TraceFactor::pow2_neg(m)
                });
            } else {
                rows.push(line.parse::<PauliString>()?);
            }
        }
        let n = rows.len();
        let mut t = Self::from_generators(n, rows)?;
        t.g = g.ok_or_else(|| Error::Parse("missing trace factor line".into()))?;
        Ok(t)
    }
}

impl fmt::Display for StabilizerTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{row}")?;
        }
        writeln!(f, "{}", self.g)
    }
}

/// Simulate a universal-basis op sequence on `|b>`.
pub fn run_channel_sequence(n: usize, b: u64, ops: &[Op]) -> Result<StabilizerTableau> {
    let mut t = StabilizerTableau::basis_state(n, b)?;
    for op in ops {
        t.apply_op(op);
        if t.g.is_zero() {
            break;
        }
    }
    Ok(t)
}
