//! Clifford circuits over the gate set {H, S, CNOT}.
//!
//! Qubit indices are 0-based in memory. The text format is 1-based, one gate
//! per line: `H 1`, `S 3`, `CNOT 1 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pauli::MAX_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    S(usize),
    /// Control, target.
    Cnot(usize, usize),
}

impl Gate {
    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot(..))
    }

    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H(r) | Gate::S(r) => (r, None),
            Gate::Cnot(c, t) => (c, Some(t)),
        }
    }

    /// The same gate acting on shifted qubit indices.
    pub fn shifted(&self, offset: usize) -> Gate {
        match *self {
            Gate::H(r) => Gate::H(r + offset),
            Gate::S(r) => Gate::S(r + offset),
            Gate::Cnot(c, t) => Gate::Cnot(c + offset, t + offset),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let (a, b) = self.qubits();
        for q in std::iter::once(a).chain(b) {
            if q >= n {
                return Err(Error::InvalidQubit { index: q + 1, n });
            }
        }
        if let Gate::Cnot(c, t) = *self {
            if c == t {
                return Err(Error::Parse(format!("CNOT control and target coincide on qubit {}", c + 1)));
            }
        }
        Ok(())
    }

    /// Gates whose product, applied in order, implements the inverse.
    pub fn inverse(&self) -> Vec<Gate> {
        match *self {
            Gate::S(r) => vec![Gate::S(r); 3],
            g => vec![g],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(r) => write!(f, "H {}", r + 1),
            Gate::S(r) => write!(f, "S {}", r + 1),
            Gate::Cnot(c, t) => write!(f, "CNOT {} {}", c + 1, t + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordCircuit {
    n: usize,
    gates: Vec<Gate>,
}

impl CliffordCircuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_QUBITS));
        }
        for g in &gates {
            g.validate(n)?;
        }
        Ok(Self { n, gates })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, gates: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &CliffordCircuit) -> Result<()> {
        if other.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// Positions (0-based) of the CNOT gates.
    pub fn cnot_positions(&self) -> Vec<usize> {
        self.gates.iter().enumerate().filter(|(_, g)| g.is_two_qubit()).map(|(i, _)| i).collect()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// The ideal tail after the first `position` gates.
    pub fn tail(&self, position: usize) -> CliffordCircuit {
        Self { n: self.n, gates: self.gates[position.min(self.gates.len())..].to_vec() }
    }

    pub fn inverse(&self) -> CliffordCircuit {
        let gates = self.gates.iter().rev().flat_map(|g| g.inverse()).collect();
        Self { n: self.n, gates }
    }

    /// Embed into a larger register, shifting qubit indices by `offset`.
    pub fn embedded(&self, n: usize, offset: usize) -> Result<CliffordCircuit> {
        CliffordCircuit::new(n, self.gates.iter().map(|g| g.shifted(offset)).collect())
    }

    /// Circuit preparing the n-qubit GHZ state from `|0...0>`.
    pub fn ghz_preparation(n: usize) -> CliffordCircuit {
        let mut gates = Vec::with_capacity(n);
        if n > 0 {
            gates.push(Gate::H(0));
        }
        for t in 1..n {
            gates.push(Gate::Cnot(0, t));
        }
        Self { n, gates }
    }

    /// Parse the line-oriented text format; `n` fixes the register size.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or_default().to_ascii_uppercase();
            let args: Vec<usize> = parts
                .map(|a| {
                    a.parse::<usize>()
                        .ok()
                        .filter(|&v| v >= 1)
                        .ok_or_else(|| Error::Parse(format!("line {}: bad qubit index {a:?}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            let gate = match (name.as_str(), args.as_slice()) {
                ("H", [r]) => Gate::H(r - 1),
                ("S", [r]) => Gate::S(r - 1),
                ("CNOT" | "CX", [c, t]) => Gate::Cnot(c - 1, t - 1),
                _ => return Err(Error::Parse(format!("line {}: unrecognised gate {line:?}", lineno + 1))),
            };
            gates.push(gate);
        }
        Self::new(n, gates)
    }

    /// Parse text, inferring the register size from the largest index used.
    pub fn parse_infer(text: &str) -> Result<Self> {
        let loose = Self::parse(MAX_QUBITS, text)?;
        let n = loose
            .gates
            .iter()
            .map(|g| {
                let (a, b) = g.qubits();
                a.max(b.unwrap_or(0)) + 1
            })
            .max()
            .unwrap_or(0);
        Self::new(n, loose.gates)
    }
}

impl fmt::Display for CliffordCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for CliffordCircuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_infer(s)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    n: usize,
    gates: String,
}

impl Serialize for CliffordCircuit {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitRepr { n: self.n, gates: self.to_string() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CliffordCircuit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CircuitRepr::deserialize(deserializer)?;
        CliffordCircuit::parse(repr.n, &repr.gates).map_err(serde::de::Error::custom)
    }
}
