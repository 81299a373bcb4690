//! Signed Pauli strings in the symplectic binary encoding.
//!
//! A string with sign bit `s`, Z-mask `z` and X-mask `x` denotes
//! `(-1)^s * prod_r (-i)^(z_r x_r) Z_r^(z_r) X_r^(x_r)`. With this phase
//! convention every bit pattern is a Hermitian operator and the four
//! single-qubit patterns `(z, x)` are exactly `I = (0,0)`, `Z = (1,0)`,
//! `X = (0,1)` and `Y = (1,1)`. Qubit 1 is the least significant bit of each mask.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circuit::{CliffordCircuit, Gate};
use crate::error::{Error, Result};

/// Largest register representable by a single mask word.
pub const MAX_QUBITS: usize = 64;

/// A power of `i`, stored as the exponent modulo 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(e: i64) -> Phase {
        Phase(e.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }

    /// The phase as a complex number `(re, im)`.
    pub fn to_complex(self) -> (f64, f64) {
        match self.0 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        }
    }
}

/// Mask with the low `n` bits set.
#[inline]
pub fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
fn parity(w: u64) -> bool {
    w.count_ones() & 1 == 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u8,
    sign: bool,
    z: u64,
    x: u64,
}

impl PauliString {
    pub fn new(n: usize, sign: bool, z: u64, x: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_QUBITS));
        }
        let m = low_mask(n);
        if z & !m != 0 || x & !m != 0 {
            return Err(Error::Parse(format!("mask exceeds {n} qubits")));
        }
        Ok(Self { n: n as u8, sign, z, x })
    }

    pub(crate) fn from_parts(n: usize, sign: bool, z: u64, x: u64) -> Self {
        debug_assert!(n <= MAX_QUBITS);
        debug_assert!(z & !low_mask(n) == 0 && x & !low_mask(n) == 0);
        Self { n: n as u8, sign, z, x }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_parts(n, false, 0, 0)
    }

    /// `Z` on a single qubit (0-based index).
    pub fn single_z(n: usize, q: usize) -> Self {
        Self::from_parts(n, false, 1 << q, 0)
    }

    pub fn single_x(n: usize, q: usize) -> Self {
        Self::from_parts(n, false, 0, 1 << q)
    }

    pub fn single_y(n: usize, q: usize) -> Self {
        Self::from_parts(n, false, 1 << q, 1 << q)
    }

    /// The Pauli-Z word with the given mask.
    pub fn z_word(n: usize, mask: u64) -> Self {
        Self::from_parts(n, false, mask, 0)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn sign(&self) -> bool {
        self.sign
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    /// Qubits on which the string acts non-trivially.
    pub fn support(&self) -> u64 {
        self.z | self.x
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn with_sign(self, sign: bool) -> Self {
        Self { sign, ..self }
    }

    pub fn unsigned(self) -> Self {
        self.with_sign(false)
    }

    pub fn negated(self) -> Self {
        Self { sign: !self.sign, ..self }
    }

    pub fn is_identity(&self) -> bool {
        self.z == 0 && self.x == 0
    }

    /// Membership in the sign-free Pauli-Z group.
    pub fn is_in_z_group(&self) -> bool {
        self.x == 0 && !self.sign
    }

    /// Letter on qubit `q` (0-based): one of `I`, `X`, `Y`, `Z`.
    pub fn letter(&self, q: usize) -> char {
        match ((self.z >> q) & 1, (self.x >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'Z',
            (0, 1) => 'X',
            _ => 'Y',
        }
    }

    fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n(), found: other.n() });
        }
        Ok(())
    }

    /// True iff the symplectic inner product with `other` vanishes.
    pub fn commutes_with(&self, other: &Self) -> bool {
        !parity((self.z & other.x) ^ (self.x & other.z))
    }

    /// Operator product `self * other`, returning the phase separately.
    ///
    /// Real phases are folded into the sign bit of the result (the returned
    /// phase is then `+1`); imaginary phases leave the result sign-free.
    pub fn mul(&self, other: &Self) -> (Phase, Self) {
        let (z1, x1, z2, x2) = (self.z, self.x, other.z, other.x);
        let y1 = z1 & x1;
        let xo1 = x1 & !z1;
        let zo1 = z1 & !x1;
        let plus = (y1 & z2 & !x2).count_ones()
            + (xo1 & z2 & x2).count_ones()
            + (zo1 & x2 & !z2).count_ones();
        let minus = (y1 & x2 & !z2).count_ones()
            + (xo1 & z2 & !x2).count_ones()
            + (zo1 & x2 & z2).count_ones();
        let e = plus as i64 - minus as i64 + 2 * (self.sign as i64 + other.sign as i64);
        let e = e.rem_euclid(4);
        let (phase, sign) = match e {
            0 => (Phase::ONE, false),
            2 => (Phase::ONE, true),
            1 => (Phase::I, false),
            _ => (Phase::MINUS_I, false),
        };
        (phase, Self { n: self.n, sign, z: z1 ^ z2, x: x1 ^ x2 })
    }

    /// Product of two commuting strings; the phase is always real.
    pub(crate) fn mul_commuting(&self, other: &Self) -> Self {
        let (phase, p) = self.mul(other);
        debug_assert!(phase == Phase::ONE, "product of commuting Paulis must be real");
        p
    }

    /// Conjugate by a single gate: `self <- G self G^dagger`.
    #[inline]
    pub fn apply_gate(&mut self, gate: Gate) {
        match gate {
            Gate::H(r) => {
                let zr = (self.z >> r) & 1;
                let xr = (self.x >> r) & 1;
                self.sign ^= zr & xr == 1;
                self.z = (self.z & !(1 << r)) | (xr << r);
                self.x = (self.x & !(1 << r)) | (zr << r);
            }
            Gate::S(r) => {
                let zr = (self.z >> r) & 1;
                let xr = (self.x >> r) & 1;
                self.sign ^= zr & xr == 1;
                self.z ^= xr << r;
            }
            Gate::Cnot(c, t) => {
                let zt = (self.z >> t) & 1;
                let xc = (self.x >> c) & 1;
                let xt = (self.x >> t) & 1;
                let zc = (self.z >> c) & 1;
                self.sign ^= zt & xc & (xt ^ zc ^ 1) == 1;
                self.z ^= zt << c;
                self.x ^= xc << t;
            }
        }
    }

    /// Conjugate by another Pauli: flips the sign iff the two anticommute.
    #[inline]
    pub fn apply_pauli(&mut self, p: &PauliString) {
        if !self.commutes_with(p) {
            self.sign = !self.sign;
        }
    }
}

/// Operator product with the phase returned separately.
pub fn pauli_multiply(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString)> {
    p.check_same_n(q)?;
    Ok(p.mul(q))
}

pub fn commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    p.check_same_n(q)?;
    Ok(p.commutes_with(q))
}

pub fn is_in_z_group(p: &PauliString) -> bool {
    p.is_in_z_group()
}

/// Returns `U P U^dagger` for the unitary `U` implemented by `c`.
pub fn conjugate_by_circuit(p: &PauliString, c: &CliffordCircuit) -> Result<PauliString> {
    if p.n() != c.n() {
        return Err(Error::DimensionMismatch { expected: c.n(), found: p.n() });
    }
    let mut out = *p;
    for &g in c.gates() {
        out.apply_gate(g);
    }
    Ok(out)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign {
            f.write_str("-")?;
        }
        for q in 0..self.n() {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses strings such as `-XIZY` (qubit 1 leftmost, optional sign).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sign, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let n = body.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_QUBITS));
        }
        let (mut z, mut x) = (0u64, 0u64);
        for (q, ch) in body.chars().enumerate() {
            match ch {
                'I' => {}
                'Z' => z |= 1 << q,
                'X' => x |= 1 << q,
                'Y' => {
                    z |= 1 << q;
                    x |= 1 << q;
                }
                other => return Err(Error::Parse(format!("invalid Pauli letter {other:?} in {s:?}"))),
            }
        }
        Ok(Self::from_parts(n, sign, z, x))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(pauli_multiply(&p("I"), &p("I")).unwrap(), (Phase::ONE, p("I")));
        assert_eq!(pauli_multiply(&p("Z"), &p("X")).unwrap(), (Phase::I, p("Y")));
        assert_eq!(pauli_multiply(&p("XX"), &p("XX")).unwrap(), (Phase::ONE, p("II")));
        assert_eq!(pauli_multiply(&p("X"), &p("Z")).unwrap(), (Phase::MINUS_I, p("Y")));
        assert_eq!(pauli_multiply(&p("Y"), &p("Y")).unwrap(), (Phase::ONE, p("I")));
        assert_eq!(pauli_multiply(&p("XX"), &p("YY")).unwrap(), (Phase::ONE, p("-ZZ")));
        assert!(pauli_multiply(&p("X"), &p("XX")).is_err());
    }

    #[test]
    fn commutation_examples() {
        assert!(commutes(&p("Z"), &p("Z")).unwrap());
        assert!(!commutes(&p("Z"), &p("X")).unwrap());
        assert!(commutes(&p("XX"), &p("ZZ")).unwrap());
    }

    #[test]
    fn z_group_membership() {
        assert!(p("IZ").is_in_z_group());
        assert!(!p("XI").is_in_z_group());
        assert!(!p("-Z").is_in_z_group());
    }

    #[test]
    fn conjugation_examples() {
        let h = CliffordCircuit::new(1, vec![Gate::H(0)]).unwrap();
        assert_eq!(conjugate_by_circuit(&p("Z"), &h).unwrap(), p("X"));
        let cx = CliffordCircuit::new(2, vec![Gate::Cnot(0, 1)]).unwrap();
        assert_eq!(conjugate_by_circuit(&p("XI"), &cx).unwrap(), p("XX"));
        assert_eq!(conjugate_by_circuit(&p("XZ"), &cx).unwrap(), p("-YY"));
        assert_eq!(conjugate_by_circuit(&p("YZ"), &cx).unwrap(), p("XY"));
        assert_eq!(conjugate_by_circuit(&p("YY"), &cx).unwrap(), p("-XZ"));
        let s = CliffordCircuit::new(1, vec![Gate::S(0)]).unwrap();
        assert_eq!(conjugate_by_circuit(&p("Y"), &s).unwrap(), p("-X"));
        assert_eq!(conjugate_by_circuit(&p("X"), &s).unwrap(), p("Y"));
    }

    #[test]
    fn text_round_trip() {
        for s in ["-XIZY", "IIII", "Y", "-I"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("+XZ"), p("XZ"));
        assert!("XQ".parse::<PauliString>().is_err());
        let json = serde_json::to_string(&p("-XY")).unwrap();
        assert_eq!(json, "\"-XY\"");
        assert_eq!(serde_json::from_str::<PauliString>(&json).unwrap(), p("-XY"));
    }
}
