//! Pauli-transfer-matrix algebra for small registers.
//!
//! Basis Paulis are indexed by `sum_r (z_r + 2 x_r) 4^r`, so each qubit runs
//! through `(I, Z, X, Y)` and qubit 1 is the fastest-varying digit.

pub mod dense;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::CliffordCircuit;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::stabilizer::Op;
use dense::{CMatrix, KrausChannel};

/// Largest register with a dense PTM.
pub const MAX_PTM_QUBITS: usize = 5;

/// Default tolerance for structural checks on float matrices.
pub const DEFAULT_TOL: f64 = 1e-10;

fn check_n(n: usize) -> Result<()> {
    if n > MAX_PTM_QUBITS {
        Err(Error::TooManyQubits(n, MAX_PTM_QUBITS))
    } else {
        Ok(())
    }
}

fn spread(mask: u64) -> usize {
    let mut out = 0usize;
    let mut m = mask;
    while m != 0 {
        let r = m.trailing_zeros() as usize;
        out |= 1 << (2 * r);
        m &= m - 1;
    }
    out
}

/// PTM index of a sign-free Pauli word.
pub fn pauli_index(p: &PauliString) -> usize {
    spread(p.z_mask()) | (spread(p.x_mask()) << 1)
}

/// Sign-free Pauli word at a PTM index.
pub fn index_pauli(n: usize, idx: usize) -> PauliString {
    let (mut z, mut x) = (0u64, 0u64);
    for r in 0..n {
        let digit = (idx >> (2 * r)) & 3;
        z |= ((digit & 1) as u64) << r;
        x |= ((digit >> 1) as u64) << r;
    }
    PauliString::new(n, false, z, x).expect("index within register")
}

/// PTM index of the Z-word with mask `z`.
pub fn z_index(z: u64) -> usize {
    spread(z)
}

#[inline]
fn symplectic(a: &PauliString, b: &PauliString) -> bool {
    !a.commutes_with(b)
}

/// Vectorized operator in the normalized Pauli basis `P / sqrt(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliVector {
    n: usize,
    coeffs: DVector<f64>,
}

impl PauliVector {
    pub fn from_density(rho: &CMatrix, n: usize) -> Result<Self> {
        check_n(n)?;
        let dim = 1usize << (2 * n);
        let norm = ((1u64 << n) as f64).sqrt();
        let coeffs = DVector::from_fn(dim, |i, _| dense::trace_with_pauli(&index_pauli(n, i), rho).re / norm);
        Ok(Self { n, coeffs })
    }

    pub fn basis_state(n: usize, b: u64) -> Result<Self> {
        Self::from_density(&dense::basis_density(n, b), n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    pub fn to_density(&self) -> CMatrix {
        let d = 1usize << self.n;
        let norm = (d as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                m += dense::pauli_matrix(&index_pauli(self.n, i)) * dense::C64::new(c / norm, 0.0);
            }
        }
        m
    }
}

/// Which Pauli subset a twirl averages over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwirlSet {
    /// The Z-group: keeps entries whose row and column share an X-part.
    Z,
    /// The X-group: keeps entries whose row and column share a Z-part.
    X,
    /// The full Pauli group: keeps the diagonal.
    Pauli,
}

impl TwirlSet {
    fn keeps(&self, a: &PauliString, b: &PauliString) -> bool {
        match self {
            TwirlSet::Z => a.x_mask() == b.x_mask(),
            TwirlSet::X => a.z_mask() == b.z_mask(),
            TwirlSet::Pauli => a == b,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> PauliString {
        let mask = crate::pauli::low_mask(n);
        let z = if matches!(self, TwirlSet::X) { 0 } else { rng.gen::<u64>() & mask };
        let x = if matches!(self, TwirlSet::Z) { 0 } else { rng.gen::<u64>() & mask };
        PauliString::new(n, false, z, x).expect("masked to register")
    }
}

/// Real `4^n x 4^n` Pauli transfer matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Ptm {
    n: usize,
    mat: DMatrix<f64>,
}

impl Ptm {
    pub fn identity(n: usize) -> Result<Self> {
        check_n(n)?;
        let dim = 1usize << (2 * n);
        Ok(Self { n, mat: DMatrix::identity(dim, dim) })
    }

    pub fn from_matrix(n: usize, mat: DMatrix<f64>) -> Result<Self> {
        check_n(n)?;
        let dim = 1usize << (2 * n);
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: mat.nrows() });
        }
        Ok(Self { n, mat })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn get(&self, row: &PauliString, col: &PauliString) -> f64 {
        self.mat[(pauli_index(row), pauli_index(col))]
    }

    /// Signed permutation implementing conjugation by a Clifford circuit.
    pub fn of_unitary(c: &CliffordCircuit) -> Result<Self> {
        check_n(c.n())?;
        let dim = 1usize << (2 * c.n());
        let mut mat = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut p = index_pauli(c.n(), col);
            for &g in c.gates() {
                p.apply_gate(g);
            }
            mat[(pauli_index(&p), col)] = if p.sign() { -1.0 } else { 1.0 };
        }
        Ok(Self { n: c.n(), mat })
    }

    /// Diagonal PTM of a (quasi-)probabilistic Pauli mixture.
    pub fn of_pauli_channel(n: usize, terms: &[(PauliString, f64)]) -> Result<Self> {
        check_n(n)?;
        let dim = 1usize << (2 * n);
        let mut mat = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let sigma = index_pauli(n, i);
            mat[(i, i)] = terms.iter().map(|(p, q)| if symplectic(p, &sigma) { -q } else { *q }).sum();
        }
        Ok(Self { n, mat })
    }

    /// PTM of a Kraus channel via `Tr(P E(P')) / d`.
    pub fn of_kraus(ch: &KrausChannel) -> Result<Self> {
        let n = ch.n;
        check_n(n)?;
        let dim = 1usize << (2 * n);
        let d = (1u64 << n) as f64;
        let mut mat = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let image = ch.apply(&dense::pauli_matrix(&index_pauli(n, col)));
            for row in 0..dim {
                mat[(row, col)] = dense::trace_with_pauli(&index_pauli(n, row), &image).re / d;
            }
        }
        Ok(Self { n, mat })
    }

    /// PTM of a universal-basis op sequence.
    pub fn of_ops(n: usize, ops: &[Op]) -> Result<Self> {
        check_n(n)?;
        Self::of_kraus(&KrausChannel::from_ops(ops, n))
    }

    /// The completely dephasing measurement channel `M_Z`.
    pub fn measurement_channel(n: usize) -> Result<Self> {
        check_n(n)?;
        let dim = 1usize << (2 * n);
        let mut mat = DMatrix::zeros(dim, dim);
        for z in 0..1u64 << n {
            let i = z_index(z);
            mat[(i, i)] = 1.0;
        }
        Ok(Self { n, mat })
    }

    /// Sub-matrix on Z-words, ordered by mask value.
    pub fn z_block(&self) -> DMatrix<f64> {
        let k = 1usize << self.n;
        DMatrix::from_fn(k, k, |a, b| self.mat[(z_index(a as u64), z_index(b as u64))])
    }

    /// Whether the Z-rows vanish outside the Z-columns.
    pub fn check_propagable(&self, tol: f64) -> bool {
        let dim = self.dim();
        (0..1u64 << self.n).all(|z| {
            let row = z_index(z);
            (0..dim).all(|col| index_pauli(self.n, col).x_mask() == 0 || self.mat[(row, col)].abs() <= tol)
        })
    }

    /// Block-diagonal channel `E'` with `E' M_Z = M_Z E`.
    pub fn propagate_through_measurement(&self, tol: f64) -> Result<Self> {
        if !self.check_propagable(tol) {
            return Err(Error::NotPropagable);
        }
        let dim = self.dim();
        let is_z: Vec<bool> = (0..dim).map(|i| index_pauli(self.n, i).x_mask() == 0).collect();
        let mat = DMatrix::from_fn(dim, dim, |r, c| if is_z[r] == is_z[c] { self.mat[(r, c)] } else { 0.0 });
        Ok(Self { n: self.n, mat })
    }

    pub fn twirl_exact(&self, set: TwirlSet) -> Self {
        let dim = self.dim();
        let mat = DMatrix::from_fn(dim, dim, |r, c| {
            if set.keeps(&index_pauli(self.n, r), &index_pauli(self.n, c)) {
                self.mat[(r, c)]
            } else {
                0.0
            }
        });
        Self { n: self.n, mat }
    }

    /// Average of `K` random conjugations `P E P`.
    pub fn twirl_sampled<R: Rng + ?Sized>(&self, set: TwirlSet, k: usize, rng: &mut R) -> Self {
        let dim = self.dim();
        let paulis: Vec<PauliString> = (0..dim).map(|i| index_pauli(self.n, i)).collect();
        let mut acc = DMatrix::zeros(dim, dim);
        for _ in 0..k.max(1) {
            let p = set.sample(self.n, rng);
            let signs: Vec<f64> = paulis.iter().map(|s| if symplectic(&p, s) { -1.0 } else { 1.0 }).collect();
            for c in 0..dim {
                for r in 0..dim {
                    acc[(r, c)] += signs[r] * signs[c] * self.mat[(r, c)];
                }
            }
        }
        Self { n: self.n, mat: acc / k.max(1) as f64 }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &Ptm) -> Result<Self> {
        if self.n != first.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: first.n });
        }
        Ok(Self { n: self.n, mat: &self.mat * &first.mat })
    }

    pub fn apply(&self, v: &PauliVector) -> Result<PauliVector> {
        if self.n != v.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.n });
        }
        Ok(PauliVector { n: self.n, coeffs: &self.mat * &v.coeffs })
    }

    pub fn inverse(&self) -> Result<Self> {
        let det_guard = self.mat.clone().lu();
        det_guard
            .try_inverse()
            .map(|mat| Self { n: self.n, mat })
            .ok_or(Error::SingularChannel(0.0))
    }

    pub fn linear_combination(n: usize, terms: &[(f64, &Ptm)]) -> Result<Self> {
        let mut out = Self { n, mat: DMatrix::zeros(1 << (2 * n), 1 << (2 * n)) };
        for (q, e) in terms {
            if e.n != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.n });
            }
            out.mat += &e.mat * *q;
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &Ptm) -> f64 {
        (&self.mat - &other.mat).amax()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.dim() {
            let line: Vec<String> = (0..self.dim()).map(|c| format!("{}", self.mat[(r, c)])).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn indexing_round_trip() {
        assert_eq!(pauli_index(&p("Z")), 1);
        assert_eq!(pauli_index(&p("X")), 2);
        assert_eq!(pauli_index(&p("Y")), 3);
        for i in 0..64 {
            assert_eq!(pauli_index(&index_pauli(3, i)), i);
        }
    }

    #[test]
    fn unitary_examples() {
        let id = Ptm::of_unitary(&CliffordCircuit::empty(2)).unwrap();
        assert_eq!(id, Ptm::identity(2).unwrap());
        let h = Ptm::of_unitary(&CliffordCircuit::new(1, vec![Gate::H(0)]).unwrap()).unwrap();
        let expected = dmatrix![1.0, 0.0, 0.0, 0.0; 0.0, 0.0, 1.0, 0.0; 0.0, 1.0, 0.0, 0.0; 0.0, 0.0, 0.0, -1.0];
        assert_eq!(h.matrix(), &expected);
        let cx = Ptm::of_unitary(&CliffordCircuit::new(2, vec![Gate::Cnot(0, 1)]).unwrap()).unwrap();
        assert_eq!(cx.get(&p("ZZ"), &p("IZ")), 1.0);
    }

    #[test]
    fn unitary_matches_dense() {
        let c = CliffordCircuit::parse(2, "H 1\nS 2\nCNOT 1 2\nH 2\nS 1\nCNOT 2 1").unwrap();
        let fast = Ptm::of_unitary(&c).unwrap();
        let slow = Ptm::of_kraus(&KrausChannel::unitary(dense::circuit_unitary(&c), 2)).unwrap();
        assert!(fast.max_abs_diff(&slow) < 1e-12);
    }

    #[test]
    fn pauli_channel_examples() {
        let e = Ptm::of_pauli_channel(1, &[(p("I"), 0.9), (p("X"), 0.1)]).unwrap();
        let diag: Vec<f64> = e.matrix().diagonal().iter().copied().collect();
        for (a, b) in diag.iter().zip([1.0, 0.8, 1.0, 0.8]) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut terms = Vec::new();
        for i in 1..16 {
            terms.push((index_pauli(2, i), 1.0 / 15.0));
        }
        let dep = Ptm::of_pauli_channel(2, &terms).unwrap();
        for i in 1..16 {
            assert!((dep.matrix()[(i, i)] + 1.0 / 15.0).abs() < 1e-15);
        }
    }

    #[test]
    fn measurement_and_blocks() {
        let m = Ptm::measurement_channel(1).unwrap();
        assert_eq!(m.matrix().diagonal().as_slice(), &[1.0, 1.0, 0.0, 0.0]);
        let m2 = Ptm::measurement_channel(2).unwrap();
        assert_eq!(m2.matrix().sum(), 4.0);
        assert_eq!(m2.compose(&m2).unwrap(), m2);
        let x = Ptm::of_pauli_channel(1, &[(p("X"), 1.0)]).unwrap();
        assert_eq!(x.z_block(), dmatrix![1.0, 0.0; 0.0, -1.0]);
        let h = Ptm::of_unitary(&CliffordCircuit::new(1, vec![Gate::H(0)]).unwrap()).unwrap();
        assert_eq!(h.z_block(), dmatrix![1.0, 0.0; 0.0, 0.0]);
        assert!(!h.check_propagable(DEFAULT_TOL));
        assert!(x.check_propagable(DEFAULT_TOL));
    }

    #[test]
    fn twirls_and_propagation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let e = Ptm::of_kraus(&KrausChannel::random(2, 2, &mut rng)).unwrap();
            let tz = e.twirl_exact(TwirlSet::Z);
            assert!(tz.check_propagable(DEFAULT_TOL));
            assert_eq!(tz.z_block(), e.z_block());
            let prop = tz.propagate_through_measurement(DEFAULT_TOL).unwrap();
            let m = Ptm::measurement_channel(2).unwrap();
            let lhs = prop.compose(&m).unwrap();
            let rhs = m.compose(&tz).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let tp = e.twirl_exact(TwirlSet::Pauli);
            assert_eq!(tp.matrix().diagonal(), e.matrix().diagonal());
            assert_eq!(tz.twirl_exact(TwirlSet::X), tp);
        }
    }

    #[test]
    fn sampled_twirl_on_pauli_channel_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = Ptm::of_pauli_channel(2, &[(p("II"), 0.7), (p("XY"), 0.3)]).unwrap();
        let t = e.twirl_sampled(TwirlSet::Pauli, 17, &mut rng);
        assert!(t.max_abs_diff(&e) < 1e-15);
    }
}
