//! Dense complex-matrix simulation used as a brute-force reference.

use nalgebra::DMatrix;
use rand::Rng;

use crate::circuit::{CliffordCircuit, Gate};
use crate::pauli::PauliString;
use crate::stabilizer::{Axis, Op, StabilizerTableau};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

fn phase_of(exponent: u32) -> C64 {
    // (-i)^exponent
    match exponent % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

#[inline]
fn parity(w: u64) -> bool {
    w.count_ones() & 1 == 1
}

pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    let d = 1usize << p.n();
    let (z, x) = (p.z_mask(), p.x_mask());
    let base = phase_of((z & x).count_ones() + if p.sign() { 2 } else { 0 });
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d as u64 {
        let j = i ^ x;
        let v = if parity(z & j) { -base } else { base };
        m[(j as usize, i as usize)] = v;
    }
    m
}

/// `Tr(P m)` in `O(d)` operations.
pub fn trace_with_pauli(p: &PauliString, m: &CMatrix) -> C64 {
    let d = m.nrows() as u64;
    let (z, x) = (p.z_mask(), p.x_mask());
    let mut acc = ZERO;
    for j in 0..d {
        let v = m[((j ^ x) as usize, j as usize)];
        if parity(z & j) {
            acc -= v;
        } else {
            acc += v;
        }
    }
    acc * phase_of((z & x).count_ones() + if p.sign() { 2 } else { 0 })
}

pub fn gate_matrix(gate: Gate, n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        match gate {
            Gate::H(r) => {
                let bit = (i >> r) & 1;
                m[(i & !(1 << r), i)] += C64::new(h, 0.0);
                m[(i | (1 << r), i)] += C64::new(if bit == 1 { -h } else { h }, 0.0);
            }
            Gate::S(r) => {
                m[(i, i)] = if (i >> r) & 1 == 1 { C64::new(0.0, 1.0) } else { ONE };
            }
            Gate::Cnot(c, t) => {
                let j = if (i >> c) & 1 == 1 { i ^ (1 << t) } else { i };
                m[(j, i)] = ONE;
            }
        }
    }
    m
}

pub fn circuit_unitary(c: &CliffordCircuit) -> CMatrix {
    let d = 1usize << c.n();
    let mut u = CMatrix::identity(d, d);
    for &g in c.gates() {
        u = gate_matrix(g, c.n()) * u;
    }
    u
}

/// Rank-one projector onto the `(-1)^outcome` eigenspace of the axis Pauli on `qubit`.
pub fn projector_matrix(n: usize, qubit: usize, axis: Axis, outcome: bool) -> CMatrix {
    let p = match axis {
        Axis::X => PauliString::single_x(n, qubit),
        Axis::Y => PauliString::single_y(n, qubit),
        Axis::Z => PauliString::single_z(n, qubit),
    };
    let d = 1usize << n;
    let s = if outcome { -0.5 } else { 0.5 };
    CMatrix::identity(d, d).scale(0.5) + pauli_matrix(&p).scale(s)
}

/// The single Kraus operator `K` of an op, acting as `rho -> K rho K^dagger`.
pub fn op_matrix(op: &Op, n: usize) -> CMatrix {
    match *op {
        Op::Gate(g) => gate_matrix(g, n),
        Op::Pauli(p) => pauli_matrix(&p),
        Op::Project { qubit, axis, outcome } => projector_matrix(n, qubit, axis, outcome),
    }
}

pub fn op_sequence_matrix(ops: &[Op], n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut k = CMatrix::identity(d, d);
    for op in ops {
        k = op_matrix(op, n) * k;
    }
    k
}

pub fn basis_density(n: usize, b: u64) -> CMatrix {
    let d = 1usize << n;
    let mut m = CMatrix::zeros(d, d);
    m[(b as usize, b as usize)] = ONE;
    m
}

/// `g * prod_j (I + S_j) / 2` for a tableau.
pub fn tableau_density(t: &StabilizerTableau) -> CMatrix {
    let d = 1usize << t.n();
    let mut m = CMatrix::identity(d, d);
    for row in t.rows() {
        m = (CMatrix::identity(d, d) + pauli_matrix(row)) * m * C64::new(0.5, 0.0);
    }
    m * C64::new(t.trace_factor().value(), 0.0)
}

/// A channel in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    pub n: usize,
    pub ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn unitary(u: CMatrix, n: usize) -> Self {
        Self { n, ops: vec![u] }
    }

    pub fn from_ops(ops: &[Op], n: usize) -> Self {
        Self { n, ops: vec![op_sequence_matrix(ops, n)] }
    }

    pub fn pauli_mixture(terms: &[(PauliString, f64)], n: usize) -> Self {
        let ops = terms
            .iter()
            .filter(|(_, q)| *q > 0.0)
            .map(|(p, q)| pauli_matrix(p) * C64::new(q.sqrt(), 0.0))
            .collect();
        Self { n, ops }
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = rho.nrows();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        out
    }

    /// `self` after `first`.
    pub fn after(&self, first: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.ops.len() * first.ops.len());
        for a in &self.ops {
            for b in &first.ops {
                ops.push(a * b);
            }
        }
        KrausChannel { n: self.n, ops }
    }

    /// Haar-like random channel with `kraus_count` Kraus operators.
    pub fn random<R: Rng + ?Sized>(n: usize, kraus_count: usize, rng: &mut R) -> Self {
        let d = 1usize << n;
        let rows = d * kraus_count;
        let g = CMatrix::from_fn(rows, d, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let q = g.qr().q();
        let ops = (0..kraus_count).map(|k| q.rows(k * d, d).into_owned()).collect();
        Self { n, ops }
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn pauli_matrices() {
        let y = pauli_matrix(&p("Y"));
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        let z = pauli_matrix(&p("Z"));
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
        let zx = pauli_matrix(&p("Z")) * pauli_matrix(&p("X"));
        assert!(max_abs_diff(&zx, &(y * C64::new(0.0, 1.0))) < 1e-15);
    }

    #[test]
    fn trace_formula_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = CMatrix::from_fn(8, 8, |_, _| C64::new(rng.gen(), rng.gen()));
        for z in 0..8u64 {
            for x in 0..8u64 {
                let q = PauliString::new(3, z == 5, z, x).unwrap();
                let direct = (pauli_matrix(&q) * &m).trace();
                assert!((direct - trace_with_pauli(&q, &m)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn random_channel_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = KrausChannel::random(2, 3, &mut rng);
        let mut sum = CMatrix::zeros(4, 4);
        for k in &ch.ops {
            sum += k.adjoint() * k;
        }
        assert!(max_abs_diff(&sum, &CMatrix::identity(4, 4)) < 1e-12);
    }
}
