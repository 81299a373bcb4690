//! Clifford tableaux: uniform sampling and synthesis into {H, S, CNOT}.

use rand::Rng;

use crate::circuit::{CliffordCircuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, MAX_QUBITS};

/// Largest register accepted by the uniform global sampler.
pub const MAX_GLOBAL_CLIFFORD_QUBITS: usize = 12;

/// Images `C X_i C^dagger` and `C Z_i C^dagger` of the generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n: usize,
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x_images: (0..n).map(|i| PauliString::single_x(n, i)).collect(),
            z_images: (0..n).map(|i| PauliString::single_z(n, i)).collect(),
        }
    }

    pub fn from_circuit(c: &CliffordCircuit) -> Self {
        let mut t = Self::identity(c.n());
        for &g in c.gates() {
            t.apply_gate(g);
        }
        t
    }

    /// Build from explicit images; they must satisfy the canonical commutation relations.
    pub fn from_images(x_images: Vec<PauliString>, z_images: Vec<PauliString>) -> Result<Self> {
        let n = x_images.len();
        if z_images.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: z_images.len() });
        }
        for i in 0..n {
            for j in 0..n {
                let want_anti = i == j;
                if x_images[i].commutes_with(&z_images[j]) == want_anti {
                    return Err(Error::Parse(format!("images of X{} and Z{} break the commutation relations", i + 1, j + 1)));
                }
                if j < i && (!x_images[i].commutes_with(&x_images[j]) || !z_images[i].commutes_with(&z_images[j])) {
                    return Err(Error::Parse("generator images must pairwise commute".into()));
                }
            }
        }
        Ok(Self { n, x_images, z_images })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_images(&self) -> &[PauliString] {
        &self.x_images
    }

    pub fn z_images(&self) -> &[PauliString] {
        &self.z_images
    }

    /// Compose with a gate applied after the current Clifford.
    pub fn apply_gate(&mut self, g: Gate) {
        for p in self.x_images.iter_mut().chain(self.z_images.iter_mut()) {
            p.apply_gate(g);
        }
    }

    /// Conjugate an arbitrary Pauli string.
    pub fn conjugate(&self, p: &PauliString) -> PauliString {
        let mut acc = PauliString::identity(self.n).with_sign(p.sign());
        let mut phase_exp = 0u8;
        for i in 0..self.n {
            let (z, x) = ((p.z_mask() >> i) & 1 == 1, (p.x_mask() >> i) & 1 == 1);
            // The encoded letter is (-i)^{zx} Z^z X^x.
            if z {
                let (ph, r) = acc.mul(&self.z_images[i]);
                phase_exp = (phase_exp + ph.exponent()) % 4;
                acc = r;
            }
            if x {
                let (ph, r) = acc.mul(&self.x_images[i]);
                phase_exp = (phase_exp + ph.exponent()) % 4;
                acc = r;
            }
            if z && x {
                phase_exp = (phase_exp + 3) % 4;
            }
        }
        debug_assert!(phase_exp.is_multiple_of(2), "Hermitian input has a Hermitian image");
        if phase_exp == 2 {
            acc.negated()
        } else {
            acc
        }
    }

    /// Gate sequence implementing this Clifford.
    pub fn synthesize(&self) -> CliffordCircuit {
        let n = self.n;
        let mut work = self.clone();
        let mut applied: Vec<Gate> = Vec::new();
        let push = |w: &mut CliffordTableau, g: Gate, log: &mut Vec<Gate>| {
            w.apply_gate(g);
            log.push(g);
        };
        for i in 0..n {
            let above = !((1u64 << i) - 1) & crate::pauli::low_mask(n);
            // Turn the X image into a pure X-string on qubits >= i.
            let p = work.x_images[i];
            for j in 0..n {
                if above & (1 << j) != 0 && (p.z_mask() >> j) & 1 == 1 && (p.x_mask() >> j) & 1 == 0 {
                    push(&mut work, Gate::H(j), &mut applied);
                }
            }
            let p = work.x_images[i];
            for j in 0..n {
                if above & (1 << j) != 0 && (p.z_mask() >> j) & 1 == 1 {
                    push(&mut work, Gate::S(j), &mut applied);
                }
            }
            let p = work.x_images[i];
            if (p.x_mask() >> i) & 1 == 0 {
                let j = (p.x_mask() & above).trailing_zeros() as usize;
                push(&mut work, Gate::Cnot(j, i), &mut applied);
            }
            let p = work.x_images[i];
            for j in 0..n {
                if j != i && (p.x_mask() >> j) & 1 == 1 {
                    push(&mut work, Gate::Cnot(i, j), &mut applied);
                }
            }
            // Now the X image is +-X_i; reduce the Z image to +-Z_i.
            let q = work.z_images[i];
            if (q.x_mask() >> i) & 1 == 1 {
                for g in [Gate::H(i), Gate::S(i), Gate::H(i)] {
                    push(&mut work, g, &mut applied);
                }
            }
            let q = work.z_images[i];
            for j in 0..n {
                if j == i || (q.support() >> j) & 1 == 0 {
                    continue;
                }
                match ((q.z_mask() >> j) & 1, (q.x_mask() >> j) & 1) {
                    (0, 1) => push(&mut work, Gate::H(j), &mut applied),
                    (1, 1) => {
                        push(&mut work, Gate::S(j), &mut applied);
                        push(&mut work, Gate::H(j), &mut applied);
                    }
                    _ => {}
                }
            }
            let q = work.z_images[i];
            for j in 0..n {
                if j != i && (q.z_mask() >> j) & 1 == 1 {
                    push(&mut work, Gate::Cnot(j, i), &mut applied);
                }
            }
            if work.x_images[i].sign() {
                push(&mut work, Gate::S(i), &mut applied);
                push(&mut work, Gate::S(i), &mut applied);
            }
            if work.z_images[i].sign() {
                for g in [Gate::H(i), Gate::S(i), Gate::S(i), Gate::H(i)] {
                    push(&mut work, g, &mut applied);
                }
            }
            debug_assert_eq!(work.x_images[i], PauliString::single_x(n, i));
            debug_assert_eq!(work.z_images[i], PauliString::single_z(n, i));
        }
        let mut gates = Vec::with_capacity(applied.len() + applied.len() / 2);
        for &g in applied.iter().rev() {
            match g {
                Gate::S(r) => gates.extend([Gate::S(r); 3]),
                other => gates.push(other),
            }
        }
        CliffordCircuit::new(n, cancel_single_qubit_runs(n, &gates)).expect("synthesized gates stay in range")
    }
}

/// Drop `H H` and `S S S S` runs that are adjacent on their qubit.
pub(crate) fn cancel_single_qubit_runs(n: usize, gates: &[Gate]) -> Vec<Gate> {
    let mut out: Vec<Option<Gate>> = Vec::with_capacity(gates.len());
    let mut trailing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &g in gates {
        match g {
            Gate::H(q) => {
                let stack = &mut trailing[q];
                if let Some(&top) = stack.last() {
                    if out[top] == Some(Gate::H(q)) {
                        out[top] = None;
                        stack.pop();
                        continue;
                    }
                }
                stack.push(out.len());
                out.push(Some(g));
            }
            Gate::S(q) => {
                let stack = &mut trailing[q];
                let run = stack.iter().rev().take(3).take_while(|&&i| out[i] == Some(Gate::S(q))).count();
                if run == 3 {
                    for _ in 0..3 {
                        let i = stack.pop().expect("run of three");
                        out[i] = None;
                    }
                    continue;
                }
                stack.push(out.len());
                out.push(Some(g));
            }
            Gate::Cnot(c, t) => {
                trailing[c].clear();
                trailing[t].clear();
                out.push(Some(g));
            }
        }
    }
    out.into_iter().flatten().collect()
}

#[inline]
fn symplectic(a: (u64, u64), b: (u64, u64)) -> bool {
    ((a.0 & b.1) ^ (a.1 & b.0)).count_ones() & 1 == 1
}

/// Reduce a list of symplectic vectors to an independent spanning set.
fn independent_basis(vectors: &[(u64, u64)]) -> Vec<(u64, u64)> {
    let mut reduced: Vec<(u64, u64)> = Vec::new();
    let mut out = Vec::new();
    for &v in vectors {
        let mut w = v;
        for r in &reduced {
            let lead = lead_bit(*r);
            if bit(w, lead) {
                w = (w.0 ^ r.0, w.1 ^ r.1);
            }
        }
        if w != (0, 0) {
            // Keep `reduced` in fully reduced form so lead bits stay unique.
            let lead = lead_bit(w);
            for r in reduced.iter_mut() {
                if bit(*r, lead) {
                    *r = (r.0 ^ w.0, r.1 ^ w.1);
                }
            }
            reduced.push(w);
            out.push(v);
        }
    }
    out
}

fn lead_bit(v: (u64, u64)) -> u32 {
    if v.1 != 0 {
        v.1.trailing_zeros()
    } else {
        64 + v.0.trailing_zeros()
    }
}

fn bit(v: (u64, u64), b: u32) -> bool {
    if b < 64 {
        (v.1 >> b) & 1 == 1
    } else {
        (v.0 >> (b - 64)) & 1 == 1
    }
}

fn random_combination<R: Rng + ?Sized>(basis: &[(u64, u64)], rng: &mut R) -> (u64, u64) {
    let mut acc = (0u64, 0u64);
    let mut bits: u64 = 0;
    for (i, v) in basis.iter().enumerate() {
        if i % 64 == 0 {
            bits = rng.gen();
        }
        if (bits >> (i % 64)) & 1 == 1 {
            acc = (acc.0 ^ v.0, acc.1 ^ v.1);
        }
    }
    acc
}

/// Uniformly random Clifford tableau on `n` qubits.
pub fn random_clifford_tableau<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordTableau> {
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_QUBITS));
    }
    let mut basis: Vec<(u64, u64)> = (0..n).flat_map(|r| [(1u64 << r, 0u64), (0u64, 1u64 << r)]).collect();
    let mut x_images = Vec::with_capacity(n);
    let mut z_images = Vec::with_capacity(n);
    for _ in 0..n {
        let xv = loop {
            let v = random_combination(&basis, rng);
            if v != (0, 0) {
                break v;
            }
        };
        let zv = loop {
            let v = random_combination(&basis, rng);
            if symplectic(xv, v) {
                break v;
            }
        };
        let projected: Vec<(u64, u64)> = basis
            .iter()
            .map(|&v| {
                let mut w = v;
                if symplectic(v, zv) {
                    w = (w.0 ^ xv.0, w.1 ^ xv.1);
                }
                if symplectic(v, xv) {
                    w = (w.0 ^ zv.0, w.1 ^ zv.1);
                }
                w
            })
            .collect();
        basis = independent_basis(&projected);
        x_images.push(PauliString::new(n, rng.gen(), xv.0, xv.1)?);
        z_images.push(PauliString::new(n, rng.gen(), zv.0, zv.1)?);
    }
    debug_assert!(basis.is_empty());
    Ok(CliffordTableau { n, x_images, z_images })
}

/// Uniformly random `n`-qubit Clifford, compiled to gates.
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordCircuit> {
    if n > MAX_GLOBAL_CLIFFORD_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_GLOBAL_CLIFFORD_QUBITS));
    }
    Ok(random_clifford_tableau(n, rng)?.synthesize())
}

/// Tensor product of independent uniform single-qubit Cliffords.
pub fn random_local_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordCircuit> {
    let mut gates = Vec::new();
    for q in 0..n {
        let single = random_clifford_tableau(1, rng)?.synthesize();
        gates.extend(single.gates().iter().map(|g| g.shifted(q)));
    }
    CliffordCircuit::new(n, gates)
}

/// All 24 single-qubit Cliffords (modulo global phase).
pub fn single_qubit_cliffords() -> Vec<CliffordTableau> {
    let letters = [(0u64, 1u64), (1, 1), (1, 0)];
    let mut out = Vec::with_capacity(24);
    for &xl in &letters {
        for &zl in &letters {
            if xl == zl {
                continue;
            }
            for sx in [false, true] {
                for sz in [false, true] {
                    out.push(CliffordTableau {
                        n: 1,
                        x_images: vec![PauliString::new(1, sx, xl.0, xl.1).expect("single qubit")],
                        z_images: vec![PauliString::new(1, sz, zl.0, zl.1).expect("single qubit")],
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptm::dense;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn synthesis_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=6 {
            for _ in 0..50 {
                let t = random_clifford_tableau(n, &mut rng).unwrap();
                let c = t.synthesize();
                assert_eq!(CliffordTableau::from_circuit(&c), t);
            }
        }
    }

    #[test]
    fn all_single_qubit_cliffords_synthesize() {
        let all = single_qubit_cliffords();
        assert_eq!(all.len(), 24);
        for t in &all {
            assert_eq!(&CliffordTableau::from_circuit(&t.synthesize()), t);
        }
    }

    #[test]
    fn conjugate_matches_gatewise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let c = random_clifford(3, &mut rng).unwrap();
            let t = CliffordTableau::from_circuit(&c);
            let z = rng.gen::<u64>() & 7;
            let x = rng.gen::<u64>() & 7;
            let p = PauliString::new(3, rng.gen(), z, x).unwrap();
            let mut q = p;
            for &g in c.gates() {
                q.apply_gate(g);
            }
            assert_eq!(t.conjugate(&p), q);
        }
    }

    #[test]
    fn conjugation_agrees_with_dense_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let c = random_clifford(2, &mut rng).unwrap();
            let u = dense::circuit_unitary(&c);
            for z in 0..4u64 {
                for x in 0..4u64 {
                    let p = PauliString::new(2, false, z, x).unwrap();
                    let mut q = p;
                    for &g in c.gates() {
                        q.apply_gate(g);
                    }
                    let lhs = &u * dense::pauli_matrix(&p) * u.adjoint();
                    assert!(dense::max_abs_diff(&lhs, &dense::pauli_matrix(&q)) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn local_clifford_acts_per_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_local_clifford(3, &mut rng).unwrap();
        assert_eq!(c.cnot_count(), 0);
    }
}
