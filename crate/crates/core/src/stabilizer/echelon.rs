use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{StabilizerTableau, TraceFactor};
use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Column `col` of the symplectic row: X-columns `0..n` come first, then Z-columns.
#[inline]
fn column(p: &PauliString, n: usize, col: usize) -> bool {
    if col < n {
        (p.x_mask() >> col) & 1 == 1
    } else {
        (p.z_mask() >> (col - n)) & 1 == 1
    }
}

/// Reduced row-echelon form over GF(2) with signs tracked; zero rows are dropped.
pub(crate) fn reduce_rows(rows: &[PauliString], n: usize) -> Vec<PauliString> {
    let mut rows = rows.to_vec();
    let mut r = 0;
    for col in 0..2 * n {
        let Some(found) = (r..rows.len()).find(|&i| column(&rows[i], n, col)) else {
            continue;
        };
        rows.swap(r, found);
        let pivot = rows[r];
        for i in 0..rows.len() {
            if i != r && column(&rows[i], n, col) {
                rows[i] = rows[i].mul_commuting(&pivot);
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    rows
}

/// Pivot column of a reduced row.
fn pivot_column(p: &PauliString, n: usize) -> usize {
    if p.x_mask() != 0 {
        p.x_mask().trailing_zeros() as usize
    } else {
        n + p.z_mask().trailing_zeros() as usize
    }
}

/// Express `p` as a product of reduced rows; returns that product (same bits as `p`).
pub(crate) fn express_in(reduced: &[PauliString], p: &PauliString) -> Option<PauliString> {
    let n = p.n();
    let mut acc = PauliString::identity(n);
    let (mut z, mut x) = (p.z_mask(), p.x_mask());
    for row in reduced {
        let col = pivot_column(row, n);
        let hit = if col < n { (x >> col) & 1 == 1 } else { (z >> (col - n)) & 1 == 1 };
        if hit {
            z ^= row.z_mask();
            x ^= row.x_mask();
            acc = acc.mul_commuting(row);
        }
    }
    (z == 0 && x == 0).then_some(acc)
}

/// Canonical row-echelon form of a stabilizer group.
///
/// The `C` rows carry an X-part of full row rank; the `D` rows are X-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EchelonForm {
    n: usize,
    c_rows: Vec<PauliString>,
    d_rows: Vec<PauliString>,
    g: TraceFactor,
}

impl EchelonForm {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c_rows(&self) -> &[PauliString] {
        &self.c_rows
    }

    pub fn d_rows(&self) -> &[PauliString] {
        &self.d_rows
    }

    pub fn rank_c(&self) -> usize {
        self.c_rows.len()
    }

    pub fn rank_d(&self) -> usize {
        self.d_rows.len()
    }

    pub fn trace_factor(&self) -> TraceFactor {
        self.g
    }

    /// Sign bits `s` of the C rows.
    pub fn s(&self) -> Vec<bool> {
        self.c_rows.iter().map(|r| r.sign()).collect()
    }

    /// Z-parts of the C rows (the `A` block).
    pub fn a_block(&self) -> Vec<u64> {
        self.c_rows.iter().map(|r| r.z_mask()).collect()
    }

    /// X-parts of the C rows.
    pub fn c_block(&self) -> Vec<u64> {
        self.c_rows.iter().map(|r| r.x_mask()).collect()
    }

    /// Sign bits `t` of the X-free rows.
    pub fn t(&self) -> Vec<bool> {
        self.d_rows.iter().map(|r| r.sign()).collect()
    }

    /// Z-parts of the X-free rows.
    pub fn d_block(&self) -> Vec<u64> {
        self.d_rows.iter().map(|r| r.z_mask()).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &PauliString> {
        self.c_rows.iter().chain(&self.d_rows)
    }

    /// Sign bit of `+-p` if it belongs to the group.
    pub fn sign_of(&self, p: &PauliString) -> Option<bool> {
        let rows: Vec<PauliString> = self.rows().copied().collect();
        express_in(&rows, p).map(|acc| acc.sign())
    }

    /// Every element of the X-free subgroup (there are `2^rank_d` of them).
    pub fn z_subgroup(&self) -> Vec<PauliString> {
        let mut out = vec![PauliString::identity(self.n)];
        for row in &self.d_rows {
            let extra: Vec<PauliString> = out.iter().map(|e| e.mul_commuting(row)).collect();
            out.extend(extra);
        }
        out
    }

    pub fn basis_support(&self) -> BasisSupport {
        let mut b0 = 0u64;
        for row in &self.d_rows {
            if row.sign() {
                b0 |= 1 << row.z_mask().trailing_zeros();
            }
        }
        BasisSupport {
            n: self.n,
            b0,
            generators: self.c_block(),
            constraints: self.d_rows.iter().map(|r| (r.z_mask(), r.sign())).collect(),
            g: self.g,
        }
    }
}

/// Canonical form of a tableau; fails on an annihilated state.
pub fn row_echelon(t: &StabilizerTableau) -> Result<EchelonForm> {
    if t.trace_factor().is_zero() {
        return Err(Error::ZeroTrace);
    }
    let n = t.n();
    let rows = reduce_rows(t.rows(), n);
    let split = rows.iter().position(|r| r.x_mask() == 0).unwrap_or(rows.len());
    Ok(EchelonForm { n, c_rows: rows[..split].to_vec(), d_rows: rows[split..].to_vec(), g: t.trace_factor() })
}

/// Computational-basis outcome distribution of a stabilizer state.
///
/// The support is the affine space `b0 + span(generators)`, uniform with
/// weight `g * 2^-rank` on each member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisSupport {
    n: usize,
    b0: u64,
    generators: Vec<u64>,
    constraints: Vec<(u64, bool)>,
    g: TraceFactor,
}

impl BasisSupport {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> u64 {
        self.b0
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn trace_factor(&self) -> TraceFactor {
        self.g
    }

    pub fn contains(&self, b: u64) -> bool {
        self.constraints.iter().all(|&(mask, t)| ((mask & b).count_ones() & 1 == 1) == t)
    }

    /// `<b| rho |b>` including the trace factor.
    pub fn probability(&self, b: u64) -> f64 {
        if self.contains(b) {
            self.g.value() * (-(self.rank() as f64)).exp2()
        } else {
            0.0
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut b = self.b0;
        let mut bits: u64 = 0;
        for (i, gen) in self.generators.iter().enumerate() {
            if i % 64 == 0 {
                bits = rng.gen();
            }
            if (bits >> (i % 64)) & 1 == 1 {
                b ^= gen;
            }
        }
        b
    }

    /// All members of the support; intended for small ranks.
    pub fn members(&self) -> Vec<u64> {
        let mut out = vec![self.b0];
        for gen in &self.generators {
            let extra: Vec<u64> = out.iter().map(|b| b ^ gen).collect();
            out.extend(extra);
        }
        out
    }
}
