use super::StabilizerTableau;
use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Shared stabilizers of two states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonStabilizers {
    /// Independent generators of the common group, signed as in the first state.
    pub generators: Vec<PauliString>,
    /// False when some `P` stabilizes one state while `-P` stabilizes the other.
    pub consistent: bool,
}

fn product(rows: &[PauliString], mask: u64, n: usize) -> PauliString {
    let mut acc = PauliString::identity(n);
    for (i, row) in rows.iter().enumerate() {
        if (mask >> i) & 1 == 1 {
            acc = acc.mul_commuting(row);
        }
    }
    acc
}

/// Common stabilizer group of two pure stabilizer states.
pub fn common_stabilizers(a: &StabilizerTableau, b: &StabilizerTableau) -> Result<CommonStabilizers> {
    let n = a.n();
    if b.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.n() });
    }
    // Each working row is (z, x, tag); the tag records which original rows were combined.
    let mut work: Vec<(u64, u64, u128)> = a
        .rows()
        .iter()
        .chain(b.rows())
        .enumerate()
        .map(|(i, r)| (r.z_mask(), r.x_mask(), 1u128 << i))
        .collect();
    let mut r = 0;
    for col in 0..2 * n {
        let bit = |row: &(u64, u64, u128)| {
            if col < n {
                (row.1 >> col) & 1 == 1
            } else {
                (row.0 >> (col - n)) & 1 == 1
            }
        };
        let Some(found) = (r..work.len()).find(|&i| bit(&work[i])) else {
            continue;
        };
        work.swap(r, found);
        let pivot = work[r];
        for i in r + 1..work.len() {
            if bit(&work[i]) {
                work[i].0 ^= pivot.0;
                work[i].1 ^= pivot.1;
                work[i].2 ^= pivot.2;
            }
        }
        r += 1;
    }
    let low = (1u128 << n) - 1;
    let mut generators = Vec::new();
    let mut consistent = true;
    for &(z, x, tag) in &work[r..] {
        debug_assert!(z == 0 && x == 0);
        let pa = product(a.rows(), (tag & low) as u64, n);
        let pb = product(b.rows(), (tag >> n) as u64, n);
        debug_assert_eq!((pa.z_mask(), pa.x_mask()), (pb.z_mask(), pb.x_mask()));
        consistent &= pa.sign() == pb.sign();
        generators.push(pa);
    }
    Ok(CommonStabilizers { generators, consistent })
}

/// `|<psi_a|psi_b>|^2` for two normalized stabilizer states.
pub fn overlap_magnitude(a: &StabilizerTableau, b: &StabilizerTableau) -> Result<f64> {
    let common = common_stabilizers(a, b)?;
    if !common.consistent {
        return Ok(0.0);
    }
    Ok((common.generators.len() as f64 - a.n() as f64).exp2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn overlap_examples() {
        let zero = StabilizerTableau::zero_state(1);
        let one = StabilizerTableau::basis_state(1, 1).unwrap();
        let mut plus = StabilizerTableau::zero_state(1);
        plus.apply_gate(Gate::H(0));
        assert_eq!(overlap_magnitude(&zero, &zero).unwrap(), 1.0);
        assert_eq!(overlap_magnitude(&zero, &one).unwrap(), 0.0);
        assert_eq!(overlap_magnitude(&zero, &plus).unwrap(), 0.5);
        let ghz = StabilizerTableau::ghz(3);
        let z3 = StabilizerTableau::zero_state(3);
        assert_eq!(overlap_magnitude(&ghz, &z3).unwrap(), 0.5);
        assert_eq!(overlap_magnitude(&ghz, &ghz).unwrap(), 1.0);
    }
}
