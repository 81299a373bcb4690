use cni_core::clifford::random_clifford;
use cni_core::compression::compress;
use cni_core::noise::{invert_pauli_channel, CircuitNoise, Correlation, GateNoiseSpec, GlobalNoiseModel, NoiseTerm};
use cni_core::pauli::{commutes, conjugate_by_circuit, pauli_multiply};
use cni_core::ptm::dense::{self, C64};
use cni_core::ptm::{Ptm, TwirlSet};
use cni_core::rng::{stream, SimRng};
use cni_core::stabilizer::{overlap_magnitude, row_echelon, StabilizerTableau};
use cni_core::{BasisChannel, CliffordCircuit, Gate, PauliString};
use proptest::prelude::*;
use rand::Rng;

fn pauli_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    let mask = (1u64 << n) - 1;
    (any::<bool>(), any::<u64>(), any::<u64>()).prop_map(move |(s, z, x)| PauliString::new(n, s, z & mask, x & mask).unwrap())
}

fn pauli_pair() -> impl Strategy<Value = (PauliString, PauliString)> {
    (1usize..=4).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n)))
}

fn pauli_triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1usize..=4).prop_flat_map(|n| (pauli_strategy(n), pauli_strategy(n), pauli_strategy(n)))
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    (0u8..3, 0..n, 0..n).prop_map(move |(kind, a, b)| match kind {
        0 => Gate::H(a),
        1 if n > 1 && a != b => Gate::Cnot(a, b),
        _ => Gate::S(a),
    })
}

fn circuit_strategy() -> impl Strategy<Value = CliffordCircuit> {
    (1usize..=3).prop_flat_map(|n| prop::collection::vec(gate_strategy(n), 0..24).prop_map(move |g| CliffordCircuit::new(n, g).unwrap()))
}

fn random_fault(n: usize, rng: &mut SimRng) -> PauliString {
    loop {
        let mask = (1u64 << n) - 1;
        let p = PauliString::new(n, false, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask).unwrap();
        if !p.is_identity() {
            return p;
        }
    }
}

fn random_pauli_channel(n: usize, rng: &mut SimRng) -> Vec<(PauliString, f64)> {
    let count = rng.gen_range(1..=3);
    let mut faults: Vec<(PauliString, f64)> = Vec::new();
    for _ in 0..count {
        let p = random_fault(n, rng);
        if faults.iter().all(|(q, _)| *q != p) {
            faults.push((p, rng.gen_range(0.005..0.1)));
        }
    }
    let rate: f64 = faults.iter().map(|(_, q)| q).sum();
    let mut out = vec![(PauliString::identity(n), 1.0 - rate)];
    out.extend(faults);
    out
}

fn scaled(p: &PauliString) -> dense::CMatrix {
    let (re, im) = if p.sign() { (-1.0, 0.0) } else { (1.0, 0.0) };
    dense::pauli_matrix(&p.unsigned()) * C64::new(re, im)
}

fn ptm_close(a: &Ptm, b: &Ptm, tol: f64) -> bool {
    a.max_abs_diff(b) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_matches_dense_matrices((p, q) in pauli_pair()) {
        let (phase, r) = pauli_multiply(&p, &q).unwrap();
        let (re, im) = phase.to_complex();
        let lhs = scaled(&p) * scaled(&q);
        let rhs = scaled(&r) * C64::new(re, im);
        prop_assert!(dense::max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn multiplication_is_associative((p, q, r) in pauli_triple()) {
        let (a1, pq) = pauli_multiply(&p, &q).unwrap();
        let (a2, left) = pauli_multiply(&pq, &r).unwrap();
        let (b1, qr) = pauli_multiply(&q, &r).unwrap();
        let (b2, right) = pauli_multiply(&p, &qr).unwrap();
        let signed = |phase: cni_core::Phase, p: &PauliString| phase.mul(cni_core::Phase::from_exponent(2 * i64::from(p.sign())));
        prop_assert_eq!(left.unsigned(), right.unsigned());
        prop_assert_eq!(signed(a1.mul(a2), &left), signed(b1.mul(b2), &right));
    }

    #[test]
    fn commutation_is_symmetric_and_matches_products((p, q) in pauli_pair()) {
        let c = commutes(&p, &q).unwrap();
        prop_assert_eq!(c, commutes(&q, &p).unwrap());
        let (a, pq) = pauli_multiply(&p, &q).unwrap();
        let (b, qp) = pauli_multiply(&q, &p).unwrap();
        prop_assert_eq!(pq, qp);
        prop_assert_eq!(c, a == b);
    }

    #[test]
    fn conjugation_matches_dense(c in circuit_strategy(), seed in any::<u64>()) {
        let n = c.n();
        let mask = (1u64 << n) - 1;
        let mut rng = stream(seed, &[]);
        let p = PauliString::new(n, rng.gen(), rng.gen::<u64>() & mask, rng.gen::<u64>() & mask).unwrap();
        let image = conjugate_by_circuit(&p, &c).unwrap();
        let u = dense::circuit_unitary(&c);
        let lhs = &u * scaled(&p) * u.adjoint();
        prop_assert!(dense::max_abs_diff(&lhs, &scaled(&image)) < 1e-12);
    }

    #[test]
    fn diagonal_gates_preserve_the_z_group(
        n in 2usize..=5,
        gates in prop::collection::vec((0usize..5, 0usize..5, any::<bool>()), 0..30),
        z in any::<u64>(),
    ) {
        let gates: Vec<Gate> = gates
            .into_iter()
            .filter_map(|(a, b, is_s)| {
                let (a, b) = (a % n, b % n);
                if is_s { Some(Gate::S(a)) } else if a != b { Some(Gate::Cnot(a, b)) } else { None }
            })
            .collect();
        let c = CliffordCircuit::new(n, gates).unwrap();
        let p = PauliString::new(n, false, z & ((1 << n) - 1), 0).unwrap();
        prop_assert!(conjugate_by_circuit(&p, &c).unwrap().is_in_z_group());
    }

    #[test]
    fn unitary_ptm_is_a_signed_permutation(c in circuit_strategy()) {
        let m = Ptm::of_unitary(&c).unwrap();
        let m = m.matrix();
        for col in 0..m.ncols() {
            let nonzero: Vec<f64> = m.column(col).iter().copied().filter(|v| *v != 0.0).collect();
            prop_assert_eq!(nonzero.len(), 1);
            prop_assert!(nonzero[0] == 1.0 || nonzero[0] == -1.0);
        }
    }

    #[test]
    fn twirls_have_the_expected_structure(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = stream(seed, &[]);
        let ch = dense::KrausChannel::random(n, 2, &mut rng);
        let e = Ptm::of_kraus(&ch).unwrap();
        let z = e.twirl_exact(TwirlSet::Z);
        prop_assert!(z.check_propagable(0.0));
        let full = e.twirl_exact(TwirlSet::Pauli);
        let staged = z.twirl_exact(TwirlSet::X);
        prop_assert!(ptm_close(&full, &staged, 1e-15));
        let meas = Ptm::measurement_channel(n).unwrap();
        let pushed = z.propagate_through_measurement(1e-12).unwrap();
        prop_assert!(ptm_close(&pushed.compose(&meas).unwrap(), &meas.compose(&z).unwrap(), 1e-12));
    }

    #[test]
    fn sampled_twirl_concentrates(seed in any::<u64>()) {
        let mut rng = stream(seed, &[]);
        let e = Ptm::of_kraus(&dense::KrausChannel::random(2, 2, &mut rng)).unwrap();
        let k = 2000;
        let sampled = e.twirl_sampled(TwirlSet::Pauli, k, &mut rng);
        let exact = e.twirl_exact(TwirlSet::Pauli);
        let entries = (16 * 16) as f64;
        let tol = (2.0 * (2.0 * entries / 1e-3).ln() / k as f64).sqrt();
        prop_assert!(sampled.max_abs_diff(&exact) <= tol);
    }

    #[test]
    fn overlaps_are_symmetric_powers_of_two(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = stream(seed, &[]);
        let a = StabilizerTableau::from_circuit(&random_clifford(n, &mut rng).unwrap());
        let b = StabilizerTableau::from_circuit(&random_clifford(n, &mut rng).unwrap());
        let ab = overlap_magnitude(&a, &b).unwrap();
        prop_assert_eq!(ab, overlap_magnitude(&b, &a).unwrap());
        prop_assert!(ab == 0.0 || (0..=n as i32).any(|k| ab == (-k as f64).exp2()));
        if n <= 3 {
            let da = dense::tableau_density(&a);
            let db = dense::tableau_density(&b);
            prop_assert!(((da * db).trace().re - ab).abs() < 1e-12);
        }
    }

    #[test]
    fn echelon_form_is_idempotent(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = stream(seed, &[]);
        let t = StabilizerTableau::from_circuit(&random_clifford(n, &mut rng).unwrap());
        let e = row_echelon(&t).unwrap();
        let regenerated = StabilizerTableau::from_generators(n, e.rows().copied().collect()).unwrap();
        prop_assert_eq!(row_echelon(&regenerated).unwrap(), e.clone());
        for row in t.rows() {
            prop_assert_eq!(e.sign_of(row), Some(row.sign()));
        }
    }

    #[test]
    fn measuring_then_projecting_is_stable(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = stream(seed, &[]);
        let mut t = StabilizerTableau::from_circuit(&random_clifford(n, &mut rng).unwrap());
        let b = t.measure_all(&mut rng).unwrap();
        let before = t.clone();
        for r in 0..n {
            t.apply_projector(r, (b >> r) & 1 == 1);
        }
        prop_assert_eq!(t, before);
    }

    #[test]
    fn pauli_inverse_composes_to_identity(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = stream(seed, &[]);
        let channel = random_pauli_channel(n, &mut rng);
        let inverse = invert_pauli_channel(n, &channel).unwrap();
        let product = inverse.ptm().unwrap().compose(&Ptm::of_pauli_channel(n, &channel).unwrap()).unwrap();
        prop_assert!(ptm_close(&product, &Ptm::identity(n).unwrap(), 1e-12));
        let probs: f64 = (0..inverse.len()).map(|i| inverse.probability(i)).sum();
        prop_assert!((probs - 1.0).abs() < 1e-12);
        let gamma: f64 = inverse.terms().iter().map(|(_, c)| c.abs()).sum();
        prop_assert!((gamma - inverse.gamma()).abs() < 1e-12);
        prop_assert!(inverse.gamma() >= 1.0);
    }

    #[test]
    fn compression_is_sound_and_idempotent(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = stream(seed, &[]);
        let channel = random_pauli_channel(n, &mut rng);
        let tail = random_clifford(n, &mut rng).unwrap();
        let pushed = invert_pauli_channel(n, &channel).unwrap().propagate(&tail);
        let once = compress(&pushed).unwrap();
        prop_assert!(once.gamma() <= pushed.gamma() + 1e-12);
        let twice = compress(&once).unwrap();
        prop_assert_eq!(twice.len(), once.len());
        prop_assert!((twice.gamma() - once.gamma()).abs() < 1e-12);
        let a = pushed.ptm().unwrap().z_block();
        let b = once.ptm().unwrap().z_block();
        prop_assert!((a - b).abs().max() < 1e-12);
    }

    #[test]
    fn neumann_weights_have_constant_magnitude(seed in any::<u64>()) {
        let mut rng = stream(seed, &[]);
        let terms = vec![
            NoiseTerm { channel: BasisChannel::pauli(random_fault(2, &mut rng)), prob: 0.04, negative: false },
            NoiseTerm { channel: BasisChannel::pauli(random_fault(2, &mut rng)), prob: 0.03, negative: true },
        ];
        let model = GlobalNoiseModel::new(2, 1.0, 0.93, terms).unwrap();
        let gamma = model.gamma().unwrap();
        for _ in 0..50 {
            let (w, _) = model.neumann_sample(&mut rng).unwrap();
            prop_assert!((w.abs() - gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn first_order_truncation_error_is_second_order(seed in any::<u64>()) {
        let mut rng = stream(seed, &[]);
        let n = 2;
        let p = 0.01;
        let circuit = CliffordCircuit::new(n, vec![Gate::Cnot(0, 1), Gate::H(0), Gate::Cnot(1, 0), Gate::S(1), Gate::Cnot(0, 1)]).unwrap();
        let sites: Vec<GateNoiseSpec> = circuit
            .cnot_positions()
            .into_iter()
            .map(|i| GateNoiseSpec { gate_index: i + 1, faults: vec![(random_fault(n, &mut rng), p)] })
            .collect();
        let exact = CircuitNoise::new(n, Correlation::Independent, sites.clone(), &circuit).unwrap();
        let truncated = CircuitNoise::new(n, Correlation::SingleFault, sites, &circuit).unwrap();
        let a = exact.noisy_circuit_ptm(&circuit).unwrap();
        let b = truncated.noisy_circuit_ptm(&circuit).unwrap();
        let np = 3.0 * p;
        prop_assert!(a.max_abs_diff(&b) <= 3.0 * np * np);
    }
}
