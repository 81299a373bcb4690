use cni_core::clifford::{random_clifford, random_clifford_tableau, random_local_clifford, single_qubit_cliffords, CliffordTableau};
use cni_core::ptm::{index_pauli, Ptm};
use cni_core::rng::stream;
use cni_core::Gate;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn single_qubit_sampler_is_uniform_over_the_group() {
    let group = single_qubit_cliffords();
    assert_eq!(group.len(), 24);
    let draws = 48_000usize;
    let mut rng = stream(11, &[]);
    let mut counts = [0usize; 24];
    for _ in 0..draws {
        let t = random_clifford_tableau(1, &mut rng).unwrap();
        let idx = group.iter().position(|g| *g == t).expect("sample outside the group");
        counts[idx] += 1;
    }
    let expected = draws as f64 / 24.0;
    let sigma = (draws as f64 * (1.0 / 24.0) * (23.0 / 24.0)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        assert!((c as f64 - expected).abs() <= 4.0 * sigma, "element {i}: {c} vs {expected}");
    }
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(23.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 = {chi2}");
}

#[test]
fn synthesized_circuits_realize_their_tableau() {
    let mut rng = stream(12, &[]);
    for n in 1..=5 {
        for _ in 0..50 {
            let t = random_clifford_tableau(n, &mut rng).unwrap();
            assert_eq!(CliffordTableau::from_circuit(&t.synthesize()), t);
        }
    }
}

#[test]
fn two_qubit_first_moment_is_depolarizing() {
    let n = 2;
    let draws = 4000usize;
    let dim = 16;
    let mut rng = stream(13, &[]);
    let mut sums = vec![vec![0.0f64; dim]; dim];
    for _ in 0..draws {
        let c = random_clifford(n, &mut rng).unwrap();
        let r = Ptm::of_unitary(&c).unwrap();
        let r = r.matrix();
        for a in 0..dim {
            for b in 0..dim {
                let mut v = 0.0;
                for z in 0..dim {
                    if index_pauli(n, z).is_in_z_group() {
                        v += r[(z, a)] * r[(z, b)];
                    }
                }
                sums[a][b] += v;
            }
        }
    }
    let sigma = (0.2f64 * 0.8 / draws as f64).sqrt();
    assert_eq!(sums[0][0], draws as f64);
    for a in 0..dim {
        for b in 0..dim {
            let mean = sums[a][b] / draws as f64;
            if a != b {
                assert_eq!(mean, 0.0, "off-diagonal ({a},{b})");
            } else if a > 0 {
                assert!((mean - 0.2).abs() <= 3.0 * sigma, "diagonal {a}: {mean}");
            }
        }
    }
}

#[test]
fn local_ensemble_acts_qubit_by_qubit() {
    let mut rng = stream(14, &[]);
    for _ in 0..200 {
        let c = random_local_clifford(4, &mut rng).unwrap();
        assert!(c.gates().iter().all(|g| !matches!(g, Gate::Cnot(..))));
        let t = CliffordTableau::from_circuit(&c);
        for q in 0..4 {
            assert_eq!(t.x_images()[q].support(), 1 << q);
            assert_eq!(t.z_images()[q].support(), 1 << q);
        }
    }
}
