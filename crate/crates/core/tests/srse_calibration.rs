use cni_core::clifford::single_qubit_cliffords;
use cni_core::shadow::{calibrate_srse, run_srse_calibrated, EnsembleSpec, NoiseFamily, ShadowSetup};
use cni_core::stabilizer::StabilizerTableau;

fn brute_force_r(d: f64) -> f64 {
    let group = single_qubit_cliffords();
    let mut quarters = 0u64;
    for c in &group {
        let out = StabilizerTableau::from_circuit(&c.synthesize()).basis_support().unwrap();
        quarters += (0..2u64).map(|b| (4.0 * out.probability(b).powi(2)) as u64).sum::<u64>();
    }
    let denom = 4.0 * group.len() as f64;
    (d * quarters as f64 - denom) / (denom * (d - 1.0))
}

#[test]
fn exhaustive_single_qubit_calibration_is_one_third() {
    assert_eq!(brute_force_r(2.0), 1.0 / 3.0);
}

#[test]
fn sampled_calibration_matches_the_exhaustive_value() {
    let (r, se) = calibrate_srse(&EnsembleSpec::global(1), &NoiseFamily::None, 100_000, 21).unwrap();
    let exact = brute_force_r(2.0);
    assert!((r - exact).abs() <= 5.0 * se, "r = {r} +- {se}");
}

#[test]
fn noiseless_calibration_is_the_depolarizing_constant() {
    for n in 2..=3 {
        let d = (n as f64).exp2();
        let (r, se) = calibrate_srse(&EnsembleSpec::global(n), &NoiseFamily::None, 40_000, 22).unwrap();
        assert!((r - 1.0 / (d + 1.0)).abs() <= 5.0 * se, "n = {n}: r = {r} +- {se}");
    }
}

#[test]
fn robust_shadows_are_unbiased_for_terminal_depolarizing_noise() {
    let n = 3;
    let noise = NoiseFamily::TerminalDepolarizing { p: 0.2 };
    let spec = EnsembleSpec::global(n);
    let (r, r_se) = calibrate_srse(&spec, &noise, 200_000, 23).unwrap();
    let setup = ShadowSetup::fidelity(StabilizerTableau::ghz(n), spec, noise);
    let rec = run_srse_calibrated(&setup, 4000, 1, r, r_se, 24).unwrap();
    let est = &rec.estimate;
    let calib_part = (est.mean - 1.0 / 8.0) * r_se / r;
    let se = (est.std_err().powi(2) + calib_part.powi(2)).sqrt();
    assert!((est.mean - 1.0).abs() <= 3.0 * se, "mean = {} +- {se}", est.mean);
}
