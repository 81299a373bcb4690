use cni_web::{compression_view, shadow_sweep, twirl_view};

#[test]
fn z_twirl_zeroes_blocks_and_is_propagable() {
    let view = twirl_view(2, "z", 4).unwrap();
    assert_eq!(view.labels.len(), 16);
    assert!(view.propagable);
    for (r, row) in view.twirled.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            let same_x = (r >> 1 & 1, r >> 3 & 1) == (c >> 1 & 1, c >> 3 & 1);
            if !same_x {
                assert_eq!(*v, 0.0, "({r},{c})");
            }
        }
    }
}

#[test]
fn pauli_twirl_keeps_only_the_diagonal() {
    let view = twirl_view(1, "pauli", 5).unwrap();
    for r in 0..4 {
        for c in 0..4 {
            let expected = if r == c { view.original[r][c] } else { 0.0 };
            assert_eq!(view.twirled[r][c], expected);
        }
    }
    assert!(twirl_view(3, "z", 0).is_err());
    assert!(twirl_view(1, "y", 0).is_err());
}

#[test]
fn sweep_returns_three_methods_per_point() {
    let points = shadow_sweep(3, "local_bitflip", 0.1, 3, 100, 3, 2).unwrap();
    assert_eq!(points.len(), 9);
    assert!(points.iter().all(|p| p.mean.is_finite() && p.std >= 0.0));
    assert!(shadow_sweep(3, "local_bitflip", 0.1, 3, 100_000, 50, 2).is_err());
    assert!(shadow_sweep(3, "other", 0.1, 3, 10, 3, 2).is_err());
}

#[test]
fn compression_never_raises_the_overhead() {
    for seed in 0..5 {
        let view = compression_view(4, 0.05, seed).unwrap();
        assert_eq!(view.sites.len(), view.cnots);
        assert!(view.gamma_compressed <= view.gamma + 1e-12);
        for s in &view.sites {
            assert!(s.terms_compressed <= s.terms);
        }
    }
}
