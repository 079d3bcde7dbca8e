use hybridcast_web::{correlation_curve, sample_field, spectrum_curve, FieldAnimation};

#[test]
fn field_has_grid_size_and_depends_on_seed() {
    let a = sample_field(16, 32, 0.5, 5.31, 2.0, 8, 1).unwrap();
    assert_eq!(a.len(), 512);
    assert_eq!(a, sample_field(16, 32, 0.5, 5.31, 2.0, 8, 1).unwrap());
    assert_ne!(a, sample_field(16, 32, 0.5, 5.31, 2.0, 8, 2).unwrap());
    assert!(sample_field(16, 32, 0.5, -1.0, 2.0, 8, 1)
        .unwrap_err()
        .contains("spectrum.tau"));
}

#[test]
fn curves() {
    let c = spectrum_curve(0.5, 5.31, 2.0, 8).unwrap();
    assert_eq!(c.len(), 9);
    assert_eq!(c[0], 0.0);
    assert!(c.windows(2).skip(1).all(|w| w[1] < w[0]));
    let r = correlation_curve(0.5, 5.31, 2.0, 8, 50).unwrap();
    assert_eq!(r.len(), 50);
    assert!((r[0] - 1.0).abs() < 1e-12);
    assert!(r.iter().all(|v| v.abs() <= 1.0 + 1e-12));
    assert!(correlation_curve(0.0, 5.31, 2.0, 8, 10).is_err());
}

#[test]
fn animation_steps_and_stays_correlated() {
    let mut anim = FieldAnimation::new(8, 16, 0.5, 5.31, 2.0, 6, 6.0, 24.0, 3).unwrap();
    let before = anim.values();
    anim.step();
    let after = anim.values();
    assert_eq!(anim.steps(), 1);
    assert!((anim.alpha() - (-0.25f64).exp()).abs() < 1e-15);
    let dot: f64 = before.iter().zip(&after).map(|(a, b)| a * b).sum();
    assert!(dot > 0.0);
    assert_ne!(before, after);
}
