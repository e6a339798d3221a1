use gsbp_core::channel::ChannelConfig;

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn llrs_are_consistent_gaussians() {
    for (ebn0, rate) in [(1.163, 0.5), (1.73, 1.0 / 3.0), (3.0, 0.5)] {
        let ch = ChannelConfig::from_ebn0(ebn0, rate, 77).unwrap();
        let samples: Vec<f64> = (0..1000)
            .flat_map(|frame| ch.transmit_all_zero(1000, frame))
            .collect();
        let (mean, var) = moments(&samples);
        let expect_mean = 2.0 / ch.sigma2;
        assert!(
            (mean / expect_mean - 1.0).abs() < 0.005,
            "mean {mean} vs {expect_mean}"
        );
        assert!(
            (var / (2.0 * expect_mean) - 1.0).abs() < 0.015,
            "variance {var} vs {}",
            2.0 * expect_mean
        );
    }
}

#[test]
fn frames_are_independent_streams() {
    let ch = ChannelConfig::from_ebn0(2.0, 0.5, 5).unwrap();
    let a = ch.transmit_all_zero(2000, 0);
    let b = ch.transmit_all_zero(2000, 1);
    let (ma, va) = moments(&a);
    let (mb, vb) = moments(&b);
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / 1999.0;
    // correlation of independent streams is O(1/√n)
    assert!((cov / (va * vb).sqrt()).abs() < 0.1);
    assert_ne!(a, b);
}
