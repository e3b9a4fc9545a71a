//! The estimator against the closed-form error of a two-word code.
//!
//! With one key per row and a silent jammer, minimum distance decoding of two
//! codewords at distance `d` errs with probability `Q(d / 2σ)`.

use avclab::codebook::{build_codebook, StorageMode};
use avclab::decoder::CountingMode;
use avclab::estimator::estimate_error;
use avclab::jammers::JammerStrategy;
use avclab::model::{ChannelParams, CodeParams};

fn q(y: f64) -> f64 {
    0.5 * libm::erfc(y / std::f64::consts::SQRT_2)
}

#[test]
fn two_word_code_matches_gaussian_tail() {
    let trials = 20_000;
    for (seed, sigma2) in [(1, 0.5), (2, 1.0), (3, 2.0)] {
        let params = ChannelParams::new(4, 1.0, 1.0, sigma2).unwrap();
        let code = CodeParams::new(4, 0.1, 0.0).unwrap();
        assert_eq!((code.messages(), code.keys_per_row()), (2, 1));
        for storage in [StorageMode::Materialized, StorageMode::OnDemand] {
            let cb = build_codebook(seed, params, code, storage).unwrap();
            let a = cb.codeword(1, 1).unwrap().into_inner();
            let b = cb.codeword(2, 1).unwrap().into_inner();
            let d = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let expected = q(d / (2.0 * sigma2.sqrt()));
            for i in [1, 2] {
                let e = estimate_error(&cb, i, &JammerStrategy::Zero, trials, 40 + seed, CountingMode::Operational)
                    .unwrap();
                let sd = (expected * (1.0 - expected) / trials as f64).sqrt();
                assert!(
                    (e.p_hat - expected).abs() < 4.5 * sd + 1e-4,
                    "seed {seed}, sigma2 {sigma2}, message {i}: {} vs {expected}",
                    e.p_hat
                );
            }
        }
    }
}
