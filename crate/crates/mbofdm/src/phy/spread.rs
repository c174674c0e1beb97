//! Spreading and maximum-ratio combining.
//!
//! Frequency-domain spreading (FDS) duplicates each payload symbol onto a
//! paired tone 50 positions up within the same OFDM symbol; time-domain
//! spreading (TDS) repeats the whole tone vector on the following OFDM
//! symbol. The receiver maximum-ratio combines all copies of a payload
//! symbol before demapping, so each doubling of copies buys 3 dB of
//! post-combining SNR on a flat channel.

use num_complex::Complex64;

/// Tone distance between FDS copies.
pub const FDS_PAIR_OFFSET: usize = 50;

/// Places `payload` symbols (50 of them) onto 100 tones with FDS
/// duplication: tone `k` and tone `k + 50` carry `payload[k]`.
pub fn fds_expand(payload: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(payload.len(), FDS_PAIR_OFFSET, "FDS fills half the tones");
    let mut tones = Vec::with_capacity(2 * FDS_PAIR_OFFSET);
    tones.extend_from_slice(payload);
    tones.extend_from_slice(payload);
    tones
}

/// Reliability weight `|H|^2 / N0` with a noise-free guard: `n0 == 0` maps
/// to a huge but finite weight so downstream metric differences stay finite.
pub fn noise_weight(h_energy: f64, n0: f64) -> f64 {
    if n0 > 0.0 {
        h_energy / n0
    } else {
        h_energy * 1e30
    }
}

/// Maximum-ratio combining of received copies `(r_i, h_i)` of one payload
/// symbol. Returns the combined equalized observation and its reliability
/// weight (`sum |h_i|^2 / N0`). All-zero channel energy degrades gracefully
/// to an erasure (weight 0).
pub fn mrc_combine(copies: &[(Complex64, Complex64)], n0: f64) -> (Complex64, f64) {
    let mut num = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for &(r, h) in copies {
        num += h.conj() * r;
        energy += h.norm_sqr();
    }
    if energy <= f64::MIN_POSITIVE {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    (num / energy, noise_weight(energy, n0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Empirical error variance of equalized observations around the known
    /// transmitted symbol.
    fn residual_variance(
        copies_per_symbol: usize,
        n0: f64,
        flat: bool,
        trials: usize,
        seed: u64,
    ) -> (f64, f64) {
        let mut rng = crate::rng::stream_rng(seed, &[99]);
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2);
        let mut var_sum = 0.0;
        let mut inv_weight_sum = 0.0;
        for _ in 0..trials {
            let copies: Vec<(Complex64, Complex64)> = (0..copies_per_symbol)
                .map(|_| {
                    let h = if flat {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(
                            0.8 + 0.4 * rng.gen::<f64>(),
                            0.5 * rng.gen::<f64>() - 0.25,
                        )
                    };
                    let n = Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    ) * (n0 / 2.0).sqrt();
                    (h * s + n, h)
                })
                .collect();
            let (z, w) = mrc_combine(&copies, n0);
            var_sum += (z - s).norm_sqr();
            inv_weight_sum += 1.0 / w;
        }
        (var_sum / trials as f64, inv_weight_sum / trials as f64)
    }

    #[test]
    fn two_copy_combining_gains_3db_on_flat_channel() {
        let n0 = 0.25;
        let trials = 40_000;
        let (v1, _) = residual_variance(1, n0, true, trials, 0xA1);
        let (v2, _) = residual_variance(2, n0, true, trials, 0xA2);
        let gain_db = 10.0 * (v1 / v2).log10();
        println!("MRC gain with 2 flat copies: {gain_db:.3} dB (residuals {v1:.5} -> {v2:.5})");
        assert!(
            (gain_db - 3.0103).abs() < 0.1,
            "expected ~3 dB combining gain, got {gain_db:.3} dB"
        );
        // Single-copy residual should itself match N0.
        assert!((v1 / n0 - 1.0).abs() < 0.03, "v1 {v1} vs n0 {n0}");
    }

    #[test]
    fn four_copies_gain_6db() {
        let n0 = 0.25;
        let (v1, _) = residual_variance(1, n0, true, 40_000, 0xB1);
        let (v4, _) = residual_variance(4, n0, true, 40_000, 0xB4);
        let gain_db = 10.0 * (v1 / v4).log10();
        assert!((gain_db - 6.0206).abs() < 0.15, "got {gain_db:.3} dB");
    }

    #[test]
    fn combined_weight_predicts_residual_on_fading_copies() {
        // For MRC, the residual norm_sqr of one observation is
        // n0 / sum|h|^2 = 1/weight, so the mean residual must match the
        // mean of 1/weight over the same draws.
        let n0 = 0.1;
        let (v, mean_inv_w) = residual_variance(2, n0, false, 60_000, 0xC3);
        assert!(
            (v / mean_inv_w - 1.0).abs() < 0.05,
            "residual {v:.6} vs predicted {mean_inv_w:.6}"
        );
    }

    #[test]
    fn zero_energy_copies_become_erasures() {
        let z = Complex64::new(0.0, 0.0);
        let copies = [(Complex64::new(0.3, 0.1), z)];
        let (out, w) = mrc_combine(&copies, 0.1);
        assert_eq!(w, 0.0);
        assert_eq!(out, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn fds_duplicates_onto_paired_tones() {
        let payload: Vec<Complex64> = (0..FDS_PAIR_OFFSET)
            .map(|k| Complex64::new(k as f64, -(k as f64)))
            .collect();
        let tones = fds_expand(&payload);
        for k in 0..FDS_PAIR_OFFSET {
            assert_eq!(tones[k], payload[k]);
            assert_eq!(tones[k + FDS_PAIR_OFFSET], payload[k]);
        }
    }

    #[test]
    fn noise_free_weight_is_finite() {
        let w = noise_weight(0.7, 0.0);
        assert!(w.is_finite() && w > 1e29);
    }
}
