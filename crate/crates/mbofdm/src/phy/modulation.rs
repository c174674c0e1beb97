//! Constellation mapping and soft demapping.
//!
//! QPSK carries two coded bits per tone, Gray-mapped, unit energy. Dual-
//! carrier modulation (DCM) takes groups of four coded bits and spreads each
//! group over two tones 50 positions apart using two different 16-point
//! constellations; every bit then rides on both tones, which buys frequency
//! diversity on selective channels without extra bandwidth.
//!
//! The DCM pair for bits `(xi, xq, yi, yq)` (antipodal, bit 0 -> +1) is
//! `d1 = ((2xi + yi) + j(2xq + yq)) / sqrt(10)` on the lower tone and
//! `d2 = ((xi - 2yi) + j(xq - 2yq)) / sqrt(10)` on the upper tone. The
//! transform is orthogonal per real dimension and invertible, and both
//! constellations average unit energy.
//!
//! Soft outputs follow the decoder convention: positive favours bit 0.
//! `weight` arguments are `|H|^2 / N0` for the tone (or the sum over
//! maximum-ratio-combined copies); the Gaussian metric per real dimension is
//! then `weight * (z - p)^2`.

use crate::DATA_TONES;
use num_complex::Complex64;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;
/// 1/sqrt(10): DCM normalization for unit average energy.
const DCM_NORM: f64 = 0.31622776601683794;
/// Tone separation of a DCM pair.
pub const DCM_PAIR_OFFSET: usize = 50;

/// Maps bit pairs to Gray QPSK symbols; `bits.len()` must be even.
pub fn map_qpsk(bits: &[u8]) -> Vec<Complex64> {
    assert_eq!(bits.len() % 2, 0, "QPSK consumes bit pairs");
    bits.chunks_exact(2)
        .map(|b| {
            Complex64::new(
                (1.0 - 2.0 * b[0] as f64) * SQRT_HALF,
                (1.0 - 2.0 * b[1] as f64) * SQRT_HALF,
            )
        })
        .collect()
}

/// Soft bits for one equalized QPSK observation `z` with reliability
/// `weight = |H|^2 / N0`. Returns values for the (I, Q) bits.
pub fn qpsk_llrs(z: Complex64, weight: f64) -> [f64; 2] {
    // LLR = weight * ((z - s1)^2 - (z - s0)^2) per dimension, which
    // simplifies to 2*sqrt(2)*weight*z for antipodal points at +-1/sqrt(2).
    let scale = 2.0 * std::f64::consts::SQRT_2 * weight;
    [scale * z.re, scale * z.im]
}

/// Maps one OFDM symbol's worth of coded bits (2 * [`DATA_TONES`]) onto 100
/// tones with DCM pairing: group `k` of four bits lands on tones `k` and
/// `k + 50`.
pub fn map_dcm(bits: &[u8]) -> Vec<Complex64> {
    assert_eq!(bits.len(), 2 * DATA_TONES, "DCM maps whole OFDM symbols");
    let mut tones = vec![Complex64::new(0.0, 0.0); DATA_TONES];
    for k in 0..DCM_PAIR_OFFSET {
        let xi = 1.0 - 2.0 * bits[2 * k] as f64;
        let xq = 1.0 - 2.0 * bits[2 * k + 1] as f64;
        let yi = 1.0 - 2.0 * bits[2 * k + 2 * DCM_PAIR_OFFSET] as f64;
        let yq = 1.0 - 2.0 * bits[2 * k + 2 * DCM_PAIR_OFFSET + 1] as f64;
        tones[k] = Complex64::new((2.0 * xi + yi) * DCM_NORM, (2.0 * xq + yq) * DCM_NORM);
        tones[k + DCM_PAIR_OFFSET] =
            Complex64::new((xi - 2.0 * yi) * DCM_NORM, (xq - 2.0 * yq) * DCM_NORM);
    }
    tones
}

/// Max-log soft bits for one DCM tone pair and one real dimension.
///
/// `z1`, `z2` are the equalized observations of that dimension on the lower
/// and upper tone; `w1`, `w2` their reliabilities. Returns soft values for
/// the (x, y) bits of this dimension.
fn dcm_dimension_llrs(z1: f64, w1: f64, z2: f64, w2: f64) -> [f64; 2] {
    // Four (x, y) hypotheses; metric = w1*(z1 - p1)^2 + w2*(z2 - p2)^2.
    let mut best_x = [f64::INFINITY; 2]; // index: 0 -> x=+1 (bit 0), 1 -> x=-1
    let mut best_y = [f64::INFINITY; 2];
    for (x_idx, x) in [1.0f64, -1.0].iter().enumerate() {
        for (y_idx, y) in [1.0f64, -1.0].iter().enumerate() {
            let p1 = (2.0 * x + y) * DCM_NORM;
            let p2 = (x - 2.0 * y) * DCM_NORM;
            let m = w1 * (z1 - p1) * (z1 - p1) + w2 * (z2 - p2) * (z2 - p2);
            if m < best_x[x_idx] {
                best_x[x_idx] = m;
            }
            if m < best_y[y_idx] {
                best_y[y_idx] = m;
            }
        }
    }
    // log P(bit 0) - log P(bit 1) ~ metric(bit 1) - metric(bit 0).
    [best_x[1] - best_x[0], best_y[1] - best_y[0]]
}

/// Demaps one OFDM symbol of DCM observations back to 200 soft bits in the
/// mapper's bit order. `z[k]` is the equalized tone `k`, `weights[k]` its
/// reliability.
pub fn dcm_llrs(z: &[Complex64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(z.len(), DATA_TONES);
    assert_eq!(weights.len(), DATA_TONES);
    let mut soft = vec![0.0f64; 2 * DATA_TONES];
    for k in 0..DCM_PAIR_OFFSET {
        let (z1, w1) = (z[k], weights[k]);
        let (z2, w2) = (z[k + DCM_PAIR_OFFSET], weights[k + DCM_PAIR_OFFSET]);
        let [xi, yi] = dcm_dimension_llrs(z1.re, w1, z2.re, w2);
        let [xq, yq] = dcm_dimension_llrs(z1.im, w1, z2.im, w2);
        soft[2 * k] = xi;
        soft[2 * k + 1] = xq;
        soft[2 * k + 2 * DCM_PAIR_OFFSET] = yi;
        soft[2 * k + 2 * DCM_PAIR_OFFSET + 1] = yq;
    }
    soft
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn qpsk_is_unit_energy_and_gray() {
        let symbols = map_qpsk(&[0, 0, 0, 1, 1, 0, 1, 1]);
        for s in &symbols {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
        // Gray property: neighbours along one axis differ in exactly one bit.
        // (0,0) and (0,1) share I; (0,0) and (1,0) share Q.
        assert_eq!(symbols[0].re, symbols[1].re);
        assert_eq!(symbols[0].im, symbols[2].im);
    }

    #[test]
    fn dcm_constellations_have_exact_unit_mean_energy() {
        // Enumerate all 16 groups: the average pair energy (per tone) is
        // exactly 1 because per dimension E[(2x+y)^2] = E[(x-2y)^2] = 5 and
        // the normalization is 1/10.
        let mut total = 0.0;
        for g in 0..16u32 {
            let mut bits = vec![0u8; 2 * DATA_TONES];
            bits[0] = (g & 1) as u8;
            bits[1] = (g >> 1 & 1) as u8;
            bits[100] = (g >> 2 & 1) as u8;
            bits[101] = (g >> 3 & 1) as u8;
            let tones = map_dcm(&bits);
            total += tones[0].norm_sqr() + tones[DCM_PAIR_OFFSET].norm_sqr();
            // Every coordinate sits on the {+-1, +-3}/sqrt(10) lattice.
            for &t in &[tones[0], tones[DCM_PAIR_OFFSET]] {
                for coord in [t.re, t.im] {
                    let scaled = (coord / DCM_NORM).abs();
                    assert!(
                        (scaled - 1.0).abs() < 1e-12 || (scaled - 3.0).abs() < 1e-12,
                        "coordinate {coord} off the lattice"
                    );
                }
            }
        }
        let mean_per_tone = total / 32.0;
        assert!(
            (mean_per_tone - 1.0).abs() < 1e-12,
            "mean DCM tone energy {mean_per_tone}"
        );
    }

    #[test]
    fn dcm_roundtrips_through_noiseless_demap() {
        // All 16 groups, random per-tone complex gains: equalized noise-free
        // observations must decide every bit correctly with finite weights.
        let mut rng = crate::rng::stream_rng(0xD0, &[7]);
        for g in 0..16u32 {
            let mut bits = vec![0u8; 2 * DATA_TONES];
            for (i, pos) in [0usize, 1, 100, 101].into_iter().enumerate() {
                bits[pos] = (g >> i & 1) as u8;
            }
            let tones = map_dcm(&bits);
            let mut z = tones.clone();
            let mut w = vec![1.0; DATA_TONES];
            for k in 0..DATA_TONES {
                let h = Complex64::new(rng.gen::<f64>() + 0.2, rng.gen::<f64>() - 0.5);
                // Receiver equalizes r/h = tone exactly; weight |h|^2 / N0.
                z[k] = (tones[k] * h) / h;
                w[k] = h.norm_sqr() / 0.01;
            }
            let soft = dcm_llrs(&z, &w);
            for pos in [0usize, 1, 100, 101] {
                let decided = if soft[pos] > 0.0 { 0 } else { 1 };
                assert_eq!(decided, bits[pos], "group {g:04b} bit at {pos}");
            }
        }
    }

    #[test]
    fn qpsk_llr_sign_tracks_symbol_quadrant() {
        let z = Complex64::new(0.9, -0.4);
        let [li, lq] = qpsk_llrs(z, 2.0);
        assert!(li > 0.0 && lq < 0.0);
        // Scaling: LLR grows linearly with both weight and displacement.
        let [li2, _] = qpsk_llrs(z, 4.0);
        assert!((li2 / li - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dcm_llr_prefers_nearer_hypothesis_under_fade() {
        // Kill the first tone (weight 0): decisions must follow the second
        // tone alone, which still determines both bits of each dimension.
        let mut bits = vec![0u8; 2 * DATA_TONES];
        bits[0] = 1;
        bits[100] = 1;
        let tones = map_dcm(&bits);
        let mut w = vec![1000.0; DATA_TONES];
        w[0] = 0.0; // lower tone of pair 0 erased
        let soft = dcm_llrs(&tones, &w);
        assert!(soft[0] < 0.0, "x bit should still decode from upper tone");
        assert!(soft[100] < 0.0, "y bit should still decode from upper tone");
    }
}
