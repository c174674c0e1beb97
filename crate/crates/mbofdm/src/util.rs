//! Small numeric helpers shared across modules.

/// Complementary error function, Chebyshev-fitted rational approximation
/// (Numerical Recipes `erfcc`); absolute error below 1.2e-7 everywhere.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587
                                        + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// dB to linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Weighted isotonic regression enforcing a non-increasing sequence
/// (pool-adjacent-violators). Used to clean Monte-Carlo BER curves before
/// log-domain interpolation.
pub fn isotonic_non_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // Blocks of (pooled value, pooled weight, member count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w.max(f64::MIN_POSITIVE), 1));
        // Merge while the sequence would increase.
        while blocks.len() >= 2 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 >= last.0 {
                break;
            }
            let w_sum = prev.1 + last.1;
            let pooled = (prev.0 * prev.1 + last.0 * last.1) / w_sum;
            blocks.truncate(blocks.len() - 2);
            blocks.push((pooled, w_sum, prev.2 + last.2));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (v, _, n) in blocks {
        out.extend(std::iter::repeat(v).take(n));
    }
    out
}
