//! Punctured convolutional FEC with soft-decision Viterbi decoding.
//!
//! Mother code: constraint length 7, rate 1/3, generators 133/165/171
//! (octal). Higher rates are obtained by bit stealing with short periodic
//! patterns; the decoder re-inserts stolen positions as zero-confidence
//! soft values. Codewords are terminated: the encoder appends
//! [`FLUSH_BITS`] zeros so every block starts and ends in state 0.
//!
//! Soft values follow the convention "positive means bit 0"; magnitude is
//! confidence. The decoder maximizes the correlation between the soft
//! sequence and the candidate codeword path.

use crate::error::{Error, Result};
use crate::phy::mcs::CodeRate;

/// Constraint length.
pub const CONSTRAINT: usize = 7;
/// Zero bits appended to drive the encoder back to state 0.
pub const FLUSH_BITS: usize = 6;
/// Trellis state count (2^(K-1)).
const STATES: usize = 1 << (CONSTRAINT - 1);
/// Generator taps, octal 133/165/171; bit 6 taps the newest input bit.
const GENERATORS: [u32; 3] = [0o133, 0o165, 0o171];

/// Per-step keep flags for the three mother outputs, repeated periodically.
fn puncture_pattern(rate: CodeRate) -> &'static [[bool; 3]] {
    const T: bool = true;
    const F: bool = false;
    match (rate.num, rate.den) {
        (1, 3) => &[[T, T, T]],
        (1, 2) => &[[T, T, F]],
        // 11 input steps -> 33 mother bits, steal the final third-branch bit.
        (11, 32) => &[
            [T, T, T], [T, T, T], [T, T, T], [T, T, T], [T, T, T], [T, T, T],
            [T, T, T], [T, T, T], [T, T, T], [T, T, T], [T, T, F],
        ],
        // 5 input steps -> keep 8 of 15.
        (5, 8) => &[[T, T, F], [T, T, F], [T, F, F], [T, T, F], [T, F, F]],
        // 3 input steps -> keep 4 of 9.
        (3, 4) => &[[T, T, F], [F, T, F], [T, F, F]],
        _ => panic!("no puncture pattern for rate {rate}"),
    }
}

/// Mother-code output bits (3-bit pack, bit i = branch i) for a 7-bit
/// register value: newest input in bit 6, oldest in bit 0.
#[inline]
fn mother_outputs(reg: u32) -> u8 {
    let mut out = 0u8;
    for (i, g) in GENERATORS.iter().enumerate() {
        out |= (((reg & g).count_ones() & 1) as u8) << i;
    }
    out
}

/// Number of punctured-code bits produced by `steps` encoder steps.
fn kept_bits(pattern: &[[bool; 3]], steps: usize) -> usize {
    let per_period: usize = pattern
        .iter()
        .map(|p| p.iter().filter(|&&k| k).count())
        .sum();
    debug_assert_eq!(steps % pattern.len(), 0);
    steps / pattern.len() * per_period
}

/// Encodes `info` (bit values 0/1), appending [`FLUSH_BITS`] zeros, and
/// punctures to `rate`. The total step count (info + flush) must be a
/// multiple of the puncture period so blocks end on a pattern boundary.
pub fn encode(info: &[u8], rate: CodeRate) -> Result<Vec<u8>> {
    let pattern = puncture_pattern(rate);
    let steps = info.len() + FLUSH_BITS;
    if steps % pattern.len() != 0 {
        return Err(Error::param(format!(
            "block of {} info bits is not aligned to the rate-{rate} puncture period {}",
            info.len(),
            pattern.len()
        )));
    }
    let mut out = Vec::with_capacity(kept_bits(pattern, steps));
    let mut state = 0u32;
    for t in 0..steps {
        let bit = if t < info.len() { info[t] as u32 } else { 0 };
        debug_assert!(bit <= 1, "info bits must be 0/1");
        let reg = (bit << 6) | state;
        let mother = mother_outputs(reg);
        let keep = pattern[t % pattern.len()];
        for i in 0..3 {
            if keep[i] {
                out.push((mother >> i) & 1);
            }
        }
        state = reg >> 1;
    }
    debug_assert_eq!(state, 0, "flush must return the encoder to state 0");
    Ok(out)
}

/// Soft-decision Viterbi decoding of a terminated punctured block.
///
/// `soft` holds one value per transmitted coded bit (positive = bit 0);
/// `info_len` is the payload length the encoder was given. Returns the
/// decoded payload (flush bits stripped).
pub fn decode_soft(soft: &[f64], rate: CodeRate, info_len: usize) -> Result<Vec<u8>> {
    let pattern = puncture_pattern(rate);
    let steps = info_len + FLUSH_BITS;
    if steps % pattern.len() != 0 {
        return Err(Error::param(format!(
            "info_len {info_len} not aligned to rate-{rate} puncture period"
        )));
    }
    let expect = kept_bits(pattern, steps);
    if soft.len() != expect {
        return Err(Error::param(format!(
            "soft input length {} but rate-{rate} block of {info_len} info bits has {expect} coded bits",
            soft.len()
        )));
    }

    // Depuncture into per-step triples; stolen positions get zero confidence.
    let mut triples = vec![[0.0f64; 3]; steps];
    let mut cursor = 0;
    for (t, triple) in triples.iter_mut().enumerate() {
        let keep = pattern[t % pattern.len()];
        for i in 0..3 {
            if keep[i] {
                triple[i] = soft[cursor];
                cursor += 1;
            }
        }
    }

    // Transition table: entering state s the input bit is bit 5 of s, and the
    // two predecessors differ in the register bit that was shifted out.
    // pre-computed mother outputs for each (new_state, lost_bit).
    let mut branch_out = [[0u8; 2]; STATES];
    for s_new in 0..STATES {
        for lost in 0..2 {
            let reg = ((s_new as u32) << 1) | lost as u32;
            branch_out[s_new][lost] = mother_outputs(reg);
        }
    }

    const NEG: f64 = f64::NEG_INFINITY;
    let mut metric = [NEG; STATES];
    metric[0] = 0.0; // encoder starts in state 0
    let mut next = [NEG; STATES];
    // One u64 of predecessor decisions (lost-bit choice) per step.
    let mut decisions = vec![0u64; steps];

    for (t, triple) in triples.iter().enumerate() {
        // Correlation metric for the 8 possible output triples.
        let mut corr = [0.0f64; 8];
        for (bits, c) in corr.iter_mut().enumerate() {
            let mut m = 0.0;
            for i in 0..3 {
                // Output bit 0 earns +soft, bit 1 earns -soft.
                m += if bits >> i & 1 == 0 { triple[i] } else { -triple[i] };
            }
            *c = m;
        }
        let mut word = 0u64;
        for (s_new, n) in next.iter_mut().enumerate() {
            let p0 = (s_new << 1) & (STATES - 1);
            let p1 = p0 | 1;
            let m0 = metric[p0] + corr[branch_out[s_new][0] as usize];
            let m1 = metric[p1] + corr[branch_out[s_new][1] as usize];
            if m1 > m0 {
                word |= 1 << s_new;
                *n = m1;
            } else {
                *n = m0;
            }
        }
        decisions[t] = word;
        metric = next;
    }

    // Terminated block: trace back from state 0.
    let mut decoded = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        decoded[t] = ((state >> 5) & 1) as u8;
        let lost = (decisions[t] >> state) & 1;
        state = ((state << 1) | lost as usize) & (STATES - 1);
    }
    debug_assert_eq!(state, 0, "traceback must end in the start state");
    decoded.truncate(info_len);
    Ok(decoded)
}

/// Minimum Hamming weight over all codewords that leave state 0 and return
/// to it (the free distance of the punctured, periodically time-varying
/// code). Exposed for validation; a healthy pattern keeps this well above 1.
pub fn free_distance(rate: CodeRate, horizon: usize) -> u32 {
    let pattern = puncture_pattern(rate);
    let period = pattern.len();
    let inf = u32::MAX / 2;
    let mut best = inf;
    // The first divergence can happen at any pattern phase.
    for start_phase in 0..period {
        // dist[s] = min weight of a path currently in state s.
        let mut dist = vec![inf; STATES];
        // Force the diverging step (input 1 from state 0).
        let reg = 1u32 << 6;
        let keep = pattern[start_phase];
        let mother = mother_outputs(reg);
        let mut w = 0;
        for i in 0..3 {
            if keep[i] && (mother >> i) & 1 == 1 {
                w += 1;
            }
        }
        dist[(reg >> 1) as usize] = w;
        for t in 1..horizon {
            let keep = pattern[(start_phase + t) % period];
            let mut nd = vec![inf; STATES];
            for s in 0..STATES {
                if dist[s] >= inf {
                    continue;
                }
                for bit in 0..2u32 {
                    let reg = (bit << 6) | s as u32;
                    let mother = mother_outputs(reg);
                    let mut w = dist[s];
                    for i in 0..3 {
                        if keep[i] && (mother >> i) & 1 == 1 {
                            w += 1;
                        }
                    }
                    let s_new = (reg >> 1) as usize;
                    // Re-merging with the all-zero path closes a codeword.
                    if s_new == 0 && bit == 0 {
                        best = best.min(w);
                    } else {
                        nd[s_new] = nd[s_new].min(w);
                    }
                }
            }
            dist = nd;
        }
    }
    best
}
