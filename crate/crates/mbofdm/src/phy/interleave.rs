//! Fixed block interleaver for coded bits.
//!
//! One interleaving block spans [`BLOCK_BITS`] coded bits laid out as a
//! 15-row by 20-column matrix: written row-major, read column-major. Coded
//! bits that were adjacent at the encoder end up 15 positions apart on air,
//! pushing burst errors (clustered faded tones) apart before Viterbi
//! decoding. A partial tail block reuses the same lattice with out-of-range
//! slots skipped, which keeps the permutation self-inverse friendly and the
//! stream length unchanged.

pub const BLOCK_BITS: usize = 300;
const ROWS: usize = 15;
const COLS: usize = 20;

/// Permutation for one (possibly partial) block: `out[i] = in[perm[i]]`.
fn block_permutation(len: usize) -> Vec<usize> {
    debug_assert!(len <= BLOCK_BITS);
    let mut perm = Vec::with_capacity(len);
    for c in 0..COLS {
        for r in 0..ROWS {
            let idx = r * COLS + c;
            if idx < len {
                perm.push(idx);
            }
        }
    }
    debug_assert_eq!(perm.len(), len);
    perm
}

/// Interleaves a coded-bit stream block by block.
pub fn interleave(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bits.len());
    for chunk in bits.chunks(BLOCK_BITS) {
        let perm = block_permutation(chunk.len());
        out.extend(perm.iter().map(|&i| chunk[i]));
    }
    out
}

/// Deinterleaves soft values, inverting [`interleave`].
pub fn deinterleave(soft: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; soft.len()];
    for (chunk_idx, chunk) in soft.chunks(BLOCK_BITS).enumerate() {
        let base = chunk_idx * BLOCK_BITS;
        let perm = block_permutation(chunk.len());
        for (pos, &src) in perm.iter().enumerate() {
            out[base + src] = chunk[pos];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn roundtrip_identity_for_assorted_lengths() {
        let mut rng = crate::rng::stream_rng(0x11EA, &[1]);
        for len in [1usize, 7, 299, 300, 301, 600, 894, 1200, 1207] {
            let bits: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=1)).collect();
            let soft: Vec<f64> = interleave(&bits)
                .iter()
                .map(|&b| if b == 0 { 1.0 } else { -1.0 })
                .collect();
            let back = deinterleave(&soft);
            let hard: Vec<u8> = back.iter().map(|&s| if s > 0.0 { 0 } else { 1 }).collect();
            assert_eq!(hard, bits, "len {len}");
        }
    }

    #[test]
    fn adjacent_bits_separate_by_rows() {
        // In a full block, encoder-adjacent bits land ROWS apart on air.
        let bits: Vec<u8> = (0..BLOCK_BITS).map(|i| (i % 2) as u8).collect();
        let perm = block_permutation(BLOCK_BITS);
        let mut position_of = vec![0usize; BLOCK_BITS];
        for (out_pos, &in_pos) in perm.iter().enumerate() {
            position_of[in_pos] = out_pos;
        }
        for i in 0..BLOCK_BITS - 1 {
            // Same column: exactly ROWS apart; column wrap: large jump.
            let d = position_of[i].abs_diff(position_of[i + 1]);
            assert!(
                d >= ROWS,
                "adjacent coded bits {i},{} only {d} apart after interleaving",
                i + 1
            );
        }
        let _ = bits;
    }

    #[test]
    fn permutation_is_a_bijection() {
        for len in [300usize, 157, 20, 15, 1] {
            let perm = block_permutation(len);
            let mut seen = vec![false; len];
            for &p in &perm {
                assert!(p < len && !seen[p]);
                seen[p] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}
