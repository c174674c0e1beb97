//! End-to-end coded OFDM link over a per-tone fading channel.
//!
//! Transmit chain: random payload -> terminated punctured convolutional
//! encoder -> block interleaver -> constellation mapping (QPSK or DCM) ->
//! spreading -> per-tone channel and AWGN. Receive chain mirrors it with
//! perfect channel knowledge: maximum-ratio combining of all spread copies,
//! max-log soft demapping, deinterleaving and soft Viterbi decoding.
//!
//! The channel is applied multiplicatively per tone (frequency domain); a
//! band plan selects which sub-band's response each OFDM symbol sees, either
//! a fixed band or a three-band time-frequency hopping code. Noise draws are
//! made in a fixed (symbol, tone) order independent of the band plan, so two
//! plans with identical responses produce bit-identical results under the
//! same seed.

use crate::channel::{ChannelRealization, ToneGrid};
use crate::error::Result;
use crate::phy::convcode;
use crate::phy::interleave;
use crate::phy::mcs::{McsConfig, Modulation};
use crate::phy::modulation::{dcm_llrs, map_dcm, map_qpsk, qpsk_llrs};
use crate::phy::spread::{fds_expand, mrc_combine, noise_weight, FDS_PAIR_OFFSET};
use crate::rng::{self, STREAM_LINK};
use crate::util::db_to_lin;
use crate::{DATA_TONES, NUM_SUBBANDS};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Per-tone frequency response of one user's channel on every sub-band.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub bands: [Vec<Complex64>; NUM_SUBBANDS],
}

impl UserChannel {
    /// Samples the data-tone responses of all sub-bands from a realization.
    pub fn from_realization(real: &ChannelRealization) -> Self {
        let mut bands: [Vec<Complex64>; NUM_SUBBANDS] = Default::default();
        for (b, slot) in bands.iter_mut().enumerate() {
            *slot = real.frequency_response(b, ToneGrid::Data);
        }
        UserChannel { bands }
    }

    /// Ideal flat channel (H = 1 on every tone of every band); the AWGN
    /// reference configuration.
    pub fn flat() -> Self {
        let ones = vec![Complex64::new(1.0, 0.0); DATA_TONES];
        UserChannel {
            bands: [ones.clone(), ones.clone(), ones],
        }
    }
}

/// Which sub-band each OFDM symbol is transmitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandPlan {
    /// Every symbol on one dedicated sub-band.
    Fixed(usize),
    /// Hop through the given band sequence, one symbol per hop.
    Tfc([usize; NUM_SUBBANDS]),
}

impl BandPlan {
    /// The canonical hopping pattern 1 -> 2 -> 3.
    pub const DEFAULT_TFC: BandPlan = BandPlan::Tfc([0, 1, 2]);

    /// Band used by OFDM symbol `symbol` (0-based within the stream).
    pub fn band(&self, symbol: usize) -> usize {
        match self {
            BandPlan::Fixed(b) => *b,
            BandPlan::Tfc(seq) => seq[symbol % NUM_SUBBANDS],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |b: usize| {
            if b >= NUM_SUBBANDS {
                Err(crate::Error::param(format!("band index {b} out of range")))
            } else {
                Ok(())
            }
        };
        match self {
            BandPlan::Fixed(b) => check(*b),
            BandPlan::Tfc(seq) => seq.iter().try_for_each(|&b| check(b)),
        }
    }
}

/// One link operating point.
#[derive(Debug, Clone, Copy)]
pub struct LinkConfig<'a> {
    pub mcs: &'a McsConfig,
    /// Per-data-tone symbol SNR Es/N0 in dB; `f64::INFINITY` disables noise.
    pub esn0_db: f64,
    pub plan: BandPlan,
}

/// Accumulated error counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkResult {
    pub bit_errors: u64,
    pub bits: u64,
}

impl LinkResult {
    pub fn merge(&mut self, other: LinkResult) {
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// Runs `frames` frames of the link and counts payload bit errors.
pub fn simulate_link(
    cfg: &LinkConfig,
    chan: &UserChannel,
    frames: usize,
    rng: &mut ChaCha12Rng,
) -> Result<LinkResult> {
    cfg.plan.validate()?;
    let mcs = cfg.mcs;
    let n0 = if cfg.esn0_db.is_infinite() {
        0.0
    } else {
        1.0 / db_to_lin(cfg.esn0_db)
    };
    let info_len = mcs.info_bits_per_frame();
    let symbols = mcs.symbols_per_frame();
    let copies_t = if mcs.tds { 2 } else { 1 };
    let uniques = symbols / copies_t;

    let mut result = LinkResult::default();
    let mut info = vec![0u8; info_len];
    for _ in 0..frames {
        for b in info.iter_mut() {
            *b = rng.gen_range(0..=1u8);
        }
        let coded = convcode::encode(&info, mcs.code_rate)?;
        let tx_bits = interleave::interleave(&coded);

        // Build the unique tone vectors (before time spreading).
        let bits_per_unique = tx_bits.len() / uniques;
        let tx_tones: Vec<Vec<Complex64>> = (0..uniques)
            .map(|u| {
                let chunk = &tx_bits[u * bits_per_unique..(u + 1) * bits_per_unique];
                match (mcs.modulation, mcs.fds) {
                    (Modulation::Qpsk, true) => fds_expand(&map_qpsk(chunk)),
                    (Modulation::Qpsk, false) => map_qpsk(chunk),
                    (Modulation::Dcm, false) => map_dcm(chunk),
                    (Modulation::Dcm, true) => unreachable!("no DCM operating point spreads"),
                }
            })
            .collect();

        // Per-symbol transmission; noise is drawn in fixed (symbol, tone)
        // order so the draw sequence does not depend on the band plan.
        let noise_scale = (n0 / 2.0).sqrt();
        let mut rx = vec![vec![Complex64::new(0.0, 0.0); DATA_TONES]; symbols];
        let mut sym_band = vec![0usize; symbols];
        for s in 0..symbols {
            let band = cfg.plan.band(s);
            sym_band[s] = band;
            let h = &chan.bands[band];
            let x = &tx_tones[s / copies_t];
            for k in 0..DATA_TONES {
                let mut y = h[k] * x[k];
                if n0 > 0.0 {
                    y += Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    ) * noise_scale;
                }
                rx[s][k] = y;
            }
        }

        // Receive: combine spread copies, demap, deinterleave, decode.
        let mut soft = Vec::with_capacity(tx_bits.len());
        for u in 0..uniques {
            let syms: Vec<usize> = (0..copies_t).map(|c| u * copies_t + c).collect();
            match (mcs.modulation, mcs.fds) {
                (Modulation::Qpsk, true) => {
                    for k in 0..FDS_PAIR_OFFSET {
                        let mut copies = Vec::with_capacity(2 * copies_t);
                        for &s in &syms {
                            let h = &chan.bands[sym_band[s]];
                            copies.push((rx[s][k], h[k]));
                            copies.push((rx[s][k + FDS_PAIR_OFFSET], h[k + FDS_PAIR_OFFSET]));
                        }
                        let (z, w) = mrc_combine(&copies, n0);
                        soft.extend(qpsk_llrs(z, w));
                    }
                }
                (Modulation::Qpsk, false) => {
                    for k in 0..DATA_TONES {
                        let mut copies = Vec::with_capacity(copies_t);
                        for &s in &syms {
                            copies.push((rx[s][k], chan.bands[sym_band[s]][k]));
                        }
                        let (z, w) = mrc_combine(&copies, n0);
                        soft.extend(qpsk_llrs(z, w));
                    }
                }
                (Modulation::Dcm, _) => {
                    let s = syms[0];
                    let h = &chan.bands[sym_band[s]];
                    let mut z = vec![Complex64::new(0.0, 0.0); DATA_TONES];
                    let mut w = vec![0.0f64; DATA_TONES];
                    for k in 0..DATA_TONES {
                        let e = h[k].norm_sqr();
                        if e > 1e-30 {
                            z[k] = rx[s][k] / h[k];
                            w[k] = noise_weight(e, n0);
                        }
                    }
                    soft.extend(dcm_llrs(&z, &w));
                }
            }
        }

        let deint = interleave::deinterleave(&soft);
        let decoded = convcode::decode_soft(&deint, mcs.code_rate, info_len)?;
        let errors = decoded
            .iter()
            .zip(&info)
            .filter(|(a, b)| a != b)
            .count() as u64;
        result.bit_errors += errors;
        result.bits += info_len as u64;
    }
    Ok(result)
}

/// Convenience wrapper deriving the RNG for a named link work item.
pub fn simulate_link_stream(
    cfg: &LinkConfig,
    chan: &UserChannel,
    frames: usize,
    master_seed: u64,
    tags: &[u64],
) -> Result<LinkResult> {
    let mut full = vec![STREAM_LINK];
    full.extend_from_slice(tags);
    let mut rng = rng::stream_rng(master_seed, &full);
    simulate_link(cfg, chan, frames, &mut rng)
}

/// Uncoded QPSK over flat AWGN: hard-decision bit errors out of `nbits`.
/// A closed-form sanity hook; the bit error probability is Q(sqrt(Es/N0)).
pub fn simulate_uncoded_qpsk_awgn(esn0_db: f64, nbits: usize, seed: u64) -> LinkResult {
    let mut rng = rng::stream_rng(seed, &[STREAM_LINK, u64::MAX]);
    let n0 = 1.0 / db_to_lin(esn0_db);
    let scale = (n0 / 2.0).sqrt();
    let mut errors = 0u64;
    let mut bits = 0u64;
    while (bits as usize) < nbits {
        let b = [rng.gen_range(0..=1u8), rng.gen_range(0..=1u8)];
        let s = map_qpsk(&b)[0];
        let r = s + Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ) * scale;
        if (r.re > 0.0) != (b[0] == 0) {
            errors += 1;
        }
        if (r.im > 0.0) != (b[1] == 0) {
            errors += 1;
        }
        bits += 2;
    }
    LinkResult { bit_errors: errors, bits }
}
