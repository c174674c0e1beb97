//! Exponential effective-SINR mapping (EESM) link abstraction.
//!
//! A frequency-selective channel hands the decoder 100 different per-tone
//! SINRs. EESM compresses that vector into one scalar: the SNR at which a
//! flat AWGN link with the same transmission mode would see the same coded
//! BER. The compression has a single shape parameter `lambda` that is fitted
//! per transmission mode against Monte-Carlo link runs, after which
//! fading-link BER can be predicted from a cached AWGN reference curve
//! without re-running the decoder.

use crate::phy::link::{simulate_link, BandPlan, LinkConfig, LinkResult, UserChannel};
use crate::phy::mcs::{mcs_table, McsConfig};
use crate::rng::{self, STREAM_AWGN_REF, STREAM_CALIBRATION};
use crate::util::{db_to_lin, isotonic_non_increasing, lin_to_db};
use crate::{Error, Result, NUM_SUBBANDS};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// BER floor substituted for zero-error measurements so log-domain
/// interpolation stays finite.
const BER_FLOOR: f64 = 1e-12;

/// Calibration samples outside this measured-BER window carry little shape
/// information (error-free points have no gradient at all) and are skipped.
const CAL_BER_WINDOW: (f64, f64) = (1e-5, 0.3);

/// Search range for the shape parameter, as log10(lambda).
const LAMBDA_LOG10_RANGE: (f64, f64) = (-1.0, 2.0);

/// Per-tone SINR (linear) seen on one sub-band at the given symbol SNR.
///
/// The transmit constellations are unit-energy, so tone `k` contributes
/// `|H_k|^2 * Es/N0`.
pub fn subcarrier_sinr(band_response: &[Complex64], esn0_db: f64) -> Vec<f64> {
    let es_n0 = db_to_lin(esn0_db);
    band_response.iter().map(|h| h.norm_sqr() * es_n0).collect()
}

/// Effective SINR (linear) of a per-tone SINR vector.
///
/// Computes `-lambda * ln(mean(exp(-sinr_i / lambda)))` in a min-factored
/// form so no exponential can overflow regardless of `lambda`. The result
/// always lies between the minimum and the arithmetic mean of the inputs,
/// approaching the former as `lambda -> 0` and the latter as
/// `lambda -> inf`.
pub fn effective_sinr(sinrs: &[f64], lambda: f64) -> Result<f64> {
    if sinrs.is_empty() {
        return Err(Error::param("effective SINR of an empty vector"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param(format!("lambda must be positive and finite, got {lambda}")));
    }
    let mut min = f64::INFINITY;
    for &s in sinrs {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::param(format!("per-tone SINR must be finite and >= 0, got {s}")));
        }
        min = min.min(s);
    }
    let mean_exp = sinrs.iter().map(|&s| (-(s - min) / lambda).exp()).sum::<f64>()
        / sinrs.len() as f64;
    Ok(min - lambda * mean_exp.ln())
}

/// Effective SINR in dB of one sub-band for a user's channel.
pub fn band_effective_sinr_db(
    chan: &UserChannel,
    band: usize,
    esn0_db: f64,
    lambda: f64,
) -> Result<f64> {
    let response = chan
        .bands
        .get(band)
        .ok_or_else(|| Error::param(format!("band index {band} out of range")))?;
    let sinrs = subcarrier_sinr(response, esn0_db);
    Ok(lin_to_db(effective_sinr(&sinrs, lambda)?.max(BER_FLOOR)))
}

/// Effective SINR in dB of every sub-band; one row of a CSI matrix.
pub fn band_effective_sinrs_db(
    chan: &UserChannel,
    esn0_db: f64,
    lambda: f64,
) -> Result<[f64; NUM_SUBBANDS]> {
    let mut out = [0.0; NUM_SUBBANDS];
    for (b, slot) in out.iter_mut().enumerate() {
        *slot = band_effective_sinr_db(chan, b, esn0_db, lambda)?;
    }
    Ok(out)
}

/// One measured point of an AWGN reference curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPoint {
    pub snr_db: f64,
    pub ber: f64,
}

/// Flat-channel BER-vs-SNR curve for one transmission mode.
///
/// Lookups interpolate log10(BER) linearly in dB between grid points and
/// clamp outside the grid, so a reference built once (or loaded from a cache
/// file) answers arbitrary effective-SINR queries.
#[derive(Debug, Clone)]
pub struct AwgnReference {
    pub label: String,
    points: Vec<RefPoint>,
}

impl AwgnReference {
    /// Builds a reference from explicit (snr_db, ber) pairs. The pairs are
    /// sorted by SNR and pooled to a non-increasing BER sequence so that
    /// Monte-Carlo jitter cannot produce a non-monotone lookup table.
    pub fn from_points(label: &str, pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::param("a reference curve needs at least two points"));
        }
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        for &(snr, ber) in &sorted {
            if !snr.is_finite() || !ber.is_finite() || !(0.0..=1.0).contains(&ber) {
                return Err(Error::param(format!("bad reference point ({snr}, {ber})")));
            }
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::param("duplicate SNR grid point in reference curve"));
        }
        let bers: Vec<f64> = sorted.iter().map(|p| p.1).collect();
        let weights = vec![1.0; bers.len()];
        let pooled = isotonic_non_increasing(&bers, &weights);
        let points = sorted
            .iter()
            .zip(pooled)
            .map(|(&(snr_db, _), ber)| RefPoint { snr_db, ber })
            .collect();
        Ok(AwgnReference { label: label.to_string(), points })
    }

    /// Simulates the curve on a flat channel. Each grid point runs frames
    /// until `min_errors` bit errors or `max_bits` payload bits, whichever
    /// comes first.
    pub fn simulate(
        mcs: &McsConfig,
        snr_grid_db: &[f64],
        min_errors: u64,
        max_bits: u64,
        master_seed: u64,
    ) -> Result<Self> {
        let chan = UserChannel::flat();
        let mcs_tag = mcs_table()
            .iter()
            .position(|m| m.label == mcs.label)
            .unwrap_or(usize::MAX) as u64;
        let mut pairs = Vec::with_capacity(snr_grid_db.len());
        for (i, &snr_db) in snr_grid_db.iter().enumerate() {
            let cfg = LinkConfig { mcs, esn0_db: snr_db, plan: BandPlan::Fixed(0) };
            let mut acc = LinkResult::default();
            let mut chunk = 0u64;
            while acc.bit_errors < min_errors && acc.bits < max_bits {
                let mut rng = rng::stream_rng(
                    master_seed,
                    &[STREAM_AWGN_REF, mcs_tag, i as u64, chunk],
                );
                acc.merge(simulate_link(&cfg, &chan, 64, &mut rng)?);
                chunk += 1;
            }
            pairs.push((snr_db, acc.ber()));
        }
        Self::from_points(mcs.label, &pairs)
    }

    /// Interpolated BER at an arbitrary SNR, clamped to the grid ends.
    pub fn ber_at_db(&self, snr_db: f64) -> f64 {
        let pts = &self.points;
        if snr_db <= pts[0].snr_db {
            return pts[0].ber.max(BER_FLOOR);
        }
        if snr_db >= pts[pts.len() - 1].snr_db {
            return pts[pts.len() - 1].ber.max(BER_FLOOR);
        }
        let j = pts.partition_point(|p| p.snr_db < snr_db);
        let (a, b) = (&pts[j - 1], &pts[j]);
        let t = (snr_db - a.snr_db) / (b.snr_db - a.snr_db);
        let la = a.ber.max(BER_FLOOR).log10();
        let lb = b.ber.max(BER_FLOOR).log10();
        10f64.powf(la + t * (lb - la))
    }

    pub fn points(&self) -> &[RefPoint] {
        &self.points
    }

    /// Serializes as one `snr_db ber` pair per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# awgn reference {}", self.label).unwrap();
        for p in &self.points {
            writeln!(s, "{} {:e}", p.snr_db, p.ber).unwrap();
        }
        s
    }

    /// Parses the `to_text` format; `#` lines are comments.
    pub fn from_text(label: &str, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| Error::param(format!("line {}: expected two fields", ln + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::param(format!("line {}: {e}", ln + 1)))
            };
            let snr = parse(it.next())?;
            let ber = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::param(format!("line {}: trailing fields", ln + 1)));
            }
            pairs.push((snr, ber));
        }
        Self::from_points(label, &pairs)
    }
}

/// One calibration observation: the per-tone SINR vector the decoder saw and
/// the BER it actually produced.
#[derive(Debug, Clone)]
pub struct CalSample {
    pub sinrs: Vec<f64>,
    pub measured_ber: f64,
}

fn fit_objective(samples: &[CalSample], reference: &AwgnReference, lambda: f64) -> f64 {
    let mut acc = 0.0;
    for s in samples {
        let eff_db = lin_to_db(effective_sinr(&s.sinrs, lambda).unwrap().max(BER_FLOOR));
        let predicted = reference.ber_at_db(eff_db).max(BER_FLOOR);
        let measured = s.measured_ber.max(BER_FLOOR);
        let d = predicted.log10() - measured.log10();
        acc += d * d;
    }
    acc / samples.len() as f64
}

/// Fits the EESM shape parameter to calibration samples by minimizing the
/// mean squared log10-BER mismatch against the reference curve.
///
/// Runs a coarse scan over log10(lambda) followed by golden-section
/// refinement of the best bracket.
pub fn fit_lambda(samples: &[CalSample], reference: &AwgnReference) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::param("no usable calibration samples"));
    }
    let flat = samples.iter().all(|s| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &s.sinrs {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo <= 1e-9 * hi.abs().max(1.0)
    });
    if flat {
        return Err(Error::param(
            "all calibration channels are flat; lambda is unidentifiable",
        ));
    }
    let (lo, hi) = LAMBDA_LOG10_RANGE;
    let steps = 60;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let obj = fit_objective(samples, reference, 10f64.powf(x));
        if obj < best.0 {
            best = (obj, x);
        }
    }
    let step = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        let fc = fit_objective(samples, reference, 10f64.powf(c));
        let fd = fit_objective(samples, reference, 10f64.powf(d));
        if fc < fd {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(10f64.powf(0.5 * (a + b)))
}

/// Collects calibration samples for one transmission mode by simulating
/// fading links, then fits lambda against the AWGN reference.
///
/// For each channel and SNR grid point the measured BER comes from `frames`
/// frames on sub-band 0; points whose measured BER falls outside the window
/// where the curve has usable shape are skipped.
pub fn calibrate_lambda(
    mcs: &McsConfig,
    reference: &AwgnReference,
    channels: &[UserChannel],
    snr_grid_db: &[f64],
    frames: usize,
    master_seed: u64,
) -> Result<f64> {
    let mut samples = Vec::new();
    for (ci, chan) in channels.iter().enumerate() {
        for (si, &snr_db) in snr_grid_db.iter().enumerate() {
            let cfg = LinkConfig { mcs, esn0_db: snr_db, plan: BandPlan::Fixed(0) };
            let mut rng = rng::stream_rng(
                master_seed,
                &[STREAM_CALIBRATION, ci as u64, si as u64],
            );
            let res = simulate_link(&cfg, chan, frames, &mut rng)?;
            let ber = res.ber();
            if ber < CAL_BER_WINDOW.0 || ber > CAL_BER_WINDOW.1 {
                continue;
            }
            samples.push(CalSample {
                sinrs: subcarrier_sinr(&chan.bands[0], snr_db),
                measured_ber: ber,
            });
        }
    }
    fit_lambda(&samples, reference)
}

/// Fitted shape parameters, one per transmission-mode label.
#[derive(Debug, Clone)]
pub struct LambdaTable {
    map: BTreeMap<String, f64>,
}

impl LambdaTable {
    /// Values fitted with `mbofdm calibrate --seed 1 --realizations 40`;
    /// override per run with `set` or a table file.
    pub fn defaults() -> Self {
        let mut map = BTreeMap::new();
        for (label, lambda) in [
            ("53.3", 1.1686),
            ("80", 1.1986),
            ("110", 0.8987),
            ("160", 0.8803),
            ("200", 0.8473),
            ("320", 2.2903),
            ("400", 2.2991),
            ("480", 2.7669),
        ] {
            map.insert(label.to_string(), lambda);
        }
        LambdaTable { map }
    }

    pub fn get(&self, label: &str) -> Result<f64> {
        self.map
            .get(label)
            .copied()
            .ok_or_else(|| Error::param(format!("no lambda entry for mode {label}")))
    }

    pub fn set(&mut self, label: &str, lambda: f64) -> Result<()> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::param(format!("lambda must be positive and finite, got {lambda}")));
        }
        self.map.insert(label.to_string(), lambda);
        Ok(())
    }

    /// Serializes as `label lambda` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (label, lambda) in &self.map {
            writeln!(s, "{label} {lambda}").unwrap();
        }
        s
    }

    /// Parses `label lambda` lines on top of the defaults, so a partial file
    /// overrides only the modes it mentions.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut table = Self::defaults();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let label = it
                .next()
                .ok_or_else(|| Error::param(format!("line {}: missing label", ln + 1)))?;
            let lambda: f64 = it
                .next()
                .ok_or_else(|| Error::param(format!("line {}: missing lambda", ln + 1)))?
                .parse()
                .map_err(|e| Error::param(format!("line {}: {e}", ln + 1)))?;
            if it.next().is_some() {
                return Err(Error::param(format!("line {}: trailing fields", ln + 1)));
            }
            table.set(label, lambda)?;
        }
        Ok(table)
    }
}
