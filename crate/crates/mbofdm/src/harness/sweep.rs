//! End-to-end BER sweeps: channel draw, CSI, negotiation, link simulation.
//!
//! Determinism contract: every random draw comes from a stream derived from
//! (master seed, purpose tags), work is split into fixed-size rounds whose
//! RNG tags include the round index, and accumulation is integer error/bit
//! counting. The result is therefore byte-identical for any thread count
//! and any round in which the adaptive stopping rule fires.

use crate::allocation::{build_requests, negotiate, Assignment};
use crate::channel::ChannelRealization;
use crate::eesm::{band_effective_sinrs_db, LambdaTable};
use crate::harness::scenario::{resolve_weights, Scenario};
use crate::mac::QosClass;
use crate::phy::link::{simulate_link_stream, BandPlan, LinkConfig, UserChannel};
use crate::phy::mcs::McsConfig;
use crate::util::isotonic_non_increasing;
use crate::{Error, Result, NUM_SUBBANDS};
use rayon::prelude::*;

/// Frames per realization in the first round; later rounds double this
/// (with a cap) until the stopping rule fires. Divisible by every possible
/// share denominator so share scaling stays exact.
const BASE_FRAMES: usize = 12;
const MAX_ROUND_SHIFT: u32 = 6;

/// One measured point of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits: u64,
    /// True when the bit budget ran out before the error target was met;
    /// the estimate is reported but unreliable.
    pub censored: bool,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// A labelled BER-vs-SNR curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub label: String,
    pub points: Vec<BerPoint>,
}

/// The negotiated assignment used for one (SNR point, realization) cell.
#[derive(Debug, Clone)]
pub struct AllocationRecord {
    pub snr_idx: usize,
    pub realization: usize,
    pub assignments: Vec<Assignment>,
}

/// Everything a sweep produces.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub curves: Vec<BerCurve>,
    pub allocations: Vec<AllocationRecord>,
}

#[derive(Debug, Clone)]
struct Arm {
    label: String,
    mcs: &'static McsConfig,
    /// User index, or `None` for the band-hopping baseline.
    user: Option<usize>,
}

fn class_str(c: QosClass) -> &'static str {
    match c {
        QosClass::Hard => "hard",
        QosClass::Soft => "soft",
    }
}

fn arms_for(s: &Scenario, include_users: bool, include_baseline: bool) -> Vec<Arm> {
    let mut arms = Vec::new();
    if include_users {
        for (u, spec) in s.users.iter().enumerate() {
            arms.push(Arm {
                label: format!("{}-{}-u{u}", class_str(spec.class), spec.mcs.label),
                mcs: spec.mcs,
                user: Some(u),
            });
        }
    }
    if include_baseline && s.baseline_tfc {
        arms.push(Arm {
            label: format!("tfc-{}-baseline", s.users[0].mcs.label),
            mcs: s.users[0].mcs,
            user: None,
        });
    }
    arms
}

/// Draws every user's channel for every realization. Stream tags depend
/// only on (realization, user slot), so the draws are identical no matter
/// which arms are later simulated; the baseline arm owns the slot after the
/// last user.
fn draw_channels(s: &Scenario) -> Result<Vec<Vec<UserChannel>>> {
    let params = s.channel.params();
    (0..s.realizations)
        .into_par_iter()
        .map(|i| {
            let mut per_user = Vec::with_capacity(s.users.len() + 1);
            for u in 0..=s.users.len() {
                let real =
                    ChannelRealization::from_stream(&params, s.seed, u as u64, i as u64)?;
                let real = if s.shadowing { real } else { real.without_shadowing() };
                per_user.push(UserChannel::from_realization(&real));
            }
            Ok(per_user)
        })
        .collect()
}

/// Negotiates the band allocation for every (SNR point, realization) cell
/// from the users' effective-SINR CSI at that operating point.
pub fn compute_allocations(
    s: &Scenario,
    lambdas: &LambdaTable,
    channels: &[Vec<UserChannel>],
) -> Result<Vec<AllocationRecord>> {
    let weights = resolve_weights(s)?;
    let user_ids: Vec<u32> = (0..s.users.len() as u32).collect();
    let lambda_per_user: Vec<f64> = s
        .users
        .iter()
        .map(|u| lambdas.get(u.mcs.label))
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(s.snr_db.len() * s.realizations);
    for (snr_idx, &snr_db) in s.snr_db.iter().enumerate() {
        // A noiseless smoke run still needs a finite CSI operating point;
        // band preferences at 200 dB are pure channel shape.
        let csi_snr_db = if snr_db.is_finite() { snr_db } else { 200.0 };
        for (realization, per_user) in channels.iter().enumerate() {
            let csi: Vec<[f64; NUM_SUBBANDS]> = s
                .users
                .iter()
                .enumerate()
                .map(|(u, _)| {
                    band_effective_sinrs_db(&per_user[u], csi_snr_db, lambda_per_user[u])
                })
                .collect::<Result<_>>()?;
            let requests =
                build_requests(&user_ids, &csi, &weights, s.w_mac, s.w_phy, s.csi_scaling)?;
            let assignments = negotiate(&requests)?;
            records.push(AllocationRecord { snr_idx, realization, assignments });
        }
    }
    Ok(records)
}

fn sweep_arms(
    s: &Scenario,
    lambdas: &LambdaTable,
    include_users: bool,
    include_baseline: bool,
) -> Result<SweepResult> {
    let arms = arms_for(s, include_users, include_baseline);
    if arms.is_empty() {
        return Err(Error::param("scenario selects no simulation arms"));
    }
    let channels = draw_channels(s)?;
    let allocations = compute_allocations(s, lambdas, &channels)?;
    let record = |snr_idx: usize, realization: usize| -> &AllocationRecord {
        &allocations[snr_idx * s.realizations + realization]
    };
    let mut curves: Vec<BerCurve> = arms
        .iter()
        .map(|a| BerCurve { label: a.label.clone(), points: Vec::new() })
        .collect();
    for (arm_idx, arm) in arms.iter().enumerate() {
        // The baseline arm keeps the slot after the last user in both the
        // channel table and the RNG tag space, so its draws do not depend
        // on whether the user arms run in the same process.
        let tag_idx = arm.user.unwrap_or(s.users.len()) as u64;
        for (snr_idx, &snr_db) in s.snr_db.iter().enumerate() {
            let mut errors = 0u64;
            let mut bits = 0u64;
            let mut round = 0u64;
            while errors < s.min_errors && bits < s.max_bits {
                let round_frames = BASE_FRAMES << (round.min(MAX_ROUND_SHIFT as u64));
                let cell_results: Vec<crate::phy::link::LinkResult> = (0..s.realizations)
                    .into_par_iter()
                    .map(|realization| {
                        let (chan, plan, frames) = match arm.user {
                            Some(u) => {
                                let asg = &record(snr_idx, realization).assignments[u];
                                debug_assert_eq!(asg.user_id, u as u32);
                                let frames = round_frames * asg.share_num as usize
                                    / asg.share_den as usize;
                                (
                                    &channels[realization][u],
                                    BandPlan::Fixed(asg.band),
                                    frames.max(1),
                                )
                            }
                            None => (
                                &channels[realization][s.users.len()],
                                BandPlan::DEFAULT_TFC,
                                round_frames,
                            ),
                        };
                        let cfg = LinkConfig { mcs: arm.mcs, esn0_db: snr_db, plan };
                        simulate_link_stream(
                            &cfg,
                            chan,
                            frames,
                            s.seed,
                            &[tag_idx, snr_idx as u64, realization as u64, round],
                        )
                    })
                    .collect::<Result<_>>()?;
                for r in cell_results {
                    errors += r.bit_errors;
                    bits += r.bits;
                }
                round += 1;
            }
            curves[arm_idx].points.push(BerPoint {
                snr_db,
                bit_errors: errors,
                bits,
                censored: errors < s.min_errors,
            });
        }
    }
    Ok(SweepResult { curves, allocations })
}

fn install_pool<T: Send>(
    threads: Option<usize>,
    work: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        None => work(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::param(format!("thread pool: {e}")))?;
            pool.install(work)
        }
    }
}

/// Runs the scenario's full BER sweep: one curve per user plus the
/// band-hopping baseline when configured.
pub fn run_ber_sweep(
    s: &Scenario,
    lambdas: &LambdaTable,
    threads: Option<usize>,
) -> Result<SweepResult> {
    install_pool(threads, || sweep_arms(s, lambdas, true, true))
}

/// SNR (dB) at which a curve crosses the target BER, by log-linear
/// interpolation over its uncensored points after isotonic cleanup.
/// `None` when the curve does not bracket the target.
pub fn snr_at_ber(curve: &BerCurve, target: f64) -> Option<f64> {
    let pts: Vec<&BerPoint> = curve.points.iter().filter(|p| !p.censored).collect();
    if pts.len() < 2 || !(target > 0.0) {
        return None;
    }
    let bers: Vec<f64> = pts.iter().map(|p| p.ber().max(1e-12)).collect();
    let weights: Vec<f64> = pts.iter().map(|p| p.bits as f64).collect();
    let clean = isotonic_non_increasing(&bers, &weights);
    if target > clean[0] || target < *clean.last().unwrap() {
        return None;
    }
    let j = clean.iter().position(|&b| b <= target)?;
    if j == 0 {
        return Some(pts[0].snr_db);
    }
    let (b0, b1) = (clean[j - 1], clean[j]);
    if b0 == b1 {
        return Some(pts[j].snr_db);
    }
    let t = (target.log10() - b0.log10()) / (b1.log10() - b0.log10());
    Some(pts[j - 1].snr_db + t * (pts[j].snr_db - pts[j - 1].snr_db))
}

/// Horizontal SNR gain of `test` over `baseline` at the target BER;
/// positive means `test` reaches the BER at a lower SNR.
pub fn gain_at_ber(test: &BerCurve, baseline: &BerCurve, target: f64) -> Option<f64> {
    Some(snr_at_ber(baseline, target)? - snr_at_ber(test, target)?)
}

/// One row of the balance sweep.
#[derive(Debug, Clone)]
pub struct BalancePoint {
    pub ratio: f64,
    pub avg_hard_gain_db: f64,
    pub hard_gains_db: Vec<f64>,
}

/// Sweeps the MAC/PHY weight ratio and measures the average hard-QoS SNR
/// gain over the ratio-independent baseline at BER 1e-3.
///
/// Channel and noise streams are tagged by (realization, user, round) only,
/// never by the ratio, so consecutive ratios see identical randomness and
/// differ purely through the negotiated allocation (a paired design that
/// makes small gain differences meaningful at modest realization counts).
pub fn run_balance_sweep(
    s: &Scenario,
    ratios: &[f64],
    lambdas: &LambdaTable,
    threads: Option<usize>,
) -> Result<Vec<BalancePoint>> {
    if ratios.is_empty() {
        return Err(Error::param("balance sweep needs at least one ratio"));
    }
    if !s.baseline_tfc {
        return Err(Error::param("balance sweep needs the tfc baseline arm"));
    }
    let hard_users: Vec<usize> = s
        .users
        .iter()
        .enumerate()
        .filter(|(_, u)| u.class == QosClass::Hard)
        .map(|(i, _)| i)
        .collect();
    if hard_users.is_empty() {
        return Err(Error::param("balance sweep needs at least one hard user"));
    }
    install_pool(threads, || {
        let baseline_run = sweep_arms(s, lambdas, false, true)?;
        let baseline = &baseline_run.curves[0];
        let target = 1e-3;
        let mut out = Vec::with_capacity(ratios.len());
        for &ratio in ratios {
            let mut scn = s.clone();
            scn.w_mac = ratio / (1.0 + ratio);
            scn.w_phy = 1.0 / (1.0 + ratio);
            let run = sweep_arms(&scn, lambdas, true, false)?;
            let hard_gains_db: Vec<f64> = hard_users
                .iter()
                .map(|&u| {
                    gain_at_ber(&run.curves[u], baseline, target).ok_or_else(|| {
                        Error::param(format!(
                            "ratio {ratio}: curve {} does not bracket BER {target}",
                            run.curves[u].label
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let avg_hard_gain_db =
                hard_gains_db.iter().sum::<f64>() / hard_gains_db.len() as f64;
            out.push(BalancePoint { ratio, avg_hard_gain_db, hard_gains_db });
        }
        out.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
        Ok(out)
    })
}
