//! MAC-layer pieces: QoS classes, priority weights, the superframe MAS
//! grid, and the distributed beacon exchange.
//!
//! A superframe is 256 medium-access slots (MAS) of 256 us; the first eight
//! form the beacon period and carry no payload. Each sub-band runs its own
//! copy of the data period, and users sharing a band are interleaved
//! round-robin so payload and access delay stay in exact integer ratios.

use crate::allocation::{negotiate, Assignment, UserRequest};
use crate::phy::mcs::McsConfig;
use crate::{Error, Result, NUM_SUBBANDS};

pub const MAS_PER_SUPERFRAME: usize = 256;
pub const MAS_DURATION_US: u64 = 256;
pub const BEACON_MAS: usize = 8;
pub const DATA_MAS: usize = MAS_PER_SUPERFRAME - BEACON_MAS;

/// Service class derived from a flow's traffic contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QosClass {
    /// Guaranteed-service flow: real-time or delay-bound traffic.
    Hard,
    /// Best-effort flow that tolerates queueing.
    Soft,
}

/// What a flow declares about itself at admission.
#[derive(Debug, Clone, Copy)]
pub struct TrafficDescriptor {
    pub realtime: bool,
    pub delay_tolerant: bool,
}

/// A flow gets the guaranteed class when it is real-time or cannot absorb
/// queueing delay; everything else is best-effort.
pub fn classify(t: &TrafficDescriptor) -> QosClass {
    if t.realtime || !t.delay_tolerant {
        QosClass::Hard
    } else {
        QosClass::Soft
    }
}

/// Default hard-over-soft priority factor: one more than the ceiling of the
/// soft-to-hard population ratio, so the hard class outweighs the soft class
/// even when soft users dominate numerically. Floored at 2 so the factor
/// always satisfies the strict `> 1` priority requirement.
pub fn default_priority_factor(n_hard: usize, n_soft: usize) -> f64 {
    if n_hard == 0 {
        2.0
    } else {
        (n_soft.div_ceil(n_hard) + 1).max(2) as f64
    }
}

/// QoS weights summing to one, with every hard user weighted `k` times a
/// soft user. `k` must exceed 1 so the guaranteed class actually has
/// priority.
pub fn qos_weights(classes: &[QosClass], k: f64) -> Result<Vec<f64>> {
    if classes.is_empty() {
        return Err(Error::param("no users to weight"));
    }
    if !(k > 1.0) || !k.is_finite() {
        return Err(Error::param(format!(
            "priority factor must be finite and > 1, got {k}"
        )));
    }
    let n_hard = classes.iter().filter(|c| **c == QosClass::Hard).count();
    let n_soft = classes.len() - n_hard;
    let q_soft = 1.0 / (n_soft as f64 + k * n_hard as f64);
    Ok(classes
        .iter()
        .map(|c| match c {
            QosClass::Hard => k * q_soft,
            QosClass::Soft => q_soft,
        })
        .collect())
}

/// Rescales explicit per-user weights to sum to one.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::param("no weights to normalize"));
    }
    for &w in raw {
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::param(format!("weights must be positive, got {w}")));
        }
    }
    let sum: f64 = raw.iter().sum();
    Ok(raw.iter().map(|w| w / sum).collect())
}

/// Payload frames that fit in one MAS for a transmission mode; the
/// remainder of the slot is guard time.
pub fn frames_per_mas(mcs: &McsConfig) -> u64 {
    // Frame duration is symbols * 312.5 ns = symbols * 625/2 ns.
    let frame_half_ns = mcs.symbols_per_frame() as u64 * 625;
    MAS_DURATION_US * 1000 * 2 / frame_half_ns
}

/// MAS ownership for every sub-band over one superframe.
#[derive(Debug, Clone)]
pub struct Superframe {
    /// `owner[band][mas]`; beacon slots and idle bands are `None`.
    pub owner: [[Option<u32>; MAS_PER_SUPERFRAME]; NUM_SUBBANDS],
}

impl Superframe {
    /// Lays out the data period of each band, interleaving the band's users
    /// round-robin in user_id order.
    pub fn build(assignments: &[Assignment]) -> Result<Self> {
        let mut ids: Vec<u32> = assignments.iter().map(|a| a.user_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("duplicate user_id in superframe build"));
        }
        let mut owner = [[None; MAS_PER_SUPERFRAME]; NUM_SUBBANDS];
        for band in 0..NUM_SUBBANDS {
            let mut users: Vec<u32> = assignments
                .iter()
                .filter(|a| a.band == band)
                .map(|a| a.user_id)
                .collect();
            users.sort_unstable();
            if users.is_empty() {
                continue;
            }
            for m in BEACON_MAS..MAS_PER_SUPERFRAME {
                owner[band][m] = Some(users[(m - BEACON_MAS) % users.len()]);
            }
        }
        Ok(Superframe { owner })
    }

    /// Slots a user owns across all bands in one superframe.
    pub fn mas_count(&self, user_id: u32) -> u64 {
        self.owner
            .iter()
            .flatten()
            .filter(|o| **o == Some(user_id))
            .count() as u64
    }

    /// The band a user transmits on, if any.
    pub fn band_of(&self, user_id: u32) -> Option<usize> {
        (0..NUM_SUBBANDS).find(|&b| self.owner[b].contains(&Some(user_id)))
    }

    /// Distances between consecutive owned slots on the user's band,
    /// including the wrap into the next superframe; the distances of a full
    /// cycle always sum to the superframe length.
    pub fn grant_gaps(&self, user_id: u32) -> Vec<u64> {
        let Some(band) = self.band_of(user_id) else {
            return Vec::new();
        };
        let positions: Vec<usize> = (0..MAS_PER_SUPERFRAME)
            .filter(|&m| self.owner[band][m] == Some(user_id))
            .collect();
        let mut gaps: Vec<u64> = positions.windows(2).map(|w| (w[1] - w[0]) as u64).collect();
        gaps.push((MAS_PER_SUPERFRAME - positions[positions.len() - 1] + positions[0]) as u64);
        gaps
    }

    /// Mean slot-to-slot access delay in MAS, as an exact fraction
    /// (numerator, denominator).
    pub fn mean_grant_gap(&self, user_id: u32) -> Option<(u64, u64)> {
        let gaps = self.grant_gaps(user_id);
        if gaps.is_empty() {
            return None;
        }
        Some((gaps.iter().sum(), gaps.len() as u64))
    }

    /// Payload bits a user moves per superframe with a given mode; exact
    /// integer arithmetic.
    pub fn payload_bits_per_superframe(&self, user_id: u32, mcs: &McsConfig) -> u128 {
        self.mas_count(user_id) as u128
            * frames_per_mas(mcs) as u128
            * mcs.info_bits_per_frame() as u128
    }
}

/// Runs the distributed negotiation from each device's point of view.
///
/// Every device sorts the beacon information elements it heard by user_id
/// and feeds them to the shared claiming procedure. All devices must have
/// heard the same set; a mismatch means a lost beacon, which the protocol
/// surfaces as an error rather than silently diverging.
pub fn beacon_exchange(heard: &[Vec<UserRequest>]) -> Result<Vec<Vec<Assignment>>> {
    if heard.is_empty() {
        return Err(Error::param("no devices in beacon exchange"));
    }
    let sorted_view = |ies: &[UserRequest]| -> Vec<UserRequest> {
        let mut v = ies.to_vec();
        v.sort_by_key(|r| r.user_id);
        v
    };
    let first = sorted_view(&heard[0]);
    for (d, ies) in heard.iter().enumerate().skip(1) {
        if sorted_view(ies) != first {
            return Err(Error::param(format!(
                "device {d} heard a different beacon set; exchange must be repeated"
            )));
        }
    }
    heard.iter().map(|ies| negotiate(&sorted_view(ies))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn classification_truth_table() {
        let case = |realtime, delay_tolerant| {
            classify(&TrafficDescriptor { realtime, delay_tolerant })
        };
        assert_eq!(case(true, true), QosClass::Hard);
        assert_eq!(case(true, false), QosClass::Hard);
        assert_eq!(case(false, false), QosClass::Hard);
        assert_eq!(case(false, true), QosClass::Soft);
    }

    #[test]
    fn weights_sum_to_one_with_exact_ratio() {
        use QosClass::*;
        let w = qos_weights(&[Hard, Soft, Soft], 3.0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w[0] / w[1] - 3.0).abs() < 1e-12);
        assert_eq!(w[1], w[2]);
        // Single-class populations collapse to uniform weights.
        let all_soft = qos_weights(&[Soft; 4], 5.0).unwrap();
        assert!(all_soft.iter().all(|&x| (x - 0.25).abs() < 1e-12));
        let all_hard = qos_weights(&[Hard, Hard], 5.0).unwrap();
        assert!(all_hard.iter().all(|&x| (x - 0.5).abs() < 1e-12));
        assert!(qos_weights(&[Hard, Soft], 1.0).is_err());
        assert!(qos_weights(&[Hard, Soft], 0.5).is_err());
        assert!(qos_weights(&[], 2.0).is_err());
    }

    #[test]
    fn default_factor_tracks_population_ratio() {
        assert_eq!(default_priority_factor(1, 2), 3.0);
        assert_eq!(default_priority_factor(2, 2), 2.0);
        assert_eq!(default_priority_factor(1, 5), 6.0);
        assert_eq!(default_priority_factor(3, 0), 2.0);
        assert_eq!(default_priority_factor(0, 3), 2.0);
    }

    #[test]
    fn explicit_weights_renormalize() {
        let w = normalize_weights(&[3.0, 1.0]).unwrap();
        assert_eq!(w, vec![0.75, 0.25]);
        assert!(normalize_weights(&[1.0, 0.0]).is_err());
        assert!(normalize_weights(&[1.0, -2.0]).is_err());
        assert!(normalize_weights(&[]).is_err());
    }

    #[test]
    fn frames_fit_exactly_per_slot() {
        let m320 = McsConfig::from_label("320").unwrap();
        let m110 = McsConfig::from_label("110").unwrap();
        // 256 us / 1.875 us = 136.5 -> 136; 256 us / 2.5 us = 102.4 -> 102.
        assert_eq!(frames_per_mas(m320), 136);
        assert_eq!(frames_per_mas(m110), 102);
    }

    fn asg(user_id: u32, band: usize, den: u32) -> Assignment {
        Assignment { user_id, band, share_num: 1, share_den: den }
    }

    #[test]
    fn shared_band_splits_slots_exactly_in_half() {
        let sf = Superframe::build(&[
            asg(1, 0, 1),
            asg(2, 1, 2),
            asg(3, 1, 2),
        ])
        .unwrap();
        assert_eq!(sf.mas_count(1), DATA_MAS as u64);
        assert_eq!(sf.mas_count(2), DATA_MAS as u64 / 2);
        assert_eq!(sf.mas_count(3), DATA_MAS as u64 / 2);
        assert_eq!(sf.mas_count(99), 0);
        // Beacon period is never owned, idle bands stay empty.
        for band in 0..NUM_SUBBANDS {
            assert!(sf.owner[band][..BEACON_MAS].iter().all(Option::is_none));
        }
        assert!(sf.owner[2].iter().all(Option::is_none));
        assert_eq!(sf.band_of(2), Some(1));
        assert_eq!(sf.band_of(7), None);
    }

    #[test]
    fn grant_gaps_close_the_cycle() {
        let sf = Superframe::build(&[asg(1, 0, 1), asg(2, 1, 2), asg(3, 1, 2)]).unwrap();
        for id in [1u32, 2, 3] {
            let gaps = sf.grant_gaps(id);
            assert_eq!(gaps.iter().sum::<u64>(), MAS_PER_SUPERFRAME as u64);
            let (num, den) = sf.mean_grant_gap(id).unwrap();
            assert_eq!(num, MAS_PER_SUPERFRAME as u64);
            assert_eq!(den, sf.mas_count(id));
        }
        // Full owner vs half owner: mean delays in the exact ratio 1:2.
        let (n1, d1) = sf.mean_grant_gap(1).unwrap();
        let (n2, d2) = sf.mean_grant_gap(2).unwrap();
        assert_eq!(n2 * d1, 2 * n1 * d2);
        assert!(sf.mean_grant_gap(42).is_none());
    }

    #[test]
    fn payload_accounting_is_exact() {
        let m320 = McsConfig::from_label("320").unwrap();
        let sf = Superframe::build(&[asg(1, 0, 1), asg(2, 1, 2), asg(3, 1, 2)]).unwrap();
        let full = sf.payload_bits_per_superframe(1, m320);
        let half = sf.payload_bits_per_superframe(2, m320);
        assert_eq!(full, 248 * 136 * 594);
        assert_eq!(half, full / 2);
        assert_eq!(sf.payload_bits_per_superframe(42, m320), 0);
    }

    #[test]
    fn three_way_sharing_splits_within_one_slot() {
        let sf = Superframe::build(&[asg(5, 2, 3), asg(6, 2, 3), asg(7, 2, 3)]).unwrap();
        let counts = [sf.mas_count(5), sf.mas_count(6), sf.mas_count(7)];
        assert_eq!(counts.iter().sum::<u64>(), DATA_MAS as u64);
        assert!(counts.iter().all(|&c| c == 82 || c == 83));
    }

    #[test]
    fn duplicate_users_are_rejected() {
        assert!(Superframe::build(&[asg(1, 0, 1), asg(1, 1, 1)]).is_err());
    }

    #[test]
    fn exchange_agrees_for_any_arrival_order() {
        let mut rng = crate::rng::stream_rng(77, &[crate::rng::STREAM_BEACON]);
        for _ in 0..200 {
            let n = rng.gen_range(1..=4);
            let ies: Vec<UserRequest> = (0..n)
                .map(|i| {
                    let mut pref = [0usize, 1, 2];
                    for k in (1..3).rev() {
                        pref.swap(k, rng.gen_range(0..=k));
                    }
                    UserRequest {
                        user_id: i as u32,
                        allocation_level: rng.gen_range(0.0..2.0),
                        preference: pref,
                    }
                })
                .collect();
            // Every device hears the same set in its own arrival order.
            let heard: Vec<Vec<UserRequest>> = (0..n)
                .map(|_| {
                    let mut v = ies.clone();
                    v.shuffle(&mut rng);
                    v
                })
                .collect();
            let views = beacon_exchange(&heard).unwrap();
            for v in &views[1..] {
                assert_eq!(*v, views[0]);
            }
            let mut sorted = ies.clone();
            sorted.sort_by_key(|r| r.user_id);
            assert_eq!(views[0], negotiate(&sorted).unwrap());
        }
    }

    #[test]
    fn exchange_rejects_divergent_beacon_sets() {
        let a = UserRequest { user_id: 1, allocation_level: 0.5, preference: [0, 1, 2] };
        let b = UserRequest { user_id: 2, allocation_level: 0.7, preference: [1, 0, 2] };
        assert!(beacon_exchange(&[vec![a.clone(), b.clone()], vec![a.clone()]]).is_err());
        assert!(beacon_exchange(&[]).is_err());
        let ok = beacon_exchange(&[vec![a.clone(), b.clone()], vec![b, a]]).unwrap();
        assert_eq!(ok[0], ok[1]);
    }
}
