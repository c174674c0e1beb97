//! Sub-band selection: allocation levels and distributed negotiation.
//!
//! Every device computes one scalar priority (its allocation level) from a
//! MAC QoS weight and a PHY channel-quality score, publishes it together
//! with its per-band preference order, and then all devices run the same
//! deterministic claiming procedure on the shared set of published values.
//! Because the procedure is a pure function of the published set, every
//! device arrives at the same assignment without a central controller.

use crate::{Error, Result, NUM_SUBBANDS};

/// Bands ordered from best to worst effective SINR; ties keep the lower
/// band index first.
pub fn subband_sequence(band_sinrs_db: &[f64; NUM_SUBBANDS]) -> [usize; NUM_SUBBANDS] {
    let mut order = [0usize; NUM_SUBBANDS];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&a, &b| {
        band_sinrs_db[b]
            .total_cmp(&band_sinrs_db[a])
            .then(a.cmp(&b))
    });
    order
}

/// Min-max rescaling of a whole CSI matrix (dB entries) to [0, 1].
///
/// The scaling is global, not per-row, so one user's strong channel raises
/// its score relative to everyone else's. A degenerate matrix (all entries
/// equal) maps to 0.5 everywhere.
pub fn normalize_csi(csi_db: &[[f64; NUM_SUBBANDS]]) -> Vec<[f64; NUM_SUBBANDS]> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in csi_db {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = hi - lo;
    csi_db
        .iter()
        .map(|row| {
            let mut out = [0.5; NUM_SUBBANDS];
            if span > 0.0 {
                for (o, &v) in out.iter_mut().zip(row) {
                    *o = (v - lo) / span;
                }
            }
            out
        })
        .collect()
}

/// Combined priority: a weighted sum of the MAC QoS weight and the PHY
/// channel-quality score.
pub fn allocation_level(qos_weight: f64, phy_score: f64, w_mac: f64, w_phy: f64) -> f64 {
    w_mac * qos_weight + w_phy * phy_score
}

/// How the PHY score entering the allocation level is derived from CSI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiScaling {
    /// Min-max normalize the whole matrix to [0, 1] first (the default;
    /// keeps the PHY score commensurate with QoS weights).
    Normalized,
    /// Use the best-band effective SINR in dB directly.
    RawDb,
}

/// Everything one device publishes for the negotiation.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRequest {
    pub user_id: u32,
    pub allocation_level: f64,
    /// Band indices, most preferred first.
    pub preference: [usize; NUM_SUBBANDS],
}

/// Builds the published requests from a CSI matrix and QoS weights.
pub fn build_requests(
    user_ids: &[u32],
    csi_db: &[[f64; NUM_SUBBANDS]],
    qos_weights: &[f64],
    w_mac: f64,
    w_phy: f64,
    scaling: CsiScaling,
) -> Result<Vec<UserRequest>> {
    if user_ids.len() != csi_db.len() || user_ids.len() != qos_weights.len() {
        return Err(Error::param(format!(
            "mismatched lengths: {} ids, {} CSI rows, {} weights",
            user_ids.len(),
            csi_db.len(),
            qos_weights.len()
        )));
    }
    let scores: Vec<f64> = match scaling {
        CsiScaling::Normalized => normalize_csi(csi_db)
            .iter()
            .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        CsiScaling::RawDb => csi_db
            .iter()
            .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    };
    user_ids
        .iter()
        .zip(csi_db)
        .zip(qos_weights.iter().zip(scores))
        .map(|((&user_id, row), (&q, s))| {
            Ok(UserRequest {
                user_id,
                allocation_level: allocation_level(q, s, w_mac, w_phy),
                preference: subband_sequence(row),
            })
        })
        .collect()
}

/// One user's negotiated slot: a band and an equal time share of it,
/// kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub user_id: u32,
    pub band: usize,
    pub share_num: u32,
    pub share_den: u32,
}

fn validate_requests(requests: &[UserRequest]) -> Result<()> {
    if requests.is_empty() {
        return Err(Error::param("negotiation needs at least one user"));
    }
    let mut ids: Vec<u32> = requests.iter().map(|r| r.user_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("duplicate user_id in negotiation"));
    }
    for r in requests {
        if !r.allocation_level.is_finite() || r.allocation_level < 0.0 {
            return Err(Error::param(format!(
                "user {}: allocation level must be finite and >= 0",
                r.user_id
            )));
        }
        let mut seen = [false; NUM_SUBBANDS];
        for &b in &r.preference {
            if b >= NUM_SUBBANDS || seen[b] {
                return Err(Error::param(format!(
                    "user {}: preference is not a permutation of bands",
                    r.user_id
                )));
            }
            seen[b] = true;
        }
    }
    Ok(())
}

/// Priority order: allocation level descending, user_id ascending on ties.
fn priority_order(requests: &[UserRequest]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| {
        requests[b]
            .allocation_level
            .total_cmp(&requests[a].allocation_level)
            .then(requests[a].user_id.cmp(&requests[b].user_id))
    });
    order
}

/// Runs the deterministic claiming procedure.
///
/// Users are processed in priority order. The first three each claim the
/// best still-unclaimed band in their own preference order; everyone after
/// that joins the band whose current occupants have the lowest total
/// allocation level (ties go to the lower band index). Users sharing a band
/// split its time equally. The result is sorted by user_id.
pub fn negotiate(requests: &[UserRequest]) -> Result<Vec<Assignment>> {
    validate_requests(requests)?;
    let order = priority_order(requests);
    let mut band_of = vec![usize::MAX; requests.len()];
    let mut claimed = [false; NUM_SUBBANDS];
    let mut aggregate = [0.0f64; NUM_SUBBANDS];
    let mut count = [0u32; NUM_SUBBANDS];
    for (rank, &u) in order.iter().enumerate() {
        let req = &requests[u];
        let band = if rank < NUM_SUBBANDS {
            *req
                .preference
                .iter()
                .find(|&&b| !claimed[b])
                .expect("fewer claims than bands, one must be free")
        } else {
            (0..NUM_SUBBANDS)
                .min_by(|&a, &b| aggregate[a].total_cmp(&aggregate[b]).then(a.cmp(&b)))
                .unwrap()
        };
        claimed[band] = true;
        aggregate[band] += req.allocation_level;
        count[band] += 1;
        band_of[u] = band;
    }
    let mut out: Vec<Assignment> = requests
        .iter()
        .zip(&band_of)
        .map(|(r, &band)| Assignment {
            user_id: r.user_id,
            band,
            share_num: 1,
            share_den: count[band],
        })
        .collect();
    out.sort_by_key(|a| a.user_id);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn req(user_id: u32, al: f64, preference: [usize; 3]) -> UserRequest {
        UserRequest { user_id, allocation_level: al, preference }
    }

    /// Constraint-checking oracle: enumerates every possible band assignment
    /// and keeps those satisfying the claiming rules stated declaratively.
    /// Exactly one assignment may survive.
    fn oracle(requests: &[UserRequest]) -> Vec<Assignment> {
        let n = requests.len();
        assert!(n <= 4, "oracle enumerates 3^n assignments");
        let order = priority_order(requests);
        let mut survivors = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let bands: Vec<usize> =
                (0..n).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
            let mut ok = true;
            for (rank, &u) in order.iter().enumerate() {
                let earlier: Vec<usize> =
                    order[..rank].iter().map(|&v| bands[v]).collect();
                let b = bands[u];
                if rank < NUM_SUBBANDS {
                    // Rule: no band this user prefers over b is still free.
                    if earlier.contains(&b) {
                        ok = false;
                        break;
                    }
                    let pos =
                        requests[u].preference.iter().position(|&x| x == b).unwrap();
                    for &better in &requests[u].preference[..pos] {
                        if !earlier.contains(&better) {
                            ok = false;
                        }
                    }
                } else {
                    // Rule: b minimizes the occupants' total allocation
                    // level, ties to the lower index.
                    let agg = |band: usize| {
                        order[..rank]
                            .iter()
                            .filter(|&&v| bands[v] == band)
                            .map(|&v| requests[v].allocation_level)
                            .sum::<f64>()
                    };
                    for other in 0..NUM_SUBBANDS {
                        let (oa, ba) = (agg(other), agg(b));
                        if oa < ba || (oa == ba && other < b) {
                            ok = false;
                        }
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok {
                survivors.push(bands);
            }
        }
        assert_eq!(survivors.len(), 1, "claiming rules must pin down one assignment");
        let bands = &survivors[0];
        let mut count = [0u32; NUM_SUBBANDS];
        for &b in bands.iter() {
            count[b] += 1;
        }
        let mut out: Vec<Assignment> = requests
            .iter()
            .zip(bands)
            .map(|(r, &band)| Assignment {
                user_id: r.user_id,
                band,
                share_num: 1,
                share_den: count[band],
            })
            .collect();
        out.sort_by_key(|a| a.user_id);
        out
    }

    #[test]
    fn sequence_orders_bands_best_first() {
        assert_eq!(subband_sequence(&[5.0, 9.0, 7.0]), [1, 2, 0]);
        assert_eq!(subband_sequence(&[5.0, 5.0, 1.0]), [0, 1, 2]);
        assert_eq!(subband_sequence(&[-3.0, -1.0, -2.0]), [1, 2, 0]);
    }

    #[test]
    fn csi_normalization_is_global_minmax() {
        let m = [[0.0, 5.0, 10.0], [10.0, 20.0, 15.0]];
        let n = normalize_csi(&m);
        assert_eq!(n[0], [0.0, 0.25, 0.5]);
        assert_eq!(n[1], [0.5, 1.0, 0.75]);
        let flat = normalize_csi(&[[7.0; 3]; 2]);
        assert!(flat.iter().all(|row| row.iter().all(|&v| v == 0.5)));
    }

    #[test]
    fn level_is_weighted_sum() {
        assert!((allocation_level(0.5, 0.8, 1.0, 1.0) - 1.3).abs() < 1e-15);
        assert!((allocation_level(0.25, 0.6, 2.0, 0.5) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn build_requests_combines_scores_and_preferences() {
        let csi = [[0.0, 10.0, 5.0], [20.0, 0.0, 10.0]];
        let reqs =
            build_requests(&[7, 3], &csi, &[0.6, 0.4], 1.0, 1.0, CsiScaling::Normalized)
                .unwrap();
        assert_eq!(reqs[0].preference, [1, 2, 0]);
        assert_eq!(reqs[1].preference, [0, 2, 1]);
        // Normalized best entries: user 7 -> 0.5, user 3 -> 1.0.
        assert!((reqs[0].allocation_level - 1.1).abs() < 1e-12);
        assert!((reqs[1].allocation_level - 1.4).abs() < 1e-12);
        let raw =
            build_requests(&[7, 3], &csi, &[0.6, 0.4], 1.0, 1.0, CsiScaling::RawDb).unwrap();
        assert!((raw[0].allocation_level - 10.6).abs() < 1e-12);
        assert!(build_requests(&[1], &csi, &[0.5, 0.5], 1.0, 1.0, CsiScaling::RawDb).is_err());
    }

    #[test]
    fn single_user_takes_top_preference() {
        let out = negotiate(&[req(9, 0.7, [2, 0, 1])]).unwrap();
        assert_eq!(out, vec![Assignment { user_id: 9, band: 2, share_num: 1, share_den: 1 }]);
    }

    #[test]
    fn higher_level_wins_contested_band() {
        let out = negotiate(&[req(1, 0.4, [0, 1, 2]), req(2, 0.9, [0, 2, 1])]).unwrap();
        assert_eq!(out[0].band, 1, "loser falls back to its second choice");
        assert_eq!(out[1].band, 0);
        // Equal levels: the lower user_id claims first.
        let tie = negotiate(&[req(5, 0.5, [1, 0, 2]), req(4, 0.5, [1, 2, 0])]).unwrap();
        assert_eq!(tie.iter().find(|a| a.user_id == 4).unwrap().band, 1);
        assert_eq!(tie.iter().find(|a| a.user_id == 5).unwrap().band, 0);
    }

    #[test]
    fn three_users_get_distinct_bands() {
        let out = negotiate(&[
            req(1, 0.2, [0, 1, 2]),
            req(2, 0.8, [0, 1, 2]),
            req(3, 0.5, [0, 1, 2]),
        ])
        .unwrap();
        let mut bands: Vec<usize> = out.iter().map(|a| a.band).collect();
        bands.sort_unstable();
        assert_eq!(bands, vec![0, 1, 2]);
        assert_eq!(out.iter().find(|a| a.user_id == 2).unwrap().band, 0);
        assert!(out.iter().all(|a| a.share_den == 1));
    }

    #[test]
    fn fourth_user_joins_lowest_level_band() {
        // Priority order 4 > 3 > 2 > 1; the overflow user (id 1) must share
        // with the weakest claimant (id 2), whose band has the lowest total.
        let out = negotiate(&[
            req(1, 0.1, [0, 1, 2]),
            req(2, 0.3, [2, 1, 0]),
            req(3, 0.6, [1, 0, 2]),
            req(4, 0.9, [0, 1, 2]),
        ])
        .unwrap();
        let a1 = out.iter().find(|a| a.user_id == 1).unwrap();
        let a2 = out.iter().find(|a| a.user_id == 2).unwrap();
        assert_eq!(a1.band, a2.band);
        assert_eq!(a2.band, 2);
        assert_eq!((a1.share_num, a1.share_den), (1, 2));
        assert_eq!((a2.share_num, a2.share_den), (1, 2));
        for id in [3, 4] {
            let a = out.iter().find(|a| a.user_id == id).unwrap();
            assert_eq!((a.share_num, a.share_den), (1, 1));
        }
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_inputs() {
        let mut rng = crate::rng::stream_rng(31, &[7]);
        for trial in 0..3000 {
            let n = rng.gen_range(1..=4);
            let requests: Vec<UserRequest> = (0..n)
                .map(|i| {
                    let mut pref = [0usize, 1, 2];
                    for k in (1..3).rev() {
                        pref.swap(k, rng.gen_range(0..=k));
                    }
                    req(10 + i as u32, rng.gen_range(0.0..2.0), pref)
                })
                .collect();
            let got = negotiate(&requests).unwrap();
            let want = oracle(&requests);
            assert_eq!(got, want, "trial {trial}: {requests:?}");
        }
    }

    #[test]
    fn input_order_and_level_scale_do_not_matter() {
        let mut rng = crate::rng::stream_rng(31, &[8]);
        for _ in 0..500 {
            let n = rng.gen_range(2..=4);
            let mut requests: Vec<UserRequest> = (0..n)
                .map(|i| {
                    let mut pref = [0usize, 1, 2];
                    for k in (1..3).rev() {
                        pref.swap(k, rng.gen_range(0..=k));
                    }
                    req(i as u32, rng.gen_range(0.0..2.0), pref)
                })
                .collect();
            let base = negotiate(&requests).unwrap();
            requests.reverse();
            assert_eq!(negotiate(&requests).unwrap(), base);
            let c = rng.gen_range(0.1..7.0);
            for r in &mut requests {
                r.allocation_level *= c;
            }
            assert_eq!(negotiate(&requests).unwrap(), base);
        }
    }

    #[test]
    fn invalid_requests_are_rejected()  {
        assert!(negotiate(&[]).is_err());
        assert!(negotiate(&[req(1, 0.5, [0, 1, 2]), req(1, 0.4, [0, 1, 2])]).is_err());
        assert!(negotiate(&[req(1, 0.5, [0, 0, 2])]).is_err());
        assert!(negotiate(&[req(1, -0.5, [0, 1, 2])]).is_err());
        assert!(negotiate(&[req(1, f64::NAN, [0, 1, 2])]).is_err());
    }
}
