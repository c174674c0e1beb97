//! Modulation-coding set (MCS) for the multi-band OFDM PHY.
//!
//! Eight operating points from 53.3 to 480 Mbit/s. Each combines a
//! constellation (QPSK or dual-carrier modulation), a punctured convolutional
//! code rate, and optional frequency- and/or time-domain spreading by 2.
//!
//! Rate bookkeeping is exact: with 100 data tones carrying 2 coded bits each
//! and a 312.5 ns symbol, the information rate is
//! `200 * code_rate / spreading / 312.5 ns = 640 * code_rate / spreading`
//! Mbit/s, held here as an integer fraction so consistency can be checked
//! with zero tolerance.

use crate::error::{Error, Result};
use crate::{DATA_TONES, SYMBOL_NS};
use std::fmt;

/// Constellation choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    /// Gray-mapped QPSK, one complex symbol per tone.
    Qpsk,
    /// Dual-carrier modulation: 4 coded bits jointly mapped onto two tones
    /// 50 positions apart, via two fixed 16-point constellations.
    Dcm,
}

/// Punctured convolutional code rate as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeRate {
    pub num: u32,
    pub den: u32,
}

impl CodeRate {
    pub const R_1_3: CodeRate = CodeRate { num: 1, den: 3 };
    pub const R_11_32: CodeRate = CodeRate { num: 11, den: 32 };
    pub const R_1_2: CodeRate = CodeRate { num: 1, den: 2 };
    pub const R_5_8: CodeRate = CodeRate { num: 5, den: 8 };
    pub const R_3_4: CodeRate = CodeRate { num: 3, den: 4 };

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// One modulation-coding operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsConfig {
    /// Information rate in Mbit/s as an exact fraction.
    pub rate_mbps_num: u32,
    pub rate_mbps_den: u32,
    /// Display label, e.g. `"53.3"` or `"480"`.
    pub label: &'static str,
    pub modulation: Modulation,
    pub code_rate: CodeRate,
    /// Frequency-domain spreading by 2 (same symbol on a paired tone).
    pub fds: bool,
    /// Time-domain spreading by 2 (same symbol content on the next OFDM symbol).
    pub tds: bool,
}

impl McsConfig {
    /// Total spreading factor (1, 2 or 4).
    pub fn spreading(&self) -> u32 {
        (1 << self.fds as u32) * (1 << self.tds as u32)
    }

    /// Information rate as f64 Mbit/s.
    pub fn rate_mbps(&self) -> f64 {
        self.rate_mbps_num as f64 / self.rate_mbps_den as f64
    }

    /// Coded bits carried by one transmitted OFDM symbol after spreading.
    pub fn coded_bits_per_symbol(&self) -> usize {
        2 * DATA_TONES / self.spreading() as usize
    }

    /// Verifies the stored rate against first-principles accounting,
    /// in exact integer arithmetic.
    ///
    /// `rate = 2 * DATA_TONES * code_rate / spreading / SYMBOL_NS`; with
    /// SYMBOL_NS = 312.5 the prefactor is 640 Mbit/s. The check
    /// cross-multiplies `640 * k / (n * S) == rate_num / rate_den`.
    pub fn rate_is_consistent(&self) -> bool {
        debug_assert_eq!(2.0 * DATA_TONES as f64 / SYMBOL_NS * 1000.0, 640.0);
        let lhs = 640u64 * self.code_rate.num as u64 * self.rate_mbps_den as u64;
        let rhs = self.rate_mbps_num as u64 * self.code_rate.den as u64 * self.spreading() as u64;
        lhs == rhs
    }

    /// OFDM symbols per simulation frame: the smallest count (at least 6,
    /// even under time spreading) for which both the puncturer period and the
    /// symbol payload divide evenly.
    pub fn symbols_per_frame(&self) -> usize {
        // 6 symbols work for every operating point except 11/32, whose
        // 32-bit puncture period needs 8 symbols at its spreading factor.
        if self.code_rate == CodeRate::R_11_32 {
            8
        } else {
            6
        }
    }

    /// Coded bits per frame.
    pub fn coded_bits_per_frame(&self) -> usize {
        self.symbols_per_frame() * self.coded_bits_per_symbol()
    }

    /// Information payload bits per frame (codeword content minus the 6
    /// encoder flush bits).
    pub fn info_bits_per_frame(&self) -> usize {
        let coded = self.coded_bits_per_frame();
        let with_flush = coded * self.code_rate.num as usize / self.code_rate.den as usize;
        debug_assert_eq!(
            with_flush * self.code_rate.den as usize,
            coded * self.code_rate.num as usize,
            "frame geometry must make the code rate exact"
        );
        with_flush - crate::phy::convcode::FLUSH_BITS
    }

    /// Looks an operating point up by its label (`"53.3"`, `"480"`, ...).
    pub fn from_label(label: &str) -> Result<&'static McsConfig> {
        let t = label.trim();
        mcs_table()
            .iter()
            .find(|m| m.label == t)
            .ok_or_else(|| {
                let known: Vec<&str> = mcs_table().iter().map(|m| m.label).collect();
                Error::param(format!("unknown MCS '{label}' (known: {})", known.join(", ")))
            })
    }
}

impl fmt::Display for McsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} Mbit/s ({:?} R={} fds={} tds={})",
            self.label, self.modulation, self.code_rate, self.fds, self.tds
        )
    }
}

/// The eight operating points, lowest to highest rate.
pub fn mcs_table() -> &'static [McsConfig; 8] {
    use Modulation::*;
    const fn row(
        num: u32,
        den: u32,
        label: &'static str,
        modulation: Modulation,
        code_rate: CodeRate,
        fds: bool,
        tds: bool,
    ) -> McsConfig {
        McsConfig {
            rate_mbps_num: num,
            rate_mbps_den: den,
            label,
            modulation,
            code_rate,
            fds,
            tds,
        }
    }
    // 53.3 Mbit/s is exactly 160/3. The 200 Mbit/s point keeps time
    // spreading (5/8 coding at spreading 2 is the only arithmetic that
    // yields 200), matching the original multi-band OFDM rate set.
    static TABLE: [McsConfig; 8] = [
        row(160, 3, "53.3", Qpsk, CodeRate::R_1_3, true, true),
        row(80, 1, "80", Qpsk, CodeRate::R_1_2, true, true),
        row(110, 1, "110", Qpsk, CodeRate::R_11_32, false, true),
        row(160, 1, "160", Qpsk, CodeRate::R_1_2, false, true),
        row(200, 1, "200", Qpsk, CodeRate::R_5_8, false, true),
        row(320, 1, "320", Dcm, CodeRate::R_1_2, false, false),
        row(400, 1, "400", Dcm, CodeRate::R_5_8, false, false),
        row(480, 1, "480", Dcm, CodeRate::R_3_4, false, false),
    ];
    &TABLE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rows_pass_exact_rate_consistency() {
        for m in mcs_table() {
            assert!(
                m.rate_is_consistent(),
                "{m}: 640*{} != {}/{} * {} * {}",
                m.code_rate.num,
                m.rate_mbps_num,
                m.rate_mbps_den,
                m.code_rate.den,
                m.spreading()
            );
        }
    }

    #[test]
    fn rate_formula_spot_checks() {
        // Worked examples, computed independently of the table:
        // 11/32 at spreading 2: 200 * (11/32) / 2 per symbol = 34.375 bits
        // per 312.5 ns = 110 Mbit/s.
        let m = McsConfig::from_label("110").unwrap();
        let bits_per_symbol = 200.0 * m.code_rate.as_f64() / m.spreading() as f64;
        assert_eq!(bits_per_symbol / SYMBOL_NS * 1000.0, 110.0);
        // 3/4 unspread: 150 bits per symbol = 480 Mbit/s.
        let m = McsConfig::from_label("480").unwrap();
        assert_eq!(200.0 * 0.75 / SYMBOL_NS * 1000.0, 480.0);
        assert_eq!(m.rate_mbps(), 480.0);
        // 53.3 is the non-terminating one: exactly 160/3.
        let m = McsConfig::from_label("53.3").unwrap();
        assert_eq!((m.rate_mbps_num, m.rate_mbps_den), (160, 3));
        assert!((m.rate_mbps() - 53.333333333333336).abs() < 1e-12);
    }

    #[test]
    fn table_labels_rates_and_modulations() {
        let want: [(&str, Modulation, (u32, u32), u32); 8] = [
            ("53.3", Modulation::Qpsk, (1, 3), 4),
            ("80", Modulation::Qpsk, (1, 2), 4),
            ("110", Modulation::Qpsk, (11, 32), 2),
            ("160", Modulation::Qpsk, (1, 2), 2),
            ("200", Modulation::Qpsk, (5, 8), 2),
            ("320", Modulation::Dcm, (1, 2), 1),
            ("400", Modulation::Dcm, (5, 8), 1),
            ("480", Modulation::Dcm, (3, 4), 1),
        ];
        for (row, (label, modulation, (k, n), spread)) in mcs_table().iter().zip(want) {
            assert_eq!(row.label, label);
            assert_eq!(row.modulation, modulation);
            assert_eq!((row.code_rate.num, row.code_rate.den), (k, n));
            assert_eq!(row.spreading(), spread, "{label}");
        }
        // Strictly increasing rate down the table.
        for pair in mcs_table().windows(2) {
            assert!(pair[0].rate_mbps() < pair[1].rate_mbps());
        }
    }

    #[test]
    fn frame_geometry_is_integral() {
        for m in mcs_table() {
            let coded = m.coded_bits_per_frame();
            let info = m.info_bits_per_frame();
            assert!(info > 0, "{m}");
            // Whole interleaver lattice + whole puncture periods.
            assert_eq!(
                coded % m.coded_bits_per_symbol(),
                0,
                "{m}: coded bits must fill whole OFDM symbols"
            );
            if m.tds {
                assert_eq!(m.symbols_per_frame() % 2, 0, "{m}: TDS needs symbol pairs");
            }
            println!("{m}: {} info bits -> {} coded bits / frame", info, coded);
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        assert!(McsConfig::from_label("120").is_err());
        assert!(McsConfig::from_label("").is_err());
    }
}
