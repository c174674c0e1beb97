//! Scenario-driven experiment harness: config parsing, end-to-end BER
//! sweeps, and CSV artifacts.

pub mod csv;
pub mod scenario;
pub mod sweep;

pub use csv::{curves_to_csv, parse_csv, write_csv};
pub use scenario::{load_scenario, parse_scenario, preset, preset_text, Scenario, PRESET_NAMES};
pub use sweep::{
    gain_at_ber, run_balance_sweep, run_ber_sweep, snr_at_ber, BalancePoint, BerCurve,
    BerPoint, SweepResult,
};
