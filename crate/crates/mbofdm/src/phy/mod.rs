//! Physical layer: modulation-coding set, convolutional FEC, interleaving,
//! constellation mapping, spreading and the end-to-end coded OFDM link.

pub mod convcode;
pub mod interleave;
pub mod link;
pub mod mcs;
pub mod modulation;
pub mod spread;

pub use link::{simulate_link, BandPlan, LinkConfig, LinkResult, UserChannel};
pub use mcs::{CodeRate, McsConfig, Modulation};
