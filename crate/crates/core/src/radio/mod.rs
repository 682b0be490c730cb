//! Wireless channel and link layer.

mod channel;
mod mac;

pub use channel::{reception_probability, ChannelModel, Propagation};
pub use mac::{airtime, Enqueued, MacConfig, MacPreset, PriQueue};
