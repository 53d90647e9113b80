//! Labelled I/Q frame synthesis: modulation, channel impairments, AWGN,
//! framing, and the dataset file format.

pub mod channel;
pub mod dataset;
pub mod filters;
pub mod io;
pub mod modulation;
pub mod scheme;

pub use channel::{add_awgn, apply_channel, mean_power, noise_variance, ChannelConfig, ImpairmentLevel};
pub use dataset::{default_snr_grid, generate_dataset, snr_key, to_iq_frames, Dataset, DatasetSpec, IqFrame, LabeledSample};
pub use filters::rrc_taps;
pub use io::{read_dataset, write_dataset};
pub use modulation::{constellation, map_symbols, modulate_analog, modulate_digital};
pub use scheme::ModScheme;
