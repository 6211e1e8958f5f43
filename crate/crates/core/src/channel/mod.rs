//! Small-scale fading and the CQI reporting pipeline.

mod cqi;
mod fading;

pub use cqi::{measure_cqi, CqiConfig, CqiPipeline, CqiReport, PrbSinr};
pub use fading::{
    doppler_hz, init_fading, prb_sample_frequencies, ChannelSample, FadingLink, FrequencyGrid,
    PowerDelayProfile, PathSpec,
};
