//! Single-spike temporal neuromorphic classifier.
//!
//! Images are encoded as one spike per input neuron ([`codec`]), shaped by a
//! spike-response kernel ([`kernels`]), integrated by a single layer of
//! integrate-and-fire outputs ([`network`]) and read out by the first output
//! to fire ([`decoding`]). Training is online and error driven
//! ([`plasticity`]); [`metrics`] counts the synaptic events along the way.

pub mod codec;
pub mod config;
pub mod dataset;
pub mod decoding;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod metrics;
pub mod network;
pub mod pipeline;
pub mod plasticity;
pub mod rng;

pub use codec::{derive_structure, encode, encode_per_pixel, Encoder, EncoderConfig, GrayImage, SpikeTrain};
pub use config::{parse_config, RunConfig};
pub use dataset::LabeledImage;
pub use decoding::{decode, Decision, EvalMode, EvalSummary, Prediction};
pub use error::{Error, Result};
pub use kernels::{Kernel, SpikeKernel};
pub use metrics::{EnergyModel, OpCounters};
pub use network::{fire_and_cut, membrane_at, trace, IfcParams, NeuronTrace, Readout, WeightMatrix};
pub use pipeline::{ClassOrder, Participation, Pipeline};
pub use plasticity::{desired_pattern, LearningParams};
