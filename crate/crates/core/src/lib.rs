//! Micro-Doppler signature synthesis, Gram-matrix style transfer and
//! realism/augmentation benchmarks.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectra`]: STFT, dB scaling, resizing and the SGRM image format.
//! - [`simulator`]: point-scatterer activity kinematics, clean and
//!   pseudo-measured signatures, AWGN and patch-bootstrap noise.
//! - [`neuralnet`]: a small CPU convolution engine; the fixed feature
//!   network used for style transfer and the trainable activity classifier.
//! - [`styletransfer`]: content/style losses and the pixel optimiser.
//! - [`eval`]: SURF-style descriptors, t-SNE, k-means and centroid tables.
//! - [`harness`]: dataset bundles, training compositions, cases and sweeps.

pub mod error;
pub mod eval;
pub mod harness;
pub mod neuralnet;
pub mod rng;
pub mod simulator;
pub mod spectra;
pub mod styletransfer;

pub use error::{Error, Result};
pub use spectra::{ImageGrid, IqSignal, Spectrogram, StftConfig, Window};
pub use simulator::{ActivityId, EnvConfig, RadarConfig};
pub use neuralnet::{FeatureNetwork, Tensor};
pub use styletransfer::{StyleTransferConfig, TransferResult};


