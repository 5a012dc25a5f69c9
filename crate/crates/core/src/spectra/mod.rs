//! Signal-to-image core: STFT, dB conversion, normalisation, resizing and
//! the on-disk spectrogram format.

mod image;
mod sgrm;
mod stft;

pub use image::{resize_bilinear, to_image, write_pgm, ImageGrid};
pub use sgrm::{decode_sgrm, encode_sgrm, load_sgram, save_sgram, SGRM_MAGIC, SGRM_VERSION};
pub use stft::{stft, IqSignal, Spectrogram, StftConfig, Window, DB_FLOOR, POWER_EPS};
