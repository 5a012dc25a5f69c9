//! Minimal CPU convolution engine: a fixed, seeded feature extractor with
//! named taps (input gradients only) and a small trainable classifier.

mod adam;
mod checkpoint;
mod classifier;
mod feature;
pub mod gradcheck;
pub mod layers;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, NNCK_MAGIC, NNCK_VERSION};
pub use classifier::{
    classifier_evaluate, classifier_train, confusion_from_predictions, ClassifierModel, ConfusionMatrix,
    Evaluation, LabeledImage, Param, TrainConfig, TrainHistory, DEFAULT_POOLS, INPUT_SIDE, NUM_CLASSES,
};
pub use feature::{
    feature_backward, feature_forward, Activations, FeatureCache, FeatureNetwork, Tap, TapGrads, DEFAULT_INPUT_SCALE,
    FEATURE_WIDTHS,
};
pub use tensor::{Scalar, Tensor};
