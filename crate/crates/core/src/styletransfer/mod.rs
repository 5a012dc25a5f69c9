//! Gram-matrix style transfer: content and style losses over the fixed
//! feature network and a pixel-space Adam optimiser.

mod loss;
mod transfer;

pub use loss::{
    content_loss, gram, style_loss, style_loss_from_grams, symmetric_eigenvalues, total_loss, GramMatrix, LossBreakdown,
};
pub use transfer::{
    batch_stylize, image_seed, loss_and_gradient, ncc, transfer, Init, Optimizer, StyleTarget, StyleTransferConfig,
    TransferResult,
};
