//! Realism analysis: SURF-style descriptors pooled into per-image
//! embeddings, t-SNE projection, k-means, and centroid distances between
//! domains.

mod kmeans;
mod surf;
mod table;
mod tsne;

pub use kmeans::{kmeans, silhouette, KMeansResult};
pub use surf::{
    describe, detect_keypoints, has_margin, image_embedding, integral_image, pool_descriptors, DetectorConfig,
    IntegralImage, Keypoint, DESCRIPTOR_LEN, EMBEDDING_LEN,
};
pub use table::{centroid_distance_table, CloudPoint, DistanceTable, Domain, EmbeddingCloud};
pub use tsne::{conditional_affinities, tsne, TsneConfig, TsneResult};
