//! Loading, validating and persisting embeddings and labels, the embedding
//! service client, and image preprocessing.

pub mod dataset;
pub mod formats;
pub mod image;
pub mod matrix;
pub mod service;
pub mod stub;

pub use dataset::{LabeledDataset, Sample};
pub use formats::{load_embeddings, manifest_path, save_embeddings, EmbeddingFormat};
pub use image::{preprocess_image, Image, CHANNEL_MEAN, CHANNEL_STD};
pub use matrix::EmbeddingMatrix;
pub use service::{fetch_embeddings, pool_and_normalize, EmbeddingServiceConfig, Pooling};
