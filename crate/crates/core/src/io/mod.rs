//! Data ingestion, model files and run metadata.

mod csv_matrix;
mod dataset;
mod metadata;
mod mnist;
mod model_file;

pub use csv_matrix::{load_csv, parse_csv, save_csv, write_csv};
pub use dataset::{DataSource, Dataset, DatasetHandle, Normalize};
pub use metadata::{PreimageMetadata, RunMetadata};
pub use mnist::{load_mnist_idx, parse_mnist_idx, IMAGE_MAGIC, LABEL_MAGIC};
pub use model_file::{
    decode_model, encode_model, load_dual, load_model, load_primal, save_model, Model, MODEL_MAGIC,
    MODEL_VERSION,
};
