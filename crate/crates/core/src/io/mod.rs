//! On-disk formats: `.varm` matrices, run manifests, CSV matrices.

pub mod csv_matrix;
pub mod manifest;
pub mod matrix;

pub use csv_matrix::{parse_csv_matrix, read_csv_matrix};
pub use manifest::{
    manifest_path, read_manifest, read_run, run_dir, sanitize, write_run, BaselineEntry,
    EpochEntry, LayerEntry, RunManifest, WriteOptions, FORMAT_VERSION, MANIFEST_NAME,
};
pub use matrix::{decode_matrix, encode_matrix, read_matrix, write_matrix};
