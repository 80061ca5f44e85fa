//! Synthetic domains with known ground truth: the 2D toy problem, a
//! multi-class Gaussian-cluster generator, augmentations and CSV export.

mod augment;
mod clusters;
mod csv_io;
mod dataset;
mod split;
mod toy;

pub use augment::{augment, augment_rows, AugmentConfig};
pub use clusters::{make_unida_dataset, ClusterConfig, ClusterGeometry, ShiftSpec};
pub use csv_io::{format_f64, read_dataset_csv, write_dataset_csv, LoadedDatasets, TargetRows};
pub use dataset::{Dataset, Domain};
pub use split::{spcr, LabelSplit};
pub use toy::{make_toy_dataset, rotation, ToyConfig};
