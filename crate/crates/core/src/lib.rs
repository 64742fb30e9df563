//! Learning binary W-operators by lattice descent over parameter lattices,
//! and reading learned operators back through their basis of maximal
//! intervals.
//!
//! Data-parallel loops (candidate evaluation, per-pair error sums, exhaustive
//! tabulation) use rayon when the `parallel` feature is on, and plain
//! iterators otherwise. Results do not depend on the feature.

pub mod error;
pub mod lattice;
pub mod learn;
pub mod modelsel;
pub mod morphology;
pub mod par;
pub mod params;
pub mod repr;

pub use error::{Error, Result};
pub use lattice::{
    enumerate_subsets, hamming_neighbors, max_antichain, Caps, Interval, Offset, PartialOrderLeq,
    StructuringElement, Subset, Window, ORIGIN,
};
pub use learn::{
    empirical_error, error_counts, holdout_error, iou, lda, partition_batches, slda, Dataset, NeighborCount,
    SamplePair, SldaConfig, TrainResult, TrainTrace,
};
pub use modelsel::{
    hierarchical_slda, window_neighbors, InnerFit, OuterConfig, Validation, WindowLatticeSpec,
};
pub use morphology::{
    apply_table, complement, dilate, erode, intersection, interval_operator, pointwise, shift, union,
    BinaryImage, Boundary, ImageOperator, PointwiseOp,
};
pub use params::{basis_of_param, effective_window, random_init, realize, ClassSpec, ParamPoint, Payload};
pub use repr::{
    basis_of, characteristic_of, kernel_of, property_report, reconstruct, Basis, BooleanFunctionTable,
    KernelSet, PropertyReport,
};
