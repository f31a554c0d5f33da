//! Two-valued functions: pair metric, sampled fields, sheet continuation and
//! coincidence geometry.

pub mod coincidence;
pub mod diff;
pub mod field;
pub mod grid;
pub mod holder;
pub mod sheets;
pub mod value;

pub use coincidence::{
    box_counting_dimension, default_tolerances, detect_coincidence, CoincidenceSet, DimensionEstimate,
};
pub use field::{decompose, recompose, SheetLabels, SymmetricField, TwoValuedField, VectorField};
pub use grid::{Grid, PolarGrid, RectGrid};
pub use holder::holder_seminorm;
pub use sheets::{monodromy, select_sheets};
pub use value::{pair_distance, TwoValue};
