pub mod branched;
pub mod metric;
pub mod residual;
pub mod rotation;
pub mod study;
pub mod variation;
