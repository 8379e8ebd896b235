//! Fuzzy-inference crime-type experts.
//!
//! One Takagi-Sugeno model ("expert") is learned per class label from
//! spatiotemporal records. Rules and their confidence targets come from a
//! uniform grid over each label's records; a query (location, date) is
//! classified by the expert with the highest output.
//!
//! Three model variants are supported:
//!
//! * `fis`: constant consequents equal to the grid-cell confidences,
//! * `anfis`: linear consequents fitted by hybrid learning (least squares for
//!   consequents, gradient descent for Gaussian premises),
//! * `hybrid`: per label, whichever of the two scores better on a selection set.

pub mod anfis;
pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod experts;
pub mod fuzzy;
pub mod grid;
pub mod model_io;
pub mod pipeline;

pub use anfis::{lse_consequents, premise_gradients, rmse, train_hybrid, TrainingConfig, TrainingReport};
pub use dataset::{
    holiday_difference, load_dataset, process_record, split_by_label, HolidayCalendar, InputVector,
    ProcessedRecord, RawRecord,
};
pub use error::{Error, Result};
pub use experts::{build_hybrid, evaluate_accuracy, EvaluationTable, ExpertEnsemble, Prediction};
pub use fuzzy::{Consequent, GaussianMf, Rule, SugenoFis, Variant};
pub use grid::{CellStats, GridCell, GridPartition, GridStats};
