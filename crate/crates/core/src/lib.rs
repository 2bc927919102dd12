//! Estimating how individuals prioritize values from the points they
//! allocate to policy options and the motivations they write for them.
//!
//! Choices alone give a utility per value through a value-option relevance
//! matrix; motivations sharpen that estimate by breaking ties, clearing
//! irrelevant cells and adding overlooked ones. An active-learning harness
//! simulates how much annotation a motivation classifier needs before the
//! estimates it feeds are as good as those from fully annotated data.

pub mod alsim;
pub mod classifier;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod estimation;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod synth;

pub use error::{Error, Result, ValidationError};
pub use estimation::{EstimationResult, Estimator, McSemantics, Method, Pipeline, Stage};
pub use model::{
    ChoiceAllocation, Dataset, LabelSet, Motivation, MotivationSet, Participant, Ranking, UtilityVector,
    ValueOptionMatrix,
};
