pub mod ablation;
pub mod classifiers;
pub mod metrics;
pub mod protocol;
pub mod stats;
