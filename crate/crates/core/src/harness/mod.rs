//! End-to-end evaluation: datasets, time-ordered decoding, IRF/RRF runs,
//! reports, and a synthetic cohort generator.

mod dataset;
mod decode;
mod generator;
mod report;
mod run;
mod sweep;

pub use dataset::{Dataset, DatasetIndex, Examination, FeatureKey, FeatureTable, Query, Session, StimulusKind};
pub use decode::{decode_brain_scores, derive_seed, DecodeConfig, DecodedRecord, DecodedScores, SessionDecoding};
pub use generator::{
    cohort_stats, generate_raw_trials, generate_sessions, synth_raw_segment, CohortStats, EmissionMode, GeneratorConfig,
    RawTrial,
};
pub use report::{paired_t_test, ExperimentReport, PairedTest, ReportRow};
pub use run::{
    estimate_synthesis_params, irf_scores, rrf_scores, run_adaptive_irf, run_irf, run_irf_with, run_rrf, run_rrf_with, AssignmentSource, EvalConfig,
    Method, WeightPolicy,
};
pub use sweep::{decoder_sweep, SweepPoint};
