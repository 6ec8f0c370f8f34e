//! Dataset bundles, run configuration, and report files.

mod bundle;
mod config;
mod report;

pub use bundle::{
    load_bundle, read_features, read_jsonl, read_raw_trials, resolve_data_dir, save_bundle, write_features, write_jsonl,
    write_raw_trials, DATA_ENV, DOCUMENTS_FILE, FEATURES_FILE, FEATURE_INDEX_FILE, QUERIES_FILE, RAW_FILE, SESSIONS_FILE,
};
pub use config::{RunConfig, SweepConfig};
pub use report::{read_report_values, read_summary, write_report, write_report_tsv, Comparison, Summary, REPORT_FILE, SUMMARY_FILE};
