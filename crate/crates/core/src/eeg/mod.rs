//! EEG decoding path: preprocessing, differential-entropy features, and the
//! kernel classifier that turns them into brain relevance probabilities.

pub mod decoder;
pub mod features;
pub mod filter;
pub mod preprocess;
mod svm;

pub use decoder::{
    binarize_grade, select_model, train, DecoderConfig, DecoderModel, DecoderScope,
    PERSONALIZATION_THRESHOLD,
};
pub use features::{differential_entropy, extract_de, Band, DeFeatureVector};
pub use preprocess::{preprocess, EegSegment, PreprocessConfig, DEFAULT_CHANNELS};
pub use svm::PlattScaling;
