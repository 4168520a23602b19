//! Malware triage from binary visualization.
//!
//! Files are rendered to a color image by classifying each byte against the
//! ASCII table and laying the stream onto a Hilbert curve, reduced to a
//! 1024-length vector of stripe-wise color histograms, and classified by a
//! self-organizing incremental neural network trained online on labeled
//! benign/malicious corpora.
//!
//! - [`hilbert`]: the curve index/coordinate bijection.
//! - [`binviz`]: byte classification, rendering, PNG output.
//! - [`features`]: stripe histograms and the 1024-length vector.
//! - [`soinn`]: the online topological learner and classifier.
//! - [`model_store`]: canonical JSON model persistence.
//! - [`pipeline`]: corpus ingestion, training, evaluation, sweeps.
//!
//! ```
//! let img = binsight::binviz::render(b"hello world", 256, Some("txt")).unwrap();
//! let features = binsight::features::extract(&img).unwrap();
//! assert_eq!(features.values().len(), 1024);
//! ```

pub mod binviz;
pub mod error;
pub mod features;
pub mod hilbert;
pub mod model_store;
pub mod pipeline;
pub mod soinn;

pub use binviz::{ByteImage, ColorClass, Rgb};
pub use error::{Error, Result};
pub use features::{ExtractorVariant, FeatureVector, StripeId};
pub use hilbert::{CurveOrder, GridPoint};
pub use model_store::Provenance;
pub use pipeline::{DatasetRow, EvalReport, Label, Sample, SessionConfig, SweepResult};
pub use soinn::{SoinnNetwork, TrainParams, Verdict};
