//! Host-side deep/dark-web browsing forensics toolkit: case and custody
//! management, order-of-volatility scheduling, browser store extraction,
//! deleted-record carving, registry indicators, memory scanning,
//! correlation, timeline and reporting.

pub mod acquisition;
pub mod artifact;
pub mod browser;
pub mod case;
pub mod config;
pub mod correlate;
pub mod memscan;
pub mod pipeline;
pub mod registry;
pub mod report;
pub mod sqlite;
pub mod timestamp;

pub use artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
pub use case::{Case, CaseError, CustodyAction, CustodyRecord, EvidenceItem, EvidenceKind, Workspace};
pub use config::Config;
pub use pipeline::{run_case, PipelineError, RunOutput};
pub use report::RunMode;
