//! Resonance detection, modal design points and configuration screening.

pub mod design_set;
pub mod exclusion;
pub mod identify;
pub mod peaks;

pub use design_set::{aggregate, analysis_grid, channel_points, modal_points, DesignSet, ModalPoint, ScenarioSummary};
pub use exclusion::{exclude, ClusterMedian, ExclusionPolicy, KeepAll, PolicyRegistry, StabilityOnly, DEFAULT_POLICY};
pub use identify::identify_fr;
pub use peaks::{detect_peaks, PeakOptions};
