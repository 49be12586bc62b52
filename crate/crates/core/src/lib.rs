pub mod airspy;
pub mod array;
pub mod asm;
pub mod channel;
pub mod config;
pub mod csb_defense;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod mutual_info;

pub use airspy::{AttackConstraints, AttackProblem, Scenario, Trajectory, ValueTable};
pub use array::{ArrayConfig, ArrayResponse, Beamformer, GridIndex, Resolution};
pub use asm::AsmConfig;
pub use channel::{Defense, LinkSetup, LinkState, PskConstellation, SerResult};
pub use config::ExperimentConfig;
pub use csb_defense::{ApnLaw, PartitionReport, ShiftPair};
pub use error::{CsbError, Result};
pub use geometry::{RectPoint, SphPoint, UavPlaneCoord, UavPlaneSpec};
