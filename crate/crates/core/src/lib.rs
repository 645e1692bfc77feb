//! Frenet analysis of Legendre curves in Sasakian space forms and the
//! interpolating sesqui-harmonic equation `δ₂τ₂ − δ₁τ = 0`.

pub mod analyzer;
pub mod curve;
pub mod error;
pub mod expr;
pub mod families;
pub mod frenet;
pub mod jet;
pub mod model;
pub mod report;
pub mod variational;

pub use error::{Error, Result};
pub use analyzer::{Case, DeltaPair, Shape, SignConvention};
pub use curve::{CurveSpec, Grid};
pub use frenet::{FrameScalars, FrenetData};
pub use model::{ModelPoint, TangentVec};
pub use report::{AnalyzeConfig, FlowConfig, ScanConfig, SweepRange};
pub use variational::{DiscreteCurve, EnergyBreakdown, Trajectory};
