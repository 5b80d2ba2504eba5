//! System model, robust verification and the `beta`-search designer for
//! AN-aided robust beamforming with power splitting in a MISO cognitive radio
//! network with energy-harvesting receivers.

pub mod channels;
pub mod designer;
pub mod error;
pub mod model;
pub mod oracle;
pub mod params;
pub mod sdr;

pub use channels::{generate_channels, generate_channels_indexed, CVec, ChannelSet};
pub use designer::{design, extract_beamformer, rank_report, BetaGrid, TIE_BREAK_SLACK, DesignOutcome, DesignSettings, PointStatus, RankReport, TracePoint};
pub use error::{Result, SwiptError};
pub use model::{CMat, TransmitDesign};
pub use oracle::{extremize_quadratic_over_ball, verify_robust_design, worst_case_eav_sinr, QuadraticBallExtremum, RobustReport, Sense};
pub use params::{parse_config, SystemParams};
pub use sdr::{beta_bounds, build_p4, map_solution, min_trace_problem, Layout, P4Problem, P4Solution};
