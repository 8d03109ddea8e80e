//! Steady Euler flows on the torus, bicharacteristic-amplitude transport,
//! exponent estimation and spectral tools for the linearized operator.

pub mod bas;
pub mod error;
pub mod exponent;
pub mod flow;
pub mod oracle;
pub mod spectral;

pub use bas::{integrate_bas, AdmissibleSample, BasState, ClassTag};
pub use error::{FluidexError, Result};
pub use exponent::{composite_report, estimate_exponent, sample_admissible, ClassReport, ExponentEstimate};
pub use flow::{catalog, Point, SteadyFlow, Support, Vec3};
pub use oracle::{compare_growth, evolve_linearized, predicted_wavepacket};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
