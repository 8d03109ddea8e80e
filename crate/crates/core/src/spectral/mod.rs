//! Truncated Fourier fields, the Leray projector, the operator B and wave packets.

pub mod fft;
pub mod field;
pub mod fit;
pub mod lemma;
pub mod operator;
pub mod packet;
pub mod project;

pub use field::FourierField;
pub use fit::{slope_fit, SlopeFit};
pub use operator::{build_b_matrix, factor_norm, FactorNorm, OperatorMatrix};
pub use packet::{make_wavepacket, Envelope, PacketKind, PacketSpec};
pub use project::{apply_b, helmholtz_project, verify_steady_euler, SteadyEulerResidual};
