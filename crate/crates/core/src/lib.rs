//! Measurement-induced Kerr phases from a squeezed, rotated ancilla.

pub mod bootstrap;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod gaussian_map;
pub mod metrology;
pub mod protocol;
pub mod quadrature;
pub mod scalar;
pub mod stateprep;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type FockVector64 = fock::FockVector<f64>;
pub type FockVector32 = fock::FockVector<f32>;
pub type AncillaGaussian64 = gaussian_map::AncillaGaussian<f64>;
pub type ChannelParams64 = gaussian_map::ChannelParams<f64>;
pub type OutcomePdf64 = protocol::OutcomePdf<f64>;
pub type ThetaModel64 = metrology::ThetaModel<f64>;
pub type FisherInfo64 = metrology::FisherInfo<f64>;
pub type QfiReport64 = metrology::QfiReport<f64>;
pub type PrepReport64 = stateprep::PrepReport<f64>;
pub type BootstrapParams64 = bootstrap::BootstrapParams<f64>;
pub type ThetaModel32 = metrology::ThetaModel<f32>;
