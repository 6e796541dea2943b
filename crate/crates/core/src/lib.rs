//! Exact QFI dynamics of Floquet-time-crystal AC sensors built on the kicked
//! Lipkin–Meshkov–Glick model.

pub mod floquet;
pub mod hso;
pub mod oracle;
pub mod precision;
pub mod qfi;
pub mod semiclassical;
pub mod signal;
pub mod spin;
