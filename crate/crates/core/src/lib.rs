//! Conversion of linear 1-D PDEs with spatial integral terms into partial
//! integral equations, and Lyapunov stability certification of the result.

pub mod polyalg;
pub mod scalar;
pub mod conversion;
pub mod pde_model;
pub mod pi_ops;
pub mod models;
pub mod lpi;
pub mod oracle;

#[cfg(test)]
pub(crate) mod testutil;
