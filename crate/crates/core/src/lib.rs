//! Fractional Musielak–Sobolev spaces on uniform grids: generalized
//! N-functions, scalar and fractional modulars, Luxemburg norms, and the
//! translate, cut-off, mollify approximation of functions vanishing outside a
//! hypograph.

pub mod cli;
pub mod error;
pub mod grid;
pub mod modular;
pub mod nfunction;
pub mod norms;
pub mod pipeline;
pub mod quadrature;
pub mod smoothing;

pub use error::{Error, Result, Stage};
