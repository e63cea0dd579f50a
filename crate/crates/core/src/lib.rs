//! Unit-root matrix polynomials: pole order of `A^{-1}(z)` at `z = 1`, the
//! principal part of its Laurent expansion, cointegration projectors and a
//! simulation kit for checking them.

pub mod coint;
pub mod error;
pub mod laurent;
pub mod matpoly;
pub mod numla;
pub mod parsum;
pub mod polecore;
pub mod simkit;

pub use error::{Error, Result};
pub use matpoly::MatrixPolynomial;
pub use numla::{Mat, Tolerances};
pub use polecore::{detect_pole_order, PoleReport};
