//! Numerical core for Liouville billiard tables: profiles, the billiard flow,
//! invariant tori, frequency maps and the moment (Radon) method.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
pub mod covering;
pub mod dynamics;
pub mod frequency;
pub mod legendre;
pub mod ode;
pub mod par;
pub mod profiles;
pub mod quadrature;
pub mod radon;
pub mod tori;
