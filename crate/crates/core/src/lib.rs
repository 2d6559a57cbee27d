#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diag;
pub mod dist;
pub mod fit;
pub mod pipeline;
pub mod product;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod specfun;
