pub mod cma;
pub mod expr;
pub mod mlme;
pub mod simkit;
pub mod sskr;
pub mod transform;
