pub mod bundle;
pub mod geometry;
pub mod quantization;
pub mod scenarios;
pub mod symplectic;
