pub mod app;
pub mod calculus;
pub mod energy;
pub mod geometry;
pub mod lloyd;
pub mod measures;
