pub mod biset;
pub mod cli;
pub mod contraction;
pub mod decide;
pub mod group;
pub mod levy;
pub mod limit;
pub mod machine;
pub mod mating;
pub mod torus;
