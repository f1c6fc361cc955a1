pub mod error;
pub mod logmag;
pub mod weights;
pub mod operator_engine;
pub mod report;
pub mod criteria;
pub mod constructor;
pub mod cli;
