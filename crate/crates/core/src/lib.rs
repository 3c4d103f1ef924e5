pub mod acceptance;
pub mod cover;
pub mod error;
pub mod estimate;
pub mod fibres;
pub mod gallery;
pub mod ifs;
pub mod oracle;
pub mod interval;
pub mod rational;
pub mod separation;
pub mod source;

pub use error::{Error, Result};
pub use ifs::{AffineMap2D, IFSSystem, Similarity1D, Word};
pub use interval::{Interval, IntervalUnion};
pub use rational::Rational;
