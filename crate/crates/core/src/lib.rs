pub mod cli;
pub mod delayline;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod plant;
pub mod presets;
pub mod protocol;
pub mod topology;

pub use error::{Error, Result};
