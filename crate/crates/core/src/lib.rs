pub mod error;
pub mod ntt;
pub use error::Error;
