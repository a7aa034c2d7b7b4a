//! Finite-carrier workbench for relation liftings of set functors and
//! distributive laws over the powerset monad.

pub mod error;
pub mod finset;
pub mod functors;
pub mod liftings;
pub mod monads;
pub mod pullbacks;
pub mod replay;
pub mod report;
pub mod search;

pub use error::{Error, Result};
