//! Library surface of the command-line front end, shared with the
//! integration and acceptance tests.

pub mod bench;
pub mod csvio;
pub mod datagen;
pub mod error;
pub mod fit;
