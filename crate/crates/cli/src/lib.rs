//! IO, file formats and timing support behind the `semimarkov` binary.
//! Exposed as a library so integration tests can drive the exact readers
//! and writers the binary uses.

pub mod bench;
pub mod error;
pub mod io;
