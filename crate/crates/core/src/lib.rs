//! Exact, brute-force algorithmic statistics relative to one small machine.
//!
//! Every complexity here is computed by running all programs up to a length
//! bound on TVM-1 (see [`machine`]). On top of those tables the crate
//! builds structure functions, antistochastic strings, advice-based
//! reconstruction, erasure list decoding and total conditional complexity.

pub mod antistochastic;
pub mod bits;
pub mod cache;
pub mod codes;
pub mod complexity;
pub mod error;
pub mod experiment;
pub mod machine;
pub mod profiles;
pub mod reconstruct;
pub mod report;
pub mod sets;

pub use bits::{BitString, Program};
pub use complexity::{Complexity, ComplexityTable, Domain, Lab};
pub use error::{LabError, Result};
pub use machine::{DescriptionMode, MachineConfig, RunResult, Tvm1};
pub use sets::SetBitmap;
