//! Random decomposable combinatorial structures (assemblies, multisets and
//! selections) realised as independent processes conditioned on a weighted
//! sum.
//!
//! The component spectrum `C(n)` of a uniformly (or `theta`-biased) chosen
//! structure of weight `n` has the law of independent `Z_1, ..., Z_n`
//! conditioned on `T_n = sum i Z_i = n`.  Everything here builds on that
//! identity: exact laws of weighted sums, total-variation distances, moments,
//! limit laws and rejection samplers, with a brute-force oracle as ground
//! truth at small `n`.

pub mod error;
pub mod ext;
pub mod indep_process;
pub mod limits;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod sampler;
pub mod structures;
pub mod sumdist;
pub mod tv;
pub mod verify;

pub use error::{Error, Result};
pub use indep_process::{DiscreteLaw, Strategy, SumMoments, TiltedParams};
pub use limits::LimitLaw;
pub use structures::{ComponentVector, Kind, Meta, StructureSpec};
pub use sumdist::{IndexSet, JointPmf, PmfVector};
pub use tv::TvReport;
