//! Plan construction for a workload of window functions.
//!
//! [`Scheme::Cso`] is the cover-set based planner. The other schemes are
//! reference points: an exhaustive search ([`Scheme::Bfo`]), ordering groups
//! that only ever full-sort ([`Scheme::Orcl`]) and plain declaration order
//! ([`Scheme::Psql`]).

mod baseline;
mod bfo;
mod coloring;
mod cso;
mod prefixable;

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::RelStats;
use crate::error::{Error, Result};
use crate::order::{SegProp, Workload};
use crate::plan::Plan;

pub use baseline::{orcl_plan, psql_plan};
pub use bfo::{bfo_plan, BFO_BOUND};
pub use coloring::{partition_cover_sets, ConflictGraph};
pub use cso::{cso_plan, decompose, Decomposition};
pub use prefixable::{partition_prefixable, PrefixGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Cso,
    Bfo,
    Orcl,
    Psql,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Cso, Scheme::Bfo, Scheme::Orcl, Scheme::Psql];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Cso => "cso",
            Scheme::Bfo => "bfo",
            Scheme::Orcl => "orcl",
            Scheme::Psql => "psql",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown scheme `{s}`")))
    }
}

/// Builds a plan for `workload` over a stream ordered as `input`.
pub fn plan(scheme: Scheme, input: &SegProp, workload: &Workload, stats: &RelStats) -> Result<Plan> {
    input.validate()?;
    match scheme {
        Scheme::Cso => cso_plan(input, workload, stats),
        Scheme::Bfo => bfo_plan(input, workload, stats),
        Scheme::Orcl => orcl_plan(input, workload, stats),
        Scheme::Psql => psql_plan(input, workload, stats),
    }
}
