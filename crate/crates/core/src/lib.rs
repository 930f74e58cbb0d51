//! Explains unexpected correlations in aggregate query results by searching
//! for a small set of confounding attributes that minimizes the conditional
//! mutual information between the query's exposure and outcome.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] ingests CSV files into coded columnar tables and evaluates
//!   queries and contexts.
//! * [`estimator`] provides Miller-Madow entropy, (conditional) mutual
//!   information and a conditional-independence test.
//! * [`missing`] checks recoverability under missing data and fits inverse
//!   probability weights.
//! * [`prune`] removes uninteresting candidates before the search.
//! * [`mcimr`] is the greedy explanation search.
//! * [`subgroups`] finds the largest data groups the explanation leaves
//!   unexplained.
//! * [`acquire`] joins external attribute tables and knowledge-graph
//!   properties onto the input.
//! * [`pipeline`] wires everything into a single `explain` run.

pub mod acquire;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod mcimr;
pub mod missing;
pub mod pipeline;
pub mod prune;
pub mod subgroups;
pub mod synth;

pub use dataset::{ColumnId, QuerySpec, RowSelection, Table};
pub use error::{Error, Result};

/// Caps the worker threads used for data-parallel stages. Only the first
/// call has an effect.
#[cfg(feature = "parallel")]
pub fn set_thread_limit(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("cannot size the worker pool: {e}")))
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order follows input order.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
