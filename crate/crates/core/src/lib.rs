//! Core library for classifying N-qubit entanglement through Mermin-Klyshko
//! Bell operators.
//!
//! The pipeline: enumerate the integer partitions of N and their entanglement
//! indices ([`partition`]), build the MK operator pair F_N / F_N' as exact
//! sparse coefficient maps ([`mk`]), evaluate them on dense statevectors
//! ([`state`]), maximize the quadratic Bell value over measurement settings
//! ([`optimizer`]), and certify a minimal entanglement class from the bound
//! hierarchy 2^(E+1) ([`classifier`]).
//!
//! With the default `parallel` feature, restart and sampling loops run on
//! rayon; disabling it yields a fully sequential build with bit-identical
//! results.

pub mod classifier;
pub mod error;
pub mod io;
pub mod mk;
pub mod optimizer;
pub mod partition;
pub(crate) mod runner;
pub mod state;

pub use error::{Error, Result};
pub use partition::{classes, enumerate_partitions, Partition, PartitionStats};
pub use state::{Direction, MixedState, ProductState, PureState, Settings, State};

/// Caps the size of the internal worker pool. No-op in sequential builds or
/// if a pool was already installed.
pub fn set_max_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
}
