//! Planning toolkit for quantum key distribution coexisting with classical
//! WDM traffic over metro fiber networks that mix standard single-mode fiber
//! (SSMF) and hollow-core fiber (HCF).
//!
//! The crate answers one question: given a metro topology, a set of
//! secret-key demands, and a budget of links that may be upgraded to HCF,
//! which links should be upgraded so that every demand is served with the
//! fewest quantum modules?
//!
//! The pieces, bottom up:
//!
//! - [`phys`]: WDM band plan (C-band quantum block with guard bands plus an
//!   O-band pool), fiber attenuation/Raman/nonlinearity profiles, and the
//!   per-span impairment models (insertion loss, spontaneous Raman
//!   scattering, four-wave mixing).
//! - [`skr`]: decoy-state BB84 secret-key-rate calculator with finite-key
//!   bounds, fed by the physical-layer models.
//! - [`net`]: topology ingestion, demand generation, shortest paths, and
//!   per-link spectrum occupancy.
//! - [`provision`]: the demand-serving procedure: relay placement,
//!   first-fit channel search in both bands, and the fitness accounting
//!   used by the optimizer.
//! - [`ga`]: budget-constrained genetic algorithm over binary
//!   HCF-placement vectors.
//! - [`sweep`]: seeded experiment harness sweeping budgets, length
//!   factors, and classical loads, with CSV emission.
//! - [`config`]: one TOML-backed configuration bundle with embedded,
//!   audit-dumpable defaults.

pub mod config;
pub mod error;
pub mod ga;
pub mod net;
pub mod phys;
pub mod provision;
pub mod skr;
pub mod sweep;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
