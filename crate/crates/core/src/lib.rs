//! Typical-authentication capacity regions for discrete memoryless channel
//! pairs, plus small authentication codes that can be built, transformed and
//! attacked by exhaustive enumeration.
//!
//! Alice sends to Bob over a main channel `p(y|x)` while an adversary listens
//! through a tap channel `p(z|x)` and may replace what Bob receives. A rate
//! triple `(r, α, κ)` collects the message rate, the typical authentication
//! rate and the key consumption rate, all in bits per channel use.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`channel`] | distributions, channels, memoryless extensions, joint laws |
//! | [`info`] | entropy, mutual information, Blahut–Arimoto capacity |
//! | [`region`] | region constraints, membership search, sweeps, elimination check |
//! | [`codes`] | Simmons and Lai-style codes, the key-expansion transform |
//! | [`adversary`] | attacks, false-acceptance probabilities, rate brackets |
//! | [`io`] | JSON and CSV formats shared with the command-line tool |
//!
//! ```
//! use authcap::channel::ChannelPair;
//! use authcap::region::{bsc_region_constraints, satisfies_region, RateTriple};
//!
//! let c = bsc_region_constraints(0.1, 0.2).unwrap();
//! assert!(satisfies_region(&RateTriple::new(0.25, 0.25, 0.25), &c));
//! assert!(!satisfies_region(&RateTriple::new(0.25, 0.26, 0.26), &c));
//! # let _ = ChannelPair::bsc_pair(0.1, 0.2).unwrap();
//! ```

pub mod adversary;
pub mod channel;
pub mod codes;
pub mod error;
pub mod info;
pub mod io;
pub mod region;
pub mod rng;

pub use error::{Error, Result};

/// The guide's chapters, compiled as doctests so their snippets stay honest.
#[cfg(doctest)]
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/information.md")]
    pub mod information {}
    #[doc = include_str!("../../../book/src/region.md")]
    pub mod region {}
    #[doc = include_str!("../../../book/src/bsc.md")]
    pub mod bsc {}
    #[doc = include_str!("../../../book/src/codes.md")]
    pub mod codes {}
    #[doc = include_str!("../../../book/src/key_expansion.md")]
    pub mod key_expansion {}
    #[doc = include_str!("../../../book/src/adversary.md")]
    pub mod adversary {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
