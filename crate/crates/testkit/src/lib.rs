//! Direct-summation oracles over plain data.
//!
//! Nothing here depends on `rdbprofile`; every routine recomputes its
//! quantity from the definition by enumeration so the library's optimized
//! paths can be checked against it.

pub mod homophily;
pub mod kendall;
pub mod paths;
