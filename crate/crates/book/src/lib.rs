//! Compiles the guide's code listings as doc-tests.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenarios.md")]
mod scenarios {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/clearing.md")]
mod clearing {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/prices.md")]
mod prices {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/vlb.md")]
mod vlb {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/audit.md")]
mod audit {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
