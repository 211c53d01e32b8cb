pub mod ep;
pub mod error;
pub mod functor;
pub mod map;
pub mod poset;
pub mod relation;
pub mod chain;
pub mod engines;
pub mod cofe;
pub mod karoubi;
pub mod laws;
pub mod dsl;
pub mod workbench;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/posets.md")]
    mod posets {}
    #[doc = include_str!("../../../book/src/functors.md")]
    mod functors {}
    #[doc = include_str!("../../../book/src/chain.md")]
    mod chain {}
    #[doc = include_str!("../../../book/src/relations.md")]
    mod relations {}
    #[doc = include_str!("../../../book/src/fixed-points.md")]
    mod fixed_points {}
    #[doc = include_str!("../../../book/src/metric.md")]
    mod metric {}
    #[doc = include_str!("../../../book/src/karoubi.md")]
    mod karoubi {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
