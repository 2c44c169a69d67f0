//! Book chapters compiled as doc-tests so their snippets stay current.

#[doc = include_str!("../../../book/src/intro.md")]
mod intro {}
#[doc = include_str!("../../../book/src/model.md")]
mod model {}
#[doc = include_str!("../../../book/src/transform.md")]
mod transform {}
#[doc = include_str!("../../../book/src/belief.md")]
mod belief {}
#[doc = include_str!("../../../book/src/solver.md")]
mod solver {}
#[doc = include_str!("../../../book/src/policy.md")]
mod policy {}
#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
#[doc = include_str!("../../../book/src/numerics.md")]
mod numerics {}
