//! Runs every code block in the book as a doc-test.
//!
//! mdbook renders `book/src` but does not execute it; including each
//! chapter as module documentation makes `cargo test --doc -p tina-guide`
//! compile and run all of its Rust snippets, so the guide and the library
//! cannot drift apart. One module per chapter keeps test failures traceable
//! to their chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/world-model.md")]
pub mod world_model {}

#[doc = include_str!("../../../book/src/environments.md")]
pub mod environments {}

#[doc = include_str!("../../../book/src/perception.md")]
pub mod perception {}

#[doc = include_str!("../../../book/src/interaction.md")]
pub mod interaction {}

#[doc = include_str!("../../../book/src/memory.md")]
pub mod memory {}

#[doc = include_str!("../../../book/src/agent-loop.md")]
pub mod agent_loop {}

#[doc = include_str!("../../../book/src/backends.md")]
pub mod backends {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/ablations.md")]
pub mod ablations {}
