//! Holds the `acceptance` test target only; see `tests/acceptance.rs`.
//!
//! It is a separate package so that `cargo test --workspace` runs it after
//! the unit and integration tests of the other crates: the suite exits
//! nonzero when a criterion fails, which stops the test run.
