//! Holds the `acceptance` integration test. Kept in its own package so that it runs
//! after every module test in `cargo test --workspace`.
