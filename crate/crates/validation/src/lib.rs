//! Acceptance checks for the calpha workspace.
//!
//! The checks live in `tests/acceptance.rs` and print one PASS or FAIL line
//! per criterion. Run them with `cargo test -p calpha-validation`.
