//! End-to-end acceptance checks for `hwa-ldpc`; everything lives in
//! `tests/acceptance.rs`, which prints one PASS/FAIL line per criterion.
