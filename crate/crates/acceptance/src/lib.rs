//! Acceptance-suite crate: all content lives in `tests/`.
