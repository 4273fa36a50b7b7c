//! Holds the acceptance suite under `tests/`; no library code.
