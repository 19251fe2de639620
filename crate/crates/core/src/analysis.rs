//! Weak-value extraction from sweep data.
