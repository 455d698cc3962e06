//! Placeholder; sweep engine lands next.
