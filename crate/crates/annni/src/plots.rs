//! Plot script emission (placeholder).
