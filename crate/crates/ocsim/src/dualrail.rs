//! Fock-space dual-rail layer (in progress).
