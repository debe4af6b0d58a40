//! Microcluster gluing (in progress).
