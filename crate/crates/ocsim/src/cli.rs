//! Command-line front end (in progress).
