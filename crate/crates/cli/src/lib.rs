//! Command line and HTTP service over the ccrs-core pipeline.

pub mod api;
pub mod cli;
pub mod pipeline;
