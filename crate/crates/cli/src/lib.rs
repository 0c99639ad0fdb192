//! File formats, rendering and subcommands of the `plypart` tool.

pub mod commands;
pub mod format;
pub mod render;
