//! Library surface of the simulation front-end; the `thermotop` binary is a
//! thin argument parser over [`commands`].

pub mod commands;
pub mod config;
pub mod csv;
pub mod report;
pub mod svg;
