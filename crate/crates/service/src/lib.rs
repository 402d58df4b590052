//! Planning service: session store, HTTP API and the command line front end.

pub mod api;
pub mod cli;
pub mod session;
