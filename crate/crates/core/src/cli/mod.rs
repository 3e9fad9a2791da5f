//! Command-line front end: scenario and sweep documents, CSV tables, run
//! manifests and the subcommands built on them.

mod commands;
mod output;
mod scenario;
mod sweep;

pub use commands::{cmd_simulate, cmd_spectrum, cmd_sweep, cmd_verify, simulate, CliError, CliResult, RunOptions, VerifyReport};
pub use output::{format_num, render_csv, write_csv, Field, RouteTiming, RunManifest, Tolerances, Verdict};
pub use scenario::{
    parse_scenario, ComplexValue, Geometry, Grid, InitialState, PacketSpec, Piece, ProfileSpec, RouteChoice, Scenario,
    System, SCHEMA_VERSION,
};
pub use sweep::{parse_sweep, SweepPoint, SweepSpec, SweepSystem, MAX_POINTS};
