//! Config parsing and trajectory persistence.

mod config;
mod initial;
mod trajectory;

pub use config::{config_to_toml, parse_config, parse_config_str, write_config};
pub use initial::{read_initial_csv, write_initial_csv};
pub use trajectory::{
    read_any, read_trajectory, read_trajectory_json, sidecar_path, write_trajectory, write_trajectory_json,
};
