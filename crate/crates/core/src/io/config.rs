use std::fs;
use std::path::Path;

use crate::dynamics::{InitialSource, ModelConfig};
use crate::error::{HkError, Result};

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key = ...` assignment, or of the `[key]` header.
fn locate_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|line| {
        let l = line.trim_start();
        let assigned = l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='));
        assigned || l.trim_end() == format!("[{key}]")
    })
    .map(|i| i + 1)
}

/// Reads a TOML model description. A relative `initial.path` is resolved
/// against the directory holding the config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HkError::io(path, e))?;
    parse_config_str(&text, path.parent())
}

pub fn parse_config_str(text: &str, base_dir: Option<&Path>) -> Result<ModelConfig> {
    let mut config: ModelConfig = toml::from_str(text).map_err(|e| HkError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    if let Err((key, err)) = config.validate_located() {
        let message = match err {
            HkError::Config(m) => m,
            other => other.to_string(),
        };
        return Err(HkError::Parse { line: locate_key(text, key).unwrap_or(1), message });
    }
    if let (InitialSource::File { path }, Some(base)) = (&mut config.initial, base_dir) {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
    Ok(config)
}

pub fn config_to_toml(config: &ModelConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| HkError::Config(format!("cannot serialize config: {e}")))
}

pub fn write_config(config: &ModelConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, config_to_toml(config)?).map_err(|e| HkError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Schedule;

    const MINIMAL: &str = r#"
n = 2
d = 1
epsilon = 1.0
max_steps = 10

[schedule]
kind = "synchronous"

[initial]
source = "inline"
coords = [[0.0], [1.0]]
"#;

    #[test]
    fn minimal_sync() {
        let cfg = parse_config_str(MINIMAL, None).unwrap();
        assert_eq!(cfg.schedule, Schedule::Synchronous);
        assert_eq!(cfg.consensus_tol, 1e-12);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.monitors.nl8);
    }

    #[test]
    fn power_law() {
        let text = MINIMAL.replace("kind = \"synchronous\"", "kind = \"power_law\"\na = 2.0");
        let cfg = parse_config_str(&text, None).unwrap();
        assert_eq!(cfg.schedule, Schedule::PowerLaw { a: 2.0 });
    }

    #[test]
    fn negative_epsilon_names_line() {
        let text = MINIMAL.replace("epsilon = 1.0", "epsilon = -1.0");
        match parse_config_str(&text, None) {
            Err(HkError::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("epsilon"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_located() {
        let text = MINIMAL.replace("max_steps = 10", "max_steps = 10\nbogus = 3");
        match parse_config_str(&text, None) {
            Err(HkError::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn alpha_out_of_range() {
        let text = MINIMAL.replace("kind = \"synchronous\"", "kind = \"constant\"\nalpha = [0.5, 1.5]");
        match parse_config_str(&text, None) {
            Err(HkError::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("outside [0, 1]"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_key() {
        let text = MINIMAL.replace("max_steps = 10\n", "");
        let err = parse_config_str(&text, None).unwrap_err();
        assert!(err.to_string().contains("max_steps"), "{err}");
    }

    #[test]
    fn relative_file_is_resolved() {
        let text = MINIMAL.replace("source = \"inline\"\ncoords = [[0.0], [1.0]]", "source = \"file\"\npath = \"x0.csv\"");
        let cfg = parse_config_str(&text, Some(Path::new("/data/run"))).unwrap();
        assert_eq!(cfg.initial, InitialSource::File { path: "/data/run/x0.csv".into() });
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = parse_config_str(MINIMAL, None).unwrap();
        cfg.consensus_tol = 1e-300;
        cfg.schedule = Schedule::Table { table: vec![vec![0.0, 0.1], vec![1.0 / 3.0, 0.5]] };
        let back = parse_config_str(&config_to_toml(&cfg).unwrap(), None).unwrap();
        assert_eq!(back, cfg);
    }
}
