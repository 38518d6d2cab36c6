use std::fs;
use std::path::Path;

use eccpow::consensus::DifficultyTable;
use eccpow::simnet::SimConfig;
use serde::de::DeserializeOwned;

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Deserializes TOML (`.toml`) or JSON (anything else), naming the offending
/// key path on failure.
pub fn parse_config_text<T: DeserializeOwned>(text: &str, toml_syntax: bool) -> CliResult<T> {
    let located = |path: String, msg: String| {
        if path.is_empty() || path == "." {
            CliError::Usage(msg)
        } else {
            CliError::Usage(format!("{path}: {msg}"))
        }
    };
    if toml_syntax {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            located(path, e.into_inner().message().trim().to_string())
        })
    } else {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            located(path, e.into_inner().to_string())
        })
    }
}

fn is_toml(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"))
}

/// Loads and validates a simulation config.
pub fn load_sim_config(path: &Path) -> CliResult<SimConfig> {
    let config: SimConfig = parse_config_text(&read(path)?, is_toml(path))
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(config)
}

/// The table at `path` if given, else the bundled one.
pub fn load_table(path: Option<&Path>) -> CliResult<DifficultyTable> {
    match path {
        Some(p) => DifficultyTable::from_json(&read(p)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => Ok(DifficultyTable::default()),
    }
}

/// Reads one numeric column from a CSV file. A first line with no numeric
/// field is a header; `column` selects by header name, otherwise `bgt_ms` if
/// present, otherwise the first column.
pub fn read_samples(path: &Path, column: Option<&str>) -> CliResult<Vec<f64>> {
    let text = read(path)?;
    let err =
        |line: usize, msg: String| CliError::Usage(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();

    let mut index = 0;
    let header = lines
        .peek()
        .filter(|(_, l)| l.split(',').all(|f| f.trim().parse::<f64>().is_err()))
        .map(|(_, l)| {
            l.split(',')
                .map(|f| f.trim().to_string())
                .collect::<Vec<_>>()
        });
    if let Some(names) = &header {
        lines.next();
        let wanted = column.or_else(|| names.iter().any(|n| n == "bgt_ms").then_some("bgt_ms"));
        if let Some(name) = wanted {
            index = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| err(1, format!("no column named {name:?}")))?;
        }
    } else if let Some(name) = column {
        return Err(err(
            1,
            format!("no header line, cannot select column {name:?}"),
        ));
    }

    let mut values = Vec::new();
    for (i, line) in lines {
        let field = line
            .split(',')
            .nth(index)
            .ok_or_else(|| err(i + 1, format!("missing column {}", index + 1)))?
            .trim();
        let v: f64 = field
            .parse()
            .map_err(|_| err(i + 1, format!("{field:?} is not a number")))?;
        if !v.is_finite() {
            return Err(err(i + 1, format!("{field:?} is not finite")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Usage(format!("{}: no samples", path.display())));
    }
    Ok(values)
}
