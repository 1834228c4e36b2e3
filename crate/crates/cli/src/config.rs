//! Config file loading with diagnostics that point at the offending field.

use ris_atomic::sim::SimConfig;

/// A rejected configuration: the dotted field, its line when known, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

/// Parses and validates a TOML config. Budget refusals are not config
/// errors and are left for the caller to detect via [`SimConfig::validate`].
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        ConfigError {
            field: missing_field(e.message()),
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    match cfg.validate() {
        Err(ris_atomic::Error::Config { field, message }) => Err(ConfigError {
            line: field_line(text, &field),
            field: Some(field),
            message,
        }),
        _ => Ok(cfg),
    }
}

/// Defaults for the paper-scale system, as a commented TOML document.
pub fn dump_defaults() -> String {
    let body = toml::to_string_pretty(&SimConfig::paper_default()).expect("defaults serialize");
    format!(
        "# ris-atomic configuration. Every section except [system] may be omitted.\n\
         # system.M: vapor cells, system.N: RIS elements, system.K: users, system.order: PAM order.\n\n{body}"
    )
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn missing_field(message: &str) -> Option<String> {
    let rest = message.split("missing field `").nth(1)?;
    Some(rest.split('`').next()?.to_string())
}

/// 1-based line of `section.key` in `text`, if the key is written there.
/// A bare section name matches its header.
fn field_line(text: &str, dotted: &str) -> Option<usize> {
    let (section, key) = match dotted.rsplit_once('.') {
        Some((s, k)) => (s, Some(k)),
        None => (dotted, None),
    };
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = header.trim().to_string();
            if key.is_none() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if let (Some(key), true) = (key, current == section) {
            let name = line.split('=').next().unwrap_or("").trim().trim_matches('"');
            if line.contains('=') && name == key {
                return Some(i + 1);
            }
        }
    }
    None
}
