//! Line-oriented configuration: `key = value` pairs, `#` comments, unknown
//! keys rejected. The corpus generator reuses the same syntax for its spec
//! files.

use crate::report::ReportFormat;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{0}`: {1}")]
    InvalidValue(&'static str, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Plausibility threshold for carved records, 0..=1.
    pub threshold: f64,
    /// Deduplication bucket width in seconds.
    pub dedup_bucket_secs: i64,
    /// Context window radius for scan hits, bytes.
    pub scan_radius: usize,
    /// Chunk size for streaming scans, bytes.
    pub chunk_size: usize,
    /// Report formats to emit.
    pub formats: Vec<ReportFormat>,
    /// Keyword patterns for the scanner.
    pub keywords: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            threshold: 0.5,
            dedup_bucket_secs: 1,
            scan_radius: 64,
            chunk_size: 4 * 1024 * 1024,
            formats: vec![ReportFormat::Text, ReportFormat::Csv, ReportFormat::Html],
            keywords: vec!["torbrowser".to_string(), "hidden wiki".to_string()],
        }
    }
}

/// Split config text into (key, value) pairs, validating syntax only.
pub fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(number + 1))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax(number + 1));
        }
        pairs.push((key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut config = Config::default();
        let mut keywords_set = false;
        for (key, value) in parse_kv_lines(text)? {
            match key.as_str() {
                "threshold" => {
                    let t: f64 = value
                        .parse()
                        .map_err(|_| ConfigError::InvalidValue("threshold", value.clone()))?;
                    if !(0.0..=1.0).contains(&t) {
                        return Err(ConfigError::InvalidValue("threshold", value));
                    }
                    config.threshold = t;
                }
                "dedup_bucket_secs" => {
                    let b: i64 = value
                        .parse()
                        .map_err(|_| ConfigError::InvalidValue("dedup_bucket_secs", value.clone()))?;
                    if b < 1 {
                        return Err(ConfigError::InvalidValue("dedup_bucket_secs", value));
                    }
                    config.dedup_bucket_secs = b;
                }
                "scan_radius" => {
                    config.scan_radius = value
                        .parse()
                        .map_err(|_| ConfigError::InvalidValue("scan_radius", value.clone()))?;
                }
                "chunk_size" => {
                    let c: usize = value
                        .parse()
                        .map_err(|_| ConfigError::InvalidValue("chunk_size", value.clone()))?;
                    if c < 65536 {
                        return Err(ConfigError::InvalidValue("chunk_size", value));
                    }
                    config.chunk_size = c;
                }
                "formats" => {
                    let mut formats = Vec::new();
                    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        formats.push(
                            ReportFormat::parse(part)
                                .ok_or_else(|| ConfigError::InvalidValue("formats", part.to_string()))?,
                        );
                    }
                    if formats.is_empty() {
                        return Err(ConfigError::InvalidValue("formats", value));
                    }
                    config.formats = formats;
                }
                "keyword" => {
                    if !keywords_set {
                        config.keywords.clear();
                        keywords_set = true;
                    }
                    config.keywords.push(value);
                }
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Config, ConfigError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Config::parse(&text),
            Err(_) => Ok(Config::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::default();
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.dedup_bucket_secs, 1);
        assert_eq!(c.scan_radius, 64);
    }

    #[test]
    fn parse_overrides() {
        let c = Config::parse(
            "# comment\nthreshold = 0.7\ndedup_bucket_secs = 2\nformats = txt,csv\nkeyword = wiki\nkeyword = market\n",
        )
        .unwrap();
        assert_eq!(c.threshold, 0.7);
        assert_eq!(c.dedup_bucket_secs, 2);
        assert_eq!(c.formats, vec![ReportFormat::Text, ReportFormat::Csv]);
        assert_eq!(c.keywords, vec!["wiki", "market"]);
    }

    #[test]
    fn unknown_key_rejected() {
        assert_eq!(
            Config::parse("bogus = 1"),
            Err(ConfigError::UnknownKey("bogus".into()))
        );
    }

    #[test]
    fn out_of_range_threshold_rejected() {
        assert!(Config::parse("threshold = 1.5").is_err());
        assert!(Config::parse("threshold = -0.1").is_err());
    }

    #[test]
    fn syntax_error_carries_line() {
        assert_eq!(Config::parse("\n\nnonsense"), Err(ConfigError::Syntax(3)));
    }
}
