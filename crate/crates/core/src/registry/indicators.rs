//! TOR installation/execution indicators: ROT13-decoded UserAssist entries,
//! Uninstall display names, and substring/URL hits in key and value data.

use super::hive::{HiveKey, HiveValue};
use chrono::{DateTime, Utc};
use regex::Regex;
use std::sync::OnceLock;

pub use crate::timestamp::filetime_to_utc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorSource {
    UserAssist,
    UninstallKey,
    MuiCache,
    PathHit,
}

impl IndicatorSource {
    pub fn label(&self) -> &'static str {
        match self {
            IndicatorSource::UserAssist => "userassist",
            IndicatorSource::UninstallKey => "uninstall-key",
            IndicatorSource::MuiCache => "mui-cache",
            IndicatorSource::PathHit => "path-hit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecutionIndicator {
    pub source: IndicatorSource,
    pub program: String,
    pub run_count: Option<u32>,
    pub last_run: Option<DateTime<Utc>>,
    pub key_path: String,
}

/// Alphabetic rotation by 13; self-inverse, non-letters unchanged.
pub fn rot13(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            'a'..='z' => (((c as u8 - b'a') + 13) % 26 + b'a') as char,
            'A'..='Z' => (((c as u8 - b'A') + 13) % 26 + b'A') as char,
            other => other,
        })
        .collect()
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)https?://[a-z0-9.\-]{1,253}(?::[0-9]{1,5})?(?:/[^\s'<>"]{0,2048})?"#)
            .unwrap()
    })
}

/// Scan a parsed hive for TOR indicators: (a) UserAssist Count values with
/// ROT13 names, run count at offset 4 and last-run FILETIME at offset 60;
/// (b) Uninstall display names; (c) "Tor Browser" substrings and onion/web
/// URLs anywhere in key names or value data.
pub fn find_tor_indicators(root: &HiveKey) -> Vec<ExecutionIndicator> {
    let mut out = Vec::new();
    root.walk(&mut |key| {
        let path_lower = key.path.to_ascii_lowercase();
        if path_lower.contains("\\userassist\\") && path_lower.ends_with("\\count") {
            for value in &key.values {
                let program = rot13(&value.name);
                if !is_tor_name(&program) {
                    continue;
                }
                let run_count = value
                    .data
                    .get(4..8)
                    .map(|b| u32::from_le_bytes(b.try_into().unwrap()));
                let last_run = value
                    .data
                    .get(60..68)
                    .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
                    .filter(|t| *t > 0)
                    .and_then(|t| filetime_to_utc(t).ok())
                    .map(|t| t.at);
                if run_count.is_none() && last_run.is_none() {
                    continue;
                }
                out.push(ExecutionIndicator {
                    source: IndicatorSource::UserAssist,
                    program,
                    run_count,
                    last_run,
                    key_path: key.path.clone(),
                });
            }
            return;
        }
        if path_lower.contains("\\uninstall\\") {
            if let Some(display) = key.value("DisplayName").and_then(HiveValue::as_string) {
                if is_tor_name(&display) {
                    out.push(ExecutionIndicator {
                        source: IndicatorSource::UninstallKey,
                        program: display,
                        run_count: None,
                        last_run: key.last_written.map(|t| t.at),
                        key_path: key.path.clone(),
                    });
                    return;
                }
            }
        }
        // substring / URL scan over key name and value data
        let source = if path_lower.ends_with("\\muicache") {
            IndicatorSource::MuiCache
        } else {
            IndicatorSource::PathHit
        };
        for text in value_texts(key) {
            if is_tor_name(&text) {
                out.push(ExecutionIndicator {
                    source,
                    program: text.clone(),
                    run_count: None,
                    last_run: key.last_written.map(|t| t.at),
                    key_path: key.path.clone(),
                });
            } else if let Some(m) = url_regex().find(&text) {
                out.push(ExecutionIndicator {
                    source,
                    program: m.as_str().to_string(),
                    run_count: None,
                    last_run: key.last_written.map(|t| t.at),
                    key_path: key.path.clone(),
                });
            }
        }
        if is_tor_name(&key.name) {
            out.push(ExecutionIndicator {
                source,
                program: key.name.clone(),
                run_count: None,
                last_run: key.last_written.map(|t| t.at),
                key_path: key.path.clone(),
            });
        }
    });
    out
}

fn is_tor_name(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    for needle in ["tor browser", "torbrowser", "tor-browser"] {
        let mut from = 0;
        while let Some(pos) = lower[from..].find(needle) {
            let abs = from + pos;
            if abs == 0 || !lower.as_bytes()[abs - 1].is_ascii_alphanumeric() {
                return true;
            }
            from = abs + 1;
        }
    }
    false
}

/// Printable strings carried by a key's values: UTF-16LE for string types,
/// plus an ASCII reading of binary data.
fn value_texts(key: &HiveKey) -> Vec<String> {
    let mut texts = Vec::new();
    for value in &key.values {
        if let Some(s) = value.as_string() {
            texts.push(s);
            continue;
        }
        if value.data.is_empty() {
            continue;
        }
        // UTF-16LE reading of binary data
        if value.data.len() % 2 == 0 {
            let units: Vec<u16> = value
                .data
                .chunks_exact(2)
                .map(|p| u16::from_le_bytes([p[0], p[1]]))
                .take_while(|u| *u != 0)
                .collect();
            if !units.is_empty() && units.iter().all(|u| (0x20..0x7f).contains(u)) {
                if let Ok(s) = String::from_utf16(&units) {
                    texts.push(s);
                    continue;
                }
            }
        }
        // ASCII reading
        if value.data.iter().all(|b| (0x20..0x7f).contains(b) || *b == 0) {
            let s: String = value
                .data
                .iter()
                .take_while(|b| **b != 0)
                .map(|b| *b as char)
                .collect();
            if !s.is_empty() {
                texts.push(s);
            }
        }
    }
    texts
}

/// Set difference of (key path, value name) pairs between two hives.
/// Returns pairs present in `after` but not in `before`.
pub fn diff_hives(before: &HiveKey, after: &HiveKey) -> Vec<(String, String)> {
    let collect = |root: &HiveKey| {
        let mut set = std::collections::BTreeSet::new();
        root.walk(&mut |key| {
            for v in &key.values {
                set.insert((key.path.clone(), v.name.clone()));
            }
        });
        set
    };
    let old = collect(before);
    collect(after).into_iter().filter(|p| !old.contains(p)).collect()
}
