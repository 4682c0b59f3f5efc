//! Ground-truth evidence synthesis: browser profiles written through the
//! reference database engine, registry hive images, and memory dumps with
//! plants at known offsets. Every plant is recorded in a manifest together
//! with its expected recoverability under the chosen anti-forensics arm, so
//! recall and carving claims stay measurable.

mod hive;
mod memory;
mod profile;
mod values;

pub use hive::generate_hive;
pub use memory::generate_memory_dump;
pub use profile::{apply_antiforensics, generate_profile};
pub use values::ValueFactory;

use d2wfp_core::artifact::{ArtifactKind, Category};
use d2wfp_core::config::parse_kv_lines;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("spec: {0}")]
    Spec(String),
    #[error("database engine: {0}")]
    Engine(#[from] rusqlite::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntiForensics {
    None,
    DeleteRows,
    Vacuum,
}

impl AntiForensics {
    pub fn label(&self) -> &'static str {
        match self {
            AntiForensics::None => "none",
            AntiForensics::DeleteRows => "delete-rows",
            AntiForensics::Vacuum => "vacuum",
        }
    }

    pub fn parse(s: &str) -> Option<AntiForensics> {
        match s {
            "none" => Some(AntiForensics::None),
            "delete-rows" => Some(AntiForensics::DeleteRows),
            "vacuum" => Some(AntiForensics::Vacuum),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantEncoding {
    Ascii,
    Utf16Le,
}

#[derive(Debug, Clone)]
pub struct MemoryPlant {
    pub offset: u64,
    pub encoding: PlantEncoding,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct UserAssistPlant {
    /// Decoded program name; stored ROT13-obfuscated.
    pub program: String,
    pub run_count: u32,
    pub last_run_ticks: u64,
}

#[derive(Debug, Clone)]
pub struct HivePlant {
    pub key_path: String,
    pub value_name: String,
    pub string_data: String,
}

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub seed: u64,
    pub history: u32,
    pub bookmarks: u32,
    pub cookies: u32,
    pub forms: u32,
    pub downloads: u32,
    pub logins: u32,
    pub cache_entries: u32,
    pub anti_forensics: AntiForensics,
    /// Fraction of sqlite-backed rows the anti-forensics arm deletes.
    pub delete_fraction: f64,
    pub memory_size: u64,
    pub memory_plants: Vec<MemoryPlant>,
    pub hive_userassist: Vec<UserAssistPlant>,
    pub hive_values: Vec<HivePlant>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 1,
            history: 20,
            bookmarks: 5,
            cookies: 10,
            forms: 10,
            downloads: 5,
            logins: 5,
            cache_entries: 10,
            anti_forensics: AntiForensics::None,
            delete_fraction: 0.4,
            memory_size: 1 << 20,
            memory_plants: Vec::new(),
            hive_userassist: Vec::new(),
            hive_values: Vec::new(),
        }
    }
}

impl CorpusSpec {
    /// Parse the line-oriented spec format (same syntax as the tool config).
    pub fn parse(text: &str) -> Result<CorpusSpec, CorpusError> {
        let mut spec = CorpusSpec::default();
        let pairs = parse_kv_lines(text).map_err(|e| CorpusError::Spec(e.to_string()))?;
        let int = |v: &str, key: &str| {
            v.parse::<u64>()
                .map_err(|_| CorpusError::Spec(format!("bad integer for {key}: {v}")))
        };
        for (key, value) in pairs {
            match key.as_str() {
                "seed" => spec.seed = int(&value, "seed")?,
                "history" => spec.history = int(&value, "history")? as u32,
                "bookmarks" => spec.bookmarks = int(&value, "bookmarks")? as u32,
                "cookies" => spec.cookies = int(&value, "cookies")? as u32,
                "forms" => spec.forms = int(&value, "forms")? as u32,
                "downloads" => spec.downloads = int(&value, "downloads")? as u32,
                "logins" => spec.logins = int(&value, "logins")? as u32,
                "cache_entries" => spec.cache_entries = int(&value, "cache_entries")? as u32,
                "memory_size" => spec.memory_size = int(&value, "memory_size")?,
                "anti_forensics" => {
                    spec.anti_forensics = AntiForensics::parse(&value)
                        .ok_or_else(|| CorpusError::Spec(format!("bad arm: {value}")))?;
                }
                "delete_fraction" => {
                    let f: f64 = value
                        .parse()
                        .map_err(|_| CorpusError::Spec(format!("bad fraction: {value}")))?;
                    if !(0.0..=1.0).contains(&f) {
                        return Err(CorpusError::Spec(format!("fraction out of range: {value}")));
                    }
                    spec.delete_fraction = f;
                }
                "memory_plant" => {
                    // "<offset> <ascii|utf16le> <text>"
                    let mut parts = value.splitn(3, ' ');
                    let offset = parts
                        .next()
                        .and_then(|p| p.parse().ok())
                        .ok_or_else(|| CorpusError::Spec(format!("bad plant: {value}")))?;
                    let encoding = match parts.next() {
                        Some("ascii") => PlantEncoding::Ascii,
                        Some("utf16le") => PlantEncoding::Utf16Le,
                        _ => return Err(CorpusError::Spec(format!("bad plant encoding: {value}"))),
                    };
                    let text = parts
                        .next()
                        .filter(|t| !t.is_empty())
                        .ok_or_else(|| CorpusError::Spec(format!("bad plant text: {value}")))?
                        .to_string();
                    spec.memory_plants.push(MemoryPlant {
                        offset,
                        encoding,
                        text,
                    });
                }
                "hive_userassist" => {
                    // "<program>|<count>|<filetime-ticks>"
                    let parts: Vec<&str> = value.split('|').collect();
                    if parts.len() != 3 {
                        return Err(CorpusError::Spec(format!("bad userassist plant: {value}")));
                    }
                    spec.hive_userassist.push(UserAssistPlant {
                        program: parts[0].to_string(),
                        run_count: parts[1]
                            .parse()
                            .map_err(|_| CorpusError::Spec(format!("bad count: {value}")))?,
                        last_run_ticks: parts[2]
                            .parse()
                            .map_err(|_| CorpusError::Spec(format!("bad ticks: {value}")))?,
                    });
                }
                "hive_value" => {
                    let parts: Vec<&str> = value.split('|').collect();
                    if parts.len() != 3 {
                        return Err(CorpusError::Spec(format!("bad hive value: {value}")));
                    }
                    spec.hive_values.push(HivePlant {
                        key_path: parts[0].to_string(),
                        value_name: parts[1].to_string(),
                        string_data: parts[2].to_string(),
                    });
                }
                other => return Err(CorpusError::Spec(format!("unknown key `{other}`"))),
            }
        }
        Ok(spec)
    }
}

/// What the pipeline is expected to do with one planted record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recoverability {
    /// Live row, extractors must find it.
    Live,
    /// Deleted without compaction: the carver should recover it.
    Carvable,
    /// Deleted and compacted away: nothing may be recovered.
    Unrecoverable,
    /// Only present in the memory image.
    Memory,
    /// Only present in the registry hive.
    Hive,
}

impl Recoverability {
    pub fn label(&self) -> &'static str {
        match self {
            Recoverability::Live => "live",
            Recoverability::Carvable => "carvable",
            Recoverability::Unrecoverable => "unrecoverable",
            Recoverability::Memory => "memory",
            Recoverability::Hive => "hive",
        }
    }

    pub fn parse(s: &str) -> Option<Recoverability> {
        [
            Recoverability::Live,
            Recoverability::Carvable,
            Recoverability::Unrecoverable,
            Recoverability::Memory,
            Recoverability::Hive,
        ]
        .iter()
        .copied()
        .find(|r| r.label() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntry {
    pub expect: Recoverability,
    pub category: Category,
    pub kind: ArtifactKind,
    /// Value a live artifact must carry.
    pub value: String,
    /// Value a carved artifact is expected to contain (differs for rows
    /// whose live value joins several columns).
    pub carve_value: String,
    pub timestamps: Vec<String>,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct GroundTruth {
    pub entries: Vec<GroundTruthEntry>,
}

impl GroundTruth {
    pub fn push(
        &mut self,
        expect: Recoverability,
        category: Category,
        kind: ArtifactKind,
        value: impl Into<String>,
        carve_value: impl Into<String>,
        timestamps: Vec<String>,
    ) {
        self.entries.push(GroundTruthEntry {
            expect,
            category,
            kind,
            value: value.into(),
            carve_value: carve_value.into(),
            timestamps,
        });
    }

    pub fn count(&self, expect: Recoverability) -> usize {
        self.entries.iter().filter(|e| e.expect == expect).count()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("expect\tcategory\tkind\tvalue\tcarve_value\ttimestamps\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                e.expect.label(),
                e.category.label(),
                e.kind.label(),
                e.value,
                e.carve_value,
                e.timestamps.join(";")
            ));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<GroundTruth, CorpusError> {
        let mut truth = GroundTruth::default();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 6 {
                return Err(CorpusError::Spec(format!("truth line {}", i + 1)));
            }
            let bad = || CorpusError::Spec(format!("truth line {}", i + 1));
            truth.entries.push(GroundTruthEntry {
                expect: Recoverability::parse(fields[0]).ok_or_else(bad)?,
                category: Category::parse(fields[1]).ok_or_else(bad)?,
                kind: ArtifactKind::parse(fields[2]).ok_or_else(bad)?,
                value: fields[3].to_string(),
                carve_value: fields[4].to_string(),
                timestamps: fields[5]
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }
        Ok(truth)
    }
}

/// Paths produced by a full corpus generation.
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub root: PathBuf,
    pub profile_dir: PathBuf,
    pub memory_dump: PathBuf,
    pub hive: PathBuf,
    pub truth: PathBuf,
}

impl CorpusLayout {
    pub fn under(root: &Path) -> CorpusLayout {
        CorpusLayout {
            root: root.to_path_buf(),
            profile_dir: root.join("profile"),
            memory_dump: root.join("memory.dump"),
            hive: root.join("NTUSER.DAT"),
            truth: root.join("truth.tsv"),
        }
    }
}

/// Generate profile, memory dump and hive under one directory, apply the
/// anti-forensics arm, and write the combined manifest.
pub fn generate_corpus(
    spec: &CorpusSpec,
    root: &Path,
) -> Result<(CorpusLayout, GroundTruth), CorpusError> {
    let layout = CorpusLayout::under(root);
    fs::create_dir_all(&layout.profile_dir)?;
    let mut truth = GroundTruth::default();

    let factory = ValueFactory::new(spec.seed);
    generate_profile(spec, &factory, &layout.profile_dir, &mut truth)?;
    apply_antiforensics(spec, &factory, &layout.profile_dir, &mut truth)?;
    generate_memory_dump(spec, &factory, &layout.memory_dump, &mut truth)?;
    generate_hive(spec, &factory, &layout.hive, &mut truth)?;

    fs::write(&layout.truth, truth.to_tsv())?;
    Ok((layout, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parse_round_trip() {
        let spec = CorpusSpec::parse(
            "seed = 42\nhistory = 100\nanti_forensics = delete-rows\n\
             memory_plant = 4096 ascii http://example.onion/x\n\
             hive_userassist = Tor Browser\\firefox.exe|7|132539328000000000\n",
        )
        .unwrap();
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.history, 100);
        assert_eq!(spec.anti_forensics, AntiForensics::DeleteRows);
        assert_eq!(spec.memory_plants.len(), 1);
        assert_eq!(spec.memory_plants[0].offset, 4096);
        assert_eq!(spec.hive_userassist[0].run_count, 7);
    }

    #[test]
    fn unknown_spec_key_rejected() {
        assert!(CorpusSpec::parse("bogus = 1").is_err());
    }

    #[test]
    fn truth_tsv_round_trip() {
        let mut truth = GroundTruth::default();
        truth.push(
            Recoverability::Live,
            Category::BrowsingHistory,
            ArtifactKind::Urls,
            "http://a.test/",
            "http://a.test/",
            vec!["2021-06-01T00:00:00.000000Z".into()],
        );
        truth.push(
            Recoverability::Carvable,
            Category::CacheTemp,
            ArtifactKind::Cookies,
            "host|name",
            "host|name",
            vec![],
        );
        let reloaded = GroundTruth::from_tsv(&truth.to_tsv()).unwrap();
        assert_eq!(reloaded, truth);
    }
}
