//! Minimal well-formed regf image writer: one base block, one hive bin,
//! nk/vk cells with lf subkey lists. Used to plant UserAssist entries
//! (ROT13-obfuscated), uninstall keys and string values at known paths.

use crate::values::{ValueFactory, BASE_UNIX};
use crate::{CorpusError, CorpusSpec, GroundTruth, HivePlant, Recoverability, UserAssistPlant};
use d2wfp_core::artifact::{ArtifactKind, Category};
use d2wfp_core::registry::rot13;
use d2wfp_core::timestamp::{format_utc, normalize_timestamp, EpochKind, EPOCH_GAP_1601_SECS};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

const REG_SZ: u32 = 1;
const REG_BINARY: u32 = 3;
const NO_OFFSET: u32 = 0xffff_ffff;
const USERASSIST_COUNT_PATH: &str =
    "Software\\Microsoft\\Windows\\CurrentVersion\\Explorer\\UserAssist\\{CEBFF5CD-ACE2-4F4F-9178-9926F41749EA}\\Count";

#[derive(Debug, Default)]
struct KeyNode {
    values: Vec<(String, u32, Vec<u8>)>,
    children: BTreeMap<String, KeyNode>,
}

impl KeyNode {
    fn insert_value(&mut self, path: &str, name: &str, value_type: u32, data: Vec<u8>) {
        let mut node = self;
        for part in path.split('\\').filter(|p| !p.is_empty()) {
            node = node.children.entry(part.to_string()).or_default();
        }
        node.values.push((name.to_string(), value_type, data));
    }
}

struct CellArena {
    bytes: Vec<u8>,
    ticks: u64,
}

impl CellArena {
    /// Allocate one cell; returns its offset relative to the hbin space.
    fn alloc(&mut self, payload: &[u8]) -> u32 {
        let size = 4 + payload.len();
        let padded = (size + 7) & !7;
        let offset = 32 + self.bytes.len();
        self.bytes
            .extend_from_slice(&(-(padded as i32)).to_le_bytes());
        self.bytes.extend_from_slice(payload);
        self.bytes.resize(self.bytes.len() + (padded - size), 0);
        offset as u32
    }

    fn write_value(&mut self, name: &str, value_type: u32, data: &[u8]) -> u32 {
        let mut vk = Vec::new();
        vk.extend_from_slice(b"vk");
        vk.extend_from_slice(&(name.len() as u16).to_le_bytes());
        if data.len() <= 4 {
            vk.extend_from_slice(&((data.len() as u32) | 0x8000_0000).to_le_bytes());
            let mut inline = [0u8; 4];
            inline[..data.len()].copy_from_slice(data);
            vk.extend_from_slice(&inline);
        } else {
            let data_cell = self.alloc(data);
            vk.extend_from_slice(&(data.len() as u32).to_le_bytes());
            vk.extend_from_slice(&data_cell.to_le_bytes());
        }
        vk.extend_from_slice(&value_type.to_le_bytes());
        vk.extend_from_slice(&1u16.to_le_bytes()); // ASCII name
        vk.extend_from_slice(&0u16.to_le_bytes());
        vk.extend_from_slice(name.as_bytes());
        self.alloc(&vk)
    }

    fn write_key(&mut self, name: &str, node: &KeyNode, is_root: bool) -> u32 {
        let child_offsets: Vec<(String, u32)> = node
            .children
            .iter()
            .map(|(child_name, child)| (child_name.clone(), self.write_key(child_name, child, false)))
            .collect();
        let subkey_list = if child_offsets.is_empty() {
            NO_OFFSET
        } else {
            let mut lf = Vec::new();
            lf.extend_from_slice(b"lf");
            lf.extend_from_slice(&(child_offsets.len() as u16).to_le_bytes());
            for (child_name, offset) in &child_offsets {
                lf.extend_from_slice(&offset.to_le_bytes());
                let mut hint = [0u8; 4];
                let ascii = child_name.as_bytes();
                hint[..ascii.len().min(4)].copy_from_slice(&ascii[..ascii.len().min(4)]);
                lf.extend_from_slice(&hint);
            }
            self.alloc(&lf)
        };
        let value_offsets: Vec<u32> = node
            .values
            .iter()
            .map(|(vname, vtype, data)| self.write_value(vname, *vtype, data))
            .collect();
        let value_list = if value_offsets.is_empty() {
            NO_OFFSET
        } else {
            let list: Vec<u8> = value_offsets
                .iter()
                .flat_map(|o| o.to_le_bytes())
                .collect();
            self.alloc(&list)
        };
        let mut nk = Vec::new();
        nk.extend_from_slice(b"nk");
        nk.extend_from_slice(&(0x20u16 | if is_root { 0x04 } else { 0 }).to_le_bytes());
        nk.extend_from_slice(&self.ticks.to_le_bytes());
        nk.extend_from_slice(&0u32.to_le_bytes()); // access bits
        nk.extend_from_slice(&0u32.to_le_bytes()); // parent
        nk.extend_from_slice(&(node.children.len() as u32).to_le_bytes());
        nk.extend_from_slice(&0u32.to_le_bytes()); // volatile subkeys
        nk.extend_from_slice(&subkey_list.to_le_bytes());
        nk.extend_from_slice(&NO_OFFSET.to_le_bytes()); // volatile list
        nk.extend_from_slice(&(node.values.len() as u32).to_le_bytes());
        nk.extend_from_slice(&value_list.to_le_bytes());
        nk.extend_from_slice(&NO_OFFSET.to_le_bytes()); // security
        nk.extend_from_slice(&NO_OFFSET.to_le_bytes()); // class
        let max_name = node
            .children
            .keys()
            .map(|n| n.len() as u32 * 2)
            .max()
            .unwrap_or(0);
        nk.extend_from_slice(&max_name.to_le_bytes());
        nk.extend_from_slice(&0u32.to_le_bytes()); // max class
        let max_vname = node
            .values
            .iter()
            .map(|(n, _, _)| n.len() as u32 * 2)
            .max()
            .unwrap_or(0);
        nk.extend_from_slice(&max_vname.to_le_bytes());
        let max_vdata = node
            .values
            .iter()
            .map(|(_, _, d)| d.len() as u32)
            .max()
            .unwrap_or(0);
        nk.extend_from_slice(&max_vdata.to_le_bytes());
        nk.extend_from_slice(&0u32.to_le_bytes()); // workvar
        nk.extend_from_slice(&(name.len() as u16).to_le_bytes());
        nk.extend_from_slice(&0u16.to_le_bytes()); // class name length
        nk.extend_from_slice(name.as_bytes());
        self.alloc(&nk)
    }
}

fn reg_sz(text: &str) -> Vec<u8> {
    let mut out: Vec<u8> = text.encode_utf16().flat_map(|u| u.to_le_bytes()).collect();
    out.extend_from_slice(&[0, 0]);
    out
}

fn userassist_data(run_count: u32, last_run_ticks: u64) -> Vec<u8> {
    let mut data = vec![0u8; 72];
    data[4..8].copy_from_slice(&run_count.to_le_bytes());
    data[60..68].copy_from_slice(&last_run_ticks.to_le_bytes());
    data
}

fn unix_to_ticks(unix: i64) -> u64 {
    ((unix + EPOCH_GAP_1601_SECS) as u64) * 10_000_000
}

fn ticks_rfc3339(ticks: u64) -> Vec<String> {
    normalize_timestamp(ticks as i64, EpochKind::FiletimeTicks)
        .ok()
        .map(|t| vec![format_utc(&t.at)])
        .unwrap_or_default()
}

/// Default plants used when the spec lists none.
fn default_plants(factory: &ValueFactory) -> (Vec<UserAssistPlant>, Vec<HivePlant>) {
    let userassist = vec![UserAssistPlant {
        program: "Tor Browser\\firefox.exe".to_string(),
        run_count: 7,
        last_run_ticks: unix_to_ticks(BASE_UNIX + 7 * 86_400),
    }];
    let values = vec![
        HivePlant {
            key_path: "Software\\Microsoft\\Windows\\CurrentVersion\\Uninstall\\TorBrowser"
                .to_string(),
            value_name: "DisplayName".to_string(),
            string_data: "Tor Browser".to_string(),
        },
        HivePlant {
            key_path:
                "Software\\Classes\\Local Settings\\Software\\Microsoft\\Windows\\Shell\\MuiCache"
                    .to_string(),
            value_name: "C:\\Users\\user\\Desktop\\Tor Browser\\Browser\\firefox.exe.FriendlyAppName"
                .to_string(),
            string_data: "Tor Browser".to_string(),
        },
        // the first browsed URL also appears in configuration data, so the
        // same value exists in three locations
        HivePlant {
            key_path: "Software\\Mozilla\\Firefox\\SessionData".to_string(),
            value_name: "LastVisitedPage".to_string(),
            string_data: factory.history_url(0),
        },
    ];
    (userassist, values)
}

/// Write the hive image and record the planted indicators as ground truth.
pub fn generate_hive(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    path: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let (userassist, hive_values) = if spec.hive_userassist.is_empty() && spec.hive_values.is_empty()
    {
        default_plants(factory)
    } else {
        (spec.hive_userassist.clone(), spec.hive_values.clone())
    };

    let mut root = KeyNode::default();
    // benign noise so indicator scans run over more than plants
    root.insert_value(
        "Software\\Vendor\\SampleApp",
        "Setting",
        REG_SZ,
        reg_sz("enabled"),
    );
    root.insert_value(
        "Software\\Microsoft\\Windows\\CurrentVersion\\Run",
        "Updater",
        REG_SZ,
        reg_sz("C:\\Program Files\\Updater\\updater.exe"),
    );
    for plant in &userassist {
        root.insert_value(
            USERASSIST_COUNT_PATH,
            &rot13(&plant.program),
            REG_BINARY,
            userassist_data(plant.run_count, plant.last_run_ticks),
        );
        truth.push(
            Recoverability::Hive,
            Category::SecurityLogins,
            ArtifactKind::UsageSession,
            &plant.program,
            &plant.program,
            ticks_rfc3339(plant.last_run_ticks),
        );
    }
    for plant in &hive_values {
        root.insert_value(
            &plant.key_path,
            &plant.value_name,
            REG_SZ,
            reg_sz(&plant.string_data),
        );
        truth.push(
            Recoverability::Hive,
            Category::SecurityLogins,
            ArtifactKind::UsageSession,
            &plant.string_data,
            &plant.string_data,
            vec![],
        );
    }

    let mut arena = CellArena {
        bytes: Vec::new(),
        ticks: unix_to_ticks(BASE_UNIX),
    };
    let root_offset = arena.write_key("ROOT", &root, true);

    let hbin_payload = 32 + arena.bytes.len();
    let hbin_size = hbin_payload.div_ceil(4096) * 4096;
    let mut image = vec![0u8; 4096 + hbin_size];

    // base block
    image[0..4].copy_from_slice(b"regf");
    image[4..8].copy_from_slice(&1u32.to_le_bytes()); // primary sequence
    image[8..12].copy_from_slice(&1u32.to_le_bytes()); // secondary sequence
    image[12..20].copy_from_slice(&arena.ticks.to_le_bytes());
    image[20..24].copy_from_slice(&1u32.to_le_bytes()); // major
    image[24..28].copy_from_slice(&5u32.to_le_bytes()); // minor
    image[28..32].copy_from_slice(&0u32.to_le_bytes()); // type: primary
    image[32..36].copy_from_slice(&1u32.to_le_bytes()); // format
    image[36..40].copy_from_slice(&root_offset.to_le_bytes());
    image[40..44].copy_from_slice(&(hbin_size as u32).to_le_bytes());
    image[44..48].copy_from_slice(&1u32.to_le_bytes()); // clustering factor
    for (i, unit) in "ntuser.dat".encode_utf16().enumerate().take(32) {
        image[48 + i * 2..50 + i * 2].copy_from_slice(&unit.to_le_bytes());
    }
    let mut checksum = 0u32;
    for word in image[..508].chunks_exact(4) {
        checksum ^= u32::from_le_bytes(word.try_into().unwrap());
    }
    image[508..512].copy_from_slice(&checksum.to_le_bytes());

    // hive bin header
    image[4096..4100].copy_from_slice(b"hbin");
    image[4100..4104].copy_from_slice(&0u32.to_le_bytes()); // offset from first hbin
    image[4104..4108].copy_from_slice(&(hbin_size as u32).to_le_bytes());
    image[4108 + 8..4108 + 16].copy_from_slice(&arena.ticks.to_le_bytes());
    image[4128..4128 + arena.bytes.len()].copy_from_slice(&arena.bytes);

    fs::write(path, image)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use d2wfp_core::registry::{find_tor_indicators, parse_hive};

    #[test]
    fn generated_hive_parses_and_yields_indicators() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("NTUSER.DAT");
        let spec = CorpusSpec::default();
        let factory = ValueFactory::new(spec.seed);
        let mut truth = GroundTruth::default();
        generate_hive(&spec, &factory, &path, &mut truth).unwrap();

        let bytes = fs::read(&path).unwrap();
        let parsed = parse_hive(&bytes).unwrap();
        assert_eq!(parsed.warnings, 0);
        let indicators = find_tor_indicators(&parsed.root);
        // userassist with decoded name, count and time
        let ua = indicators
            .iter()
            .find(|i| i.source.label() == "userassist")
            .expect("userassist indicator");
        assert_eq!(ua.program, "Tor Browser\\firefox.exe");
        assert_eq!(ua.run_count, Some(7));
        assert!(ua.last_run.is_some());
        // uninstall display name
        assert!(indicators.iter().any(|i| i.source.label() == "uninstall-key"));
        // muicache
        assert!(indicators.iter().any(|i| i.source.label() == "mui-cache"));
        // the planted URL surfaces from configuration data
        assert!(indicators.iter().any(|i| i.program == factory.history_url(0)));
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec::default();
        let factory = ValueFactory::new(spec.seed);
        let mut t1 = GroundTruth::default();
        let mut t2 = GroundTruth::default();
        let p1 = dir.path().join("a.dat");
        let p2 = dir.path().join("b.dat");
        generate_hive(&spec, &factory, &p1, &mut t1).unwrap();
        generate_hive(&spec, &factory, &p2, &mut t2).unwrap();
        assert_eq!(fs::read(p1).unwrap(), fs::read(p2).unwrap());
        assert_eq!(t1, t2);
    }

    #[test]
    fn empty_hive_has_root_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.dat");
        let spec = CorpusSpec {
            hive_userassist: vec![UserAssistPlant {
                program: "irrelevant".into(),
                run_count: 0,
                last_run_ticks: 0,
            }],
            ..Default::default()
        };
        // a spec with one non-tor plant still parses; indicators skip it
        let factory = ValueFactory::new(1);
        let mut truth = GroundTruth::default();
        generate_hive(&spec, &factory, &path, &mut truth).unwrap();
        let parsed = parse_hive(&fs::read(&path).unwrap()).unwrap();
        let indicators = find_tor_indicators(&parsed.root);
        assert!(indicators
            .iter()
            .all(|i| i.source.label() != "userassist" || i.program.to_lowercase().contains("tor")));
    }
}
