//! Memory-dump synthesis: a zero-filled image with byte plants at exact
//! offsets, in ASCII or UTF-16LE.

use crate::values::ValueFactory;
use crate::{CorpusError, CorpusSpec, GroundTruth, MemoryPlant, PlantEncoding, Recoverability};
use d2wfp_core::artifact::{ArtifactKind, Category};
use std::fs;
use std::path::Path;

fn encode(text: &str, encoding: PlantEncoding) -> Vec<u8> {
    match encoding {
        PlantEncoding::Ascii => text.as_bytes().to_vec(),
        PlantEncoding::Utf16Le => text
            .encode_utf16()
            .flat_map(|u| u.to_le_bytes())
            .collect(),
    }
}

/// Plants used when the spec lists none: onion and clear-web URLs, an email
/// address, a search query and a keyword, spread across the image in both
/// encodings. The first history URL is included so the same value exists in
/// the profile, the dump and the hive.
pub fn default_plants(spec: &CorpusSpec, factory: &ValueFactory) -> Vec<MemoryPlant> {
    let size = spec.memory_size;
    let at = |frac_num: u64| (size * frac_num / 16).max(64);
    vec![
        MemoryPlant {
            offset: 4096.min(size / 2),
            encoding: PlantEncoding::Ascii,
            text: format!("http://{}.onion/ram/landing", factory.onion56(50_000)),
        },
        MemoryPlant {
            offset: at(3),
            encoding: PlantEncoding::Ascii,
            text: factory.history_url(0),
        },
        MemoryPlant {
            offset: at(5),
            encoding: PlantEncoding::Utf16Le,
            text: format!("wiki search q=item-{}", factory.hexstr("ramq", 0, 6)),
        },
        MemoryPlant {
            offset: at(7),
            encoding: PlantEncoding::Ascii,
            text: format!("operator{}@relay.example", factory.hexstr("rammail", 0, 6)),
        },
        MemoryPlant {
            offset: at(9),
            encoding: PlantEncoding::Utf16Le,
            text: format!("https://panel-{}.example/login?query=unlock", factory.hexstr("ramurl", 0, 8)),
        },
        MemoryPlant {
            offset: at(11),
            encoding: PlantEncoding::Ascii,
            text: "visited the hidden wiki index".to_string(),
        },
    ]
}

fn kind_for_plant(text: &str) -> (ArtifactKind, Category) {
    if text.contains("://") || text.contains(".onion") {
        (ArtifactKind::Urls, Category::BrowsingHistory)
    } else if text.contains('@') {
        (ArtifactKind::EmailAddresses, Category::CacheTemp)
    } else if text.contains("q=") || text.contains("query=") {
        (ArtifactKind::SearchQueries, Category::SqliteDbForm)
    } else {
        (ArtifactKind::WebsiteContent, Category::CacheTemp)
    }
}

/// Write the dump and record each plant as memory-resident ground truth.
pub fn generate_memory_dump(
    spec: &CorpusSpec,
    factory: &ValueFactory,
    path: &Path,
    truth: &mut GroundTruth,
) -> Result<(), CorpusError> {
    let plants = if spec.memory_plants.is_empty() {
        default_plants(spec, factory)
    } else {
        spec.memory_plants.clone()
    };
    let mut image = vec![0u8; spec.memory_size as usize];
    for plant in &plants {
        let bytes = encode(&plant.text, plant.encoding);
        let start = plant.offset as usize;
        let end = start + bytes.len();
        if end > image.len() {
            return Err(CorpusError::Spec(format!(
                "plant at {start} overruns image of {} bytes",
                image.len()
            )));
        }
        image[start..end].copy_from_slice(&bytes);
        let (kind, category) = kind_for_plant(&plant.text);
        truth.push(
            Recoverability::Memory,
            category,
            kind,
            &plant.text,
            &plant.text,
            vec![],
        );
    }
    fs::write(path, image)?;
    Ok(())
}
