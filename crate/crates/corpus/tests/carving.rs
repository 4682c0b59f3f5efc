//! Carving behavior on generated profiles: deleted rows must be
//! recoverable before compaction and gone after it.

use d2wfp_core::sqlite::{
    carve_freelist, carve_unallocated, read_schema, shapes_of, walk_btree, Database, LiveIndex,
};
use d2wfp_corpus::{
    apply_antiforensics, generate_profile, AntiForensics, CorpusSpec, GroundTruth, Recoverability,
    ValueFactory,
};
use std::path::Path;

fn generate(spec: &CorpusSpec, dir: &Path) -> GroundTruth {
    let factory = ValueFactory::new(spec.seed);
    let mut truth = GroundTruth::default();
    generate_profile(spec, &factory, dir, &mut truth).unwrap();
    apply_antiforensics(spec, &factory, dir, &mut truth).unwrap();
    truth
}

fn carve_all_texts(path: &Path, threshold: f64) -> Vec<String> {
    let db = Database::open(path).unwrap();
    let tables = read_schema(&db).unwrap();
    let mut live = LiveIndex::default();
    for t in &tables {
        for row in walk_btree(&db, t.root_page, &t.name).unwrap() {
            live.add_row(&row.columns);
        }
    }
    let shapes = shapes_of(&tables);
    let mut texts = Vec::new();
    for report in [
        carve_freelist(&db, &live, &shapes, threshold),
        carve_unallocated(&db, &live, &shapes, threshold),
    ] {
        for rec in report.records {
            for col in &rec.columns {
                if let Some(s) = col.as_text() {
                    texts.push(s.to_string());
                }
            }
        }
    }
    texts
}

#[test]
fn delete_rows_arm_recovers_at_least_90_percent() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 11,
        history: 120,
        bookmarks: 30,
        cookies: 100,
        forms: 60,
        downloads: 30,
        anti_forensics: AntiForensics::DeleteRows,
        ..Default::default()
    };
    let truth = generate(&spec, dir.path());
    let deleted: Vec<_> = truth
        .entries
        .iter()
        .filter(|e| e.expect == Recoverability::Carvable)
        .collect();
    assert!(
        deleted.len() > 50,
        "arm deleted too few rows to measure: {}",
        deleted.len()
    );

    let mut texts = Vec::new();
    for store in ["places.sqlite", "cookies.sqlite", "formhistory.sqlite"] {
        texts.extend(carve_all_texts(&dir.path().join(store), 0.5));
    }
    let recovered = deleted
        .iter()
        .filter(|e| texts.iter().any(|t| t.contains(&e.carve_value)))
        .count();
    let recall = recovered as f64 / deleted.len() as f64;
    assert!(
        recall >= 0.9,
        "carving recall {recall:.3} ({recovered}/{})",
        deleted.len()
    );
}

#[test]
fn vacuum_arm_recovers_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 12,
        history: 60,
        cookies: 50,
        forms: 30,
        anti_forensics: AntiForensics::Vacuum,
        ..Default::default()
    };
    let truth = generate(&spec, dir.path());
    assert!(truth.count(Recoverability::Unrecoverable) > 20);
    for store in ["places.sqlite", "cookies.sqlite", "formhistory.sqlite"] {
        let texts = carve_all_texts(&dir.path().join(store), 0.5);
        assert!(
            texts.is_empty(),
            "{store}: {} false positives after vacuum: {:?}",
            texts.len(),
            &texts[..texts.len().min(3)]
        );
    }
}

#[test]
fn untouched_profile_produces_no_carved_records() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 13,
        ..Default::default()
    };
    generate(&spec, dir.path());
    for store in ["places.sqlite", "cookies.sqlite", "formhistory.sqlite"] {
        let texts = carve_all_texts(&dir.path().join(store), 0.5);
        assert!(texts.is_empty(), "{store}: unexpected carved text {texts:?}");
    }
}

#[test]
fn overwritten_freeblocks_allow_partial_results() {
    // delete rows, then insert new ones so freeblocks are partially reused
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 14,
        history: 80,
        anti_forensics: AntiForensics::DeleteRows,
        ..Default::default()
    };
    generate(&spec, dir.path());
    let path = dir.path().join("places.sqlite");
    let conn = rusqlite::Connection::open(&path).unwrap();
    conn.pragma_update(None, "secure_delete", "OFF").unwrap();
    for i in 0..40 {
        conn.execute(
            "INSERT INTO moz_places (url, title, rev_host, visit_count, hidden, typed, frecency, last_visit_date, guid)
             VALUES (?1, 'overwrite', 'x.', 1, 0, 0, 0, 1622505600000000, ?2)",
            rusqlite::params![format!("https://overwrite-{i}.example/path"), format!("g{i}")],
        )
        .unwrap();
    }
    drop(conn);
    // carving must stay well-formed; recovery may be partial
    let _ = carve_all_texts(&path, 0.5);
}
