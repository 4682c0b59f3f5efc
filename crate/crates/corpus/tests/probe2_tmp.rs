use d2wfp_core::sqlite::*;
use d2wfp_corpus::*;
use std::path::Path;

#[test]
fn per_category_recall() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 11, history: 120, bookmarks: 30, cookies: 100, forms: 60, downloads: 30,
        anti_forensics: AntiForensics::DeleteRows, ..Default::default()
    };
    let factory = ValueFactory::new(spec.seed);
    let mut truth = GroundTruth::default();
    generate_profile(&spec, &factory, dir.path(), &mut truth).unwrap();
    apply_antiforensics(&spec, &factory, dir.path(), &mut truth).unwrap();

    let mut texts = Vec::new();
    for store in ["places.sqlite", "cookies.sqlite", "formhistory.sqlite"] {
        let path = dir.path().join(store);
        let db = Database::open(&path).unwrap();
        let tables = read_schema(&db).unwrap();
        let mut live = LiveIndex::default();
        for t in &tables {
            for row in walk_btree(&db, t.root_page, &t.name).unwrap() { live.add_row(&row.columns); }
        }
        let shapes = shapes_of(&tables);
        for rep in [carve_freelist(&db, &live, &shapes, 0.5), carve_unallocated(&db, &live, &shapes, 0.5)] {
            for rec in rep.records {
                for c in &rec.columns { if let Some(s) = c.as_text() { texts.push(s.to_string()); } }
            }
        }
        // raw byte check per store
        let raw = std::fs::read(&path).unwrap();
        let mut present = 0; let mut total = 0;
        for e in truth.entries.iter().filter(|e| e.expect == Recoverability::Carvable) {
            let relevant = match (store, e.kind.label()) {
                ("places.sqlite", "URLs" | "Bookmarks" | "Download Files") => true,
                ("cookies.sqlite", "Cookies") => true,
                ("formhistory.sqlite", _) if e.category.label() == "SQLITE DB FORM" => true,
                _ => false,
            };
            if relevant {
                total += 1;
                if raw.windows(e.carve_value.len()).any(|w| w == e.carve_value.as_bytes()) { present += 1; }
            }
        }
        println!("{store}: carve_value bytes present {present}/{total}");
    }
    for kind in ["URLs", "Bookmarks", "Download Files", "Cookies", "Search Queries", "Usage/Session"] {
        let entries: Vec<_> = truth.entries.iter()
            .filter(|e| e.expect == Recoverability::Carvable && e.kind.label() == kind).collect();
        if entries.is_empty() { continue; }
        let rec = entries.iter().filter(|e| texts.iter().any(|t| t.contains(&e.carve_value))).count();
        println!("{kind}: recovered {rec}/{}", entries.len());
    }
}
