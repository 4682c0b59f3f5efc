use d2wfp_core::sqlite::*;
use d2wfp_corpus::*;

#[test]
fn trace_cookie_trunk_page() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 11, history: 120, bookmarks: 30, cookies: 100, forms: 60, downloads: 30,
        anti_forensics: AntiForensics::DeleteRows, ..Default::default()
    };
    let factory = ValueFactory::new(spec.seed);
    let mut truth = GroundTruth::default();
    generate_profile(&spec, &factory, dir.path(), &mut truth).unwrap();
    apply_antiforensics(&spec, &factory, dir.path(), &mut truth).unwrap();

    let path = dir.path().join("cookies.sqlite");
    let db = Database::open(&path).unwrap();
    let tables = read_schema(&db).unwrap();
    let mut live = LiveIndex::default();
    let mut live_count = 0;
    for t in &tables {
        for row in walk_btree(&db, t.root_page, &t.name).unwrap() { live.add_row(&row.columns); live_count += 1; }
    }
    println!("live rows: {live_count}");
    let shapes = shapes_of(&tables);
    let f = carve_freelist(&db, &live, &shapes, 0.5);
    println!("freelist carved: {} warnings: {}", f.records.len(), f.warnings);

    let u = carve_unallocated(&db, &live, &shapes, 0.5);
    println!("unalloc carved: {}", u.records.len());
    // how many deleted cookie hosts appear in carved outputs?
    let deleted: Vec<_> = truth.entries.iter().filter(|e| e.expect == Recoverability::Carvable && e.kind.label()=="Cookies").collect();
    let mut texts = Vec::new();
    for rec in f.records.iter().chain(u.records.iter()) {
        for c in &rec.columns { if let Some(s)=c.as_text() { texts.push(s.to_string()); } }
        println!("  rec origin={:?} page={} off={} ncols={} skip={} plaus={:.2} texts={:?}",
           rec.origin, rec.page, rec.offset, rec.columns.len(), rec.skipped_columns, rec.plausibility,
           rec.columns.iter().filter_map(|c| c.as_text()).map(|s| &s[..s.len().min(20)]).collect::<Vec<_>>());
    }
    let rec_count = deleted.iter().filter(|e| texts.iter().any(|t| t.contains(&e.carve_value))).count();
    println!("cookie recall {rec_count}/{}", deleted.len());
}
