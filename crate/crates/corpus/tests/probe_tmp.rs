use d2wfp_core::sqlite::*;

#[test]
fn probe_carver_on_python_db() {
    let path = std::path::Path::new("/tmp/probe_places.db");
    if !path.exists() { return; }
    let db = Database::open(path).unwrap();
    let tables = read_schema(&db).unwrap();
    let mut live = LiveIndex::default();
    for t in &tables {
        for row in walk_btree(&db, t.root_page, &t.name).unwrap() {
            live.add_row(&row.columns);
        }
    }
    let shapes = shapes_of(&tables);
    let f = carve_freelist(&db, &live, &shapes, 0.5);
    let u = carve_unallocated(&db, &live, &shapes, 0.5);
    println!("freelist: {} records, unalloc: {} records", f.records.len(), u.records.len());
    let mut urls = 0;
    for rec in f.records.iter().chain(u.records.iter()) {
        let has_url = rec.columns.iter().any(|c| c.as_text().map(|s| s.contains(".onion")).unwrap_or(false));
        if has_url { urls += 1; }
        println!("  origin={:?} page={} off={} cols={} skip={} hint={:?} plaus={:.2} url={}",
            rec.origin, rec.page, rec.offset, rec.columns.len(), rec.skipped_columns, rec.table_hint, rec.plausibility, has_url);
    }
    println!("URL-bearing carved: {urls} (expect up to 42)");
}
