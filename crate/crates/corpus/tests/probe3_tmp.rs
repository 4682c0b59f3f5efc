use d2wfp_corpus::*;

#[test]
fn dump_freelist_state() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        seed: 11, history: 120, bookmarks: 30, cookies: 100, forms: 60, downloads: 30,
        anti_forensics: AntiForensics::DeleteRows, ..Default::default()
    };
    let factory = ValueFactory::new(spec.seed);
    let mut truth = GroundTruth::default();
    generate_profile(&spec, &factory, dir.path(), &mut truth).unwrap();
    apply_antiforensics(&spec, &factory, dir.path(), &mut truth).unwrap();
    for store in ["places.sqlite", "cookies.sqlite", "formhistory.sqlite"] {
        let raw = std::fs::read(dir.path().join(store)).unwrap();
        let ps = u16::from_be_bytes([raw[16], raw[17]]) as usize;
        let head = u32::from_be_bytes(raw[32..36].try_into().unwrap());
        let count = u32::from_be_bytes(raw[36..40].try_into().unwrap());
        let npages = raw.len() / ps;
        println!("== {store}: pages={npages} freelist head={head} count={count}");
        for p in 1..=npages {
            let pg = &raw[(p - 1) * ps..p * ps];
            let base = if p == 1 { 100 } else { 0 };
            let t = pg[base];
            let ncell = u16::from_be_bytes([pg[base + 3], pg[base + 4]]);
            let fb = u16::from_be_bytes([pg[base + 1], pg[base + 2]]);
            let cs = u16::from_be_bytes([pg[base + 5], pg[base + 6]]);
            println!("  page {p}: first_byte=0x{t:02x} ncells={ncell} fb={fb} content_start={cs} first16={:02x?}", &pg[..16]);
        }
    }
}
