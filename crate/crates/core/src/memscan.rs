//! Signature scanning over raw byte images (memory dumps, page files, or
//! any opaque file): URLs, onion addresses, email addresses, search query
//! parameters and keywords, in ASCII and UTF-16LE. Scanning is chunked with
//! enough overlap that matches spanning chunk edges are never lost and the
//! result equals a whole-buffer scan.

use crate::artifact::{Artifact, ArtifactKind, Category, Location, Provenance, RecoveryState};
use regex::bytes::Regex;
use std::io::Read;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternName {
    Url,
    OnionV2,
    OnionV3,
    Email,
    SearchQuery,
    Keyword,
}

impl PatternName {
    pub fn label(&self) -> &'static str {
        match self {
            PatternName::Url => "url",
            PatternName::OnionV2 => "onion-v2",
            PatternName::OnionV3 => "onion-v3",
            PatternName::Email => "email",
            PatternName::SearchQuery => "search-query",
            PatternName::Keyword => "keyword",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitEncoding {
    Ascii,
    Utf16Le,
}

impl HitEncoding {
    pub fn label(&self) -> &'static str {
        match self {
            HitEncoding::Ascii => "ascii",
            HitEncoding::Utf16Le => "utf16le",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanHit {
    pub pattern: PatternName,
    pub text: String,
    /// Byte offset of the match start in the scanned image.
    pub offset: usize,
    pub context: String,
    pub encoding: HitEncoding,
}

struct Pattern {
    name: PatternName,
    regex: Regex,
    /// Capture group holding the reported text, when the regex needs a
    /// leading anchor byte.
    group: usize,
}

/// The compiled pattern set. Longest possible ASCII match is bounded so the
/// chunk overlap can be sized.
pub struct PatternSet {
    patterns: Vec<Pattern>,
    max_match_len: usize,
    radius: usize,
}

const URL_MAX: usize = 8 + 253 + 6 + 2048;

impl PatternSet {
    pub fn new(keywords: &[String], radius: usize) -> PatternSet {
        let mut patterns = vec![
            Pattern {
                name: PatternName::Url,
                regex: Regex::new(
                    r#"(?i-u)\bhttps?://[a-z0-9][a-z0-9.\-]{0,252}(?::[0-9]{1,5})?(?:/[^\x00-\x20"'<>\x7f-\xff]{0,2048})?"#,
                )
                .unwrap(),
                group: 0,
            },
            Pattern {
                name: PatternName::OnionV2,
                regex: Regex::new(r"(?-u)\b[a-z2-7]{16}\.onion\b").unwrap(),
                group: 0,
            },
            Pattern {
                name: PatternName::OnionV3,
                regex: Regex::new(r"(?-u)\b[a-z2-7]{56}\.onion\b").unwrap(),
                group: 0,
            },
            Pattern {
                name: PatternName::Email,
                regex: Regex::new(
                    r"(?i-u)\b[a-z0-9._%+\-]{1,64}@[a-z0-9.\-]{1,253}\.[a-z]{2,24}\b",
                )
                .unwrap(),
                group: 0,
            },
            Pattern {
                name: PatternName::SearchQuery,
                regex: Regex::new(r#"(?i-u)[?& ]((?:q|query)=[^\x00-\x20&"'<>\x7f-\xff]{1,512})"#)
                    .unwrap(),
                group: 1,
            },
        ];
        if !keywords.is_empty() {
            let alternatives: Vec<String> =
                keywords.iter().map(|k| regex::escape(k)).collect();
            patterns.push(Pattern {
                name: PatternName::Keyword,
                regex: Regex::new(&format!("(?i-u)(?:{})", alternatives.join("|"))).unwrap(),
                group: 0,
            });
        }
        PatternSet {
            patterns,
            max_match_len: URL_MAX,
            radius,
        }
    }

    /// Overlap carried between chunks: the longest raw match (UTF-16LE
    /// doubles the ASCII length) minus one.
    pub fn overlap(&self) -> usize {
        self.max_match_len * 2 - 1
    }
}

/// Scan a whole in-memory image. Deterministic ascending-offset order;
/// within one pattern, identical offsets are deduplicated.
pub fn scan(dump: &[u8], patterns: &PatternSet) -> Vec<ScanHit> {
    let mut hits = scan_region(dump, patterns, 0, 0, dump.len());
    finish(&mut hits);
    hits
}

/// Streaming scan over a reader, `chunk_size` bytes at a time. Produces
/// exactly the hits a whole-buffer scan would.
pub fn scan_chunked(
    reader: &mut impl Read,
    patterns: &PatternSet,
    chunk_size: usize,
) -> std::io::Result<Vec<ScanHit>> {
    let overlap = patterns.overlap() + 1;
    let chunk_size = chunk_size.max(overlap * 2);
    let mut hits = Vec::new();
    let mut buf: Vec<u8> = Vec::with_capacity(chunk_size + 2 * overlap);
    let mut base = 0usize; // image offset of buf[0]
    let mut accept_from = 0usize; // image offset where this window's matches begin
    loop {
        let mut chunk = vec![0u8; chunk_size];
        let mut filled = 0;
        while filled < chunk_size {
            let n = reader.read(&mut chunk[filled..])?;
            if n == 0 {
                break;
            }
            filled += n;
        }
        chunk.truncate(filled);
        let eof = filled < chunk_size;
        buf.extend_from_slice(&chunk);
        let end = base + buf.len();
        // matches starting in the last `overlap` bytes may continue into the
        // next chunk; defer them unless this is the end of input
        let accept_to = if eof { end } else { end.saturating_sub(overlap) };
        if accept_to > accept_from {
            hits.extend(scan_region(
                &buf,
                patterns,
                base,
                accept_from - base,
                accept_to - base,
            ));
        }
        if eof {
            break;
        }
        accept_from = accept_to;
        // keep 2*overlap bytes: overlap of left context plus the deferred region
        let keep = (2 * overlap).min(buf.len());
        let cut = buf.len() - keep;
        buf.drain(..cut);
        base += cut;
    }
    finish(&mut hits);
    Ok(hits)
}

fn finish(hits: &mut Vec<ScanHit>) {
    hits.sort_by(|a, b| {
        (a.offset, a.pattern, a.encoding.label()).cmp(&(b.offset, b.pattern, b.encoding.label()))
    });
    hits.dedup_by(|a, b| a.pattern == b.pattern && a.offset == b.offset && a.encoding == b.encoding);
}

/// Scan `buf`, reporting matches whose image offset falls in
/// [base + from, base + to).
fn scan_region(
    buf: &[u8],
    patterns: &PatternSet,
    base: usize,
    from: usize,
    to: usize,
) -> Vec<ScanHit> {
    let mut hits = Vec::new();
    // ASCII pass
    for pattern in &patterns.patterns {
        for caps in pattern.regex.captures_iter(buf) {
            let m = match caps.get(pattern.group) {
                Some(m) => m,
                None => continue,
            };
            if m.start() < from || m.start() >= to {
                continue;
            }
            hits.push(ScanHit {
                pattern: pattern.name,
                text: String::from_utf8_lossy(m.as_bytes()).into_owned(),
                offset: base + m.start(),
                context: context_window(buf, m.start(), m.len(), patterns.radius),
                encoding: HitEncoding::Ascii,
            });
        }
    }
    // UTF-16LE pass: extract printable-ASCII wide runs into a shadow buffer
    // and map shadow offsets back to image offsets
    let (shadow, map) = utf16le_shadow(buf);
    for pattern in &patterns.patterns {
        for caps in pattern.regex.captures_iter(&shadow) {
            let m = match caps.get(pattern.group) {
                Some(m) => m,
                None => continue,
            };
            let start = map[m.start()];
            if start < from || start >= to {
                continue;
            }
            hits.push(ScanHit {
                pattern: pattern.name,
                text: String::from_utf8_lossy(m.as_bytes()).into_owned(),
                offset: base + start,
                context: context_window(buf, start, m.len() * 2, patterns.radius),
                encoding: HitEncoding::Utf16Le,
            });
        }
    }
    hits
}

/// Printable-ASCII UTF-16LE runs of length >= 4 code units, concatenated
/// with separator bytes so matches cannot bridge distinct runs. Returns the
/// shadow text and a shadow-offset -> buffer-offset map.
fn utf16le_shadow(buf: &[u8]) -> (Vec<u8>, Vec<usize>) {
    let mut shadow = Vec::new();
    let mut map = Vec::new();
    let mut run_start = 0usize;
    let mut run: Vec<u8> = Vec::new();
    let mut i = 0;
    let flush = |run: &mut Vec<u8>, run_start: usize, shadow: &mut Vec<u8>, map: &mut Vec<usize>| {
        if run.len() >= 4 {
            for (j, b) in run.iter().enumerate() {
                shadow.push(*b);
                map.push(run_start + 2 * j);
            }
            shadow.push(0x00); // run separator, matches no pattern class
            map.push(run_start + 2 * run.len());
        }
        run.clear();
    };
    while i + 1 < buf.len() {
        let lo = buf[i];
        let hi = buf[i + 1];
        if hi == 0 && (0x20..0x7f).contains(&lo) {
            if run.is_empty() {
                run_start = i;
            }
            run.push(lo);
            i += 2;
        } else {
            flush(&mut run, run_start, &mut shadow, &mut map);
            // resynchronize on the next even-ish boundary: advance one byte
            i += 1;
        }
    }
    flush(&mut run, run_start, &mut shadow, &mut map);
    (shadow, map)
}

/// Printable window around an offset: bytes in
/// [offset - radius, offset + len + radius), non-printables replaced by '.',
/// clamped at the image bounds.
pub fn context_window(dump: &[u8], offset: usize, len: usize, radius: usize) -> String {
    let start = offset.saturating_sub(radius);
    let end = (offset + len + radius).min(dump.len());
    dump[start..end]
        .iter()
        .map(|b| {
            if (0x20..0x7f).contains(b) {
                *b as char
            } else {
                '.'
            }
        })
        .collect()
}

/// Map scan hits onto artifacts: URLs and onion addresses count as browsing
/// history, query parameters as form data, emails and keyword context as
/// cache/temporary content. Everything is RAM-resident.
pub fn classify_hits(hits: &[ScanHit], evidence_id: &str, source: &str) -> Vec<Artifact> {
    hits.iter()
        .map(|hit| {
            let (kind, category) = match hit.pattern {
                PatternName::Url | PatternName::OnionV2 | PatternName::OnionV3 => {
                    (ArtifactKind::Urls, Category::BrowsingHistory)
                }
                PatternName::Email => (ArtifactKind::EmailAddresses, Category::CacheTemp),
                PatternName::SearchQuery => (ArtifactKind::SearchQueries, Category::SqliteDbForm),
                PatternName::Keyword => (ArtifactKind::WebsiteContent, Category::CacheTemp),
            };
            Artifact::new(
                kind,
                category,
                Location::Ram,
                RecoveryState::MemoryResident,
                hit.text.clone(),
                Vec::new(),
                Provenance {
                    evidence_id: evidence_id.to_string(),
                    source: source.to_string(),
                    detail: format!(
                        "offset=0x{:x} pattern={} encoding={} context={}",
                        hit.offset,
                        hit.pattern.label(),
                        hit.encoding.label(),
                        hit.context
                    ),
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::location_matrix_allows;

    fn set() -> PatternSet {
        PatternSet::new(&["torbrowser".into(), "hidden wiki".into()], 16)
    }

    fn onion56() -> String {
        "a".repeat(55) + "b"
    }

    #[test]
    fn finds_url_and_onion_at_offset() {
        let mut dump = vec![0u8; 8192];
        let s = format!("http://{}.onion/market", onion56());
        dump[4096..4096 + s.len()].copy_from_slice(s.as_bytes());
        let hits = scan(&dump, &set());
        let url = hits.iter().find(|h| h.pattern == PatternName::Url).unwrap();
        assert_eq!(url.offset, 4096);
        assert_eq!(url.text, s);
        let onion = hits
            .iter()
            .find(|h| h.pattern == PatternName::OnionV3)
            .unwrap();
        assert_eq!(onion.offset, 4096 + 7);
    }

    #[test]
    fn all_zero_dump_is_empty() {
        assert!(scan(&vec![0u8; 65536], &set()).is_empty());
    }

    #[test]
    fn utf16_search_query() {
        let text = "duckduckgo q=buy%20passport";
        let mut dump = vec![0u8; 1024];
        let mut off = 100;
        for b in text.bytes() {
            dump[off] = b;
            dump[off + 1] = 0;
            off += 2;
        }
        let hits = scan(&dump, &set());
        let q = hits
            .iter()
            .find(|h| h.pattern == PatternName::SearchQuery)
            .unwrap();
        assert_eq!(q.encoding, HitEncoding::Utf16Le);
        assert_eq!(q.text, "q=buy%20passport");
    }

    #[test]
    fn onion_v2_and_v3_do_not_cross_match() {
        let v2 = format!("x {}.onion x", "a".repeat(16));
        let hits = scan(v2.as_bytes(), &set());
        assert!(hits.iter().any(|h| h.pattern == PatternName::OnionV2));
        assert!(!hits.iter().any(|h| h.pattern == PatternName::OnionV3));
        let v3 = format!("x {}.onion x", onion56());
        let hits = scan(v3.as_bytes(), &set());
        assert!(hits.iter().any(|h| h.pattern == PatternName::OnionV3));
        // the 56-char run does not offer a word boundary for the v2 pattern
        assert!(!hits.iter().any(|h| h.pattern == PatternName::OnionV2));
    }

    #[test]
    fn email_and_keyword() {
        let dump = b"contact vendor@market.example for torbrowser bundle";
        let hits = scan(dump, &set());
        assert!(hits.iter().any(|h| h.pattern == PatternName::Email
            && h.text == "vendor@market.example"));
        assert!(hits.iter().any(|h| h.pattern == PatternName::Keyword));
    }

    #[test]
    fn context_window_clamps_and_replaces() {
        let dump = b"\x00\x01abc\x02";
        assert_eq!(context_window(dump, 0, 0, 16), "..abc.");
        assert_eq!(context_window(dump, 2, 3, 1), ".abc.");
        let window = context_window(dump, 0, 0, 2);
        assert_eq!(window, "..");
    }

    #[test]
    fn chunked_equals_whole_buffer() {
        let mut dump = vec![0u8; 300_000];
        let patterns = set();
        let overlap = patterns.overlap() + 1;
        let chunk = 64 * 1024;
        // plant matches straddling each chunk boundary and inside bodies
        let s = "https://hidden.example/path?q=guns";
        for k in 1..4 {
            let edge = k * chunk;
            let start = edge - s.len() / 2;
            dump[start..start + s.len()].copy_from_slice(s.as_bytes());
        }
        let email = b"buyer@dark.example";
        dump[1000..1000 + email.len()].copy_from_slice(email);
        // UTF-16 plant across a boundary
        let wide_start = 2 * chunk - 20;
        let wtext = "http://wide.example/edge";
        for (j, b) in wtext.bytes().enumerate() {
            dump[wide_start + 2 * j] = b;
            dump[wide_start + 2 * j + 1] = 0;
        }
        assert!(chunk > 2 * overlap);
        let whole = scan(&dump, &patterns);
        let mut cursor = std::io::Cursor::new(dump.clone());
        let chunked = scan_chunked(&mut cursor, &patterns, chunk).unwrap();
        assert_eq!(whole, chunked);
        assert!(whole.iter().any(|h| h.encoding == HitEncoding::Utf16Le));
        assert!(whole.len() >= 5);
    }

    #[test]
    fn classify_respects_ram_matrix() {
        let dump = format!(
            "see http://{}.onion/x and mail me at a@b.example q=x",
            onion56()
        );
        let hits = scan(dump.as_bytes(), &set());
        let artifacts = classify_hits(&hits, "E001", "memory.dump");
        assert!(!artifacts.is_empty());
        for a in &artifacts {
            assert_eq!(a.location, Location::Ram);
            assert_eq!(a.recovery_state, RecoveryState::MemoryResident);
            assert!(location_matrix_allows(a.kind, Location::Ram));
        }
        let onion = artifacts
            .iter()
            .find(|a| a.kind == ArtifactKind::Urls)
            .unwrap();
        assert_eq!(onion.category, Category::BrowsingHistory);
        let email = artifacts
            .iter()
            .find(|a| a.kind == ArtifactKind::EmailAddresses)
            .unwrap();
        assert_eq!(email.category, Category::CacheTemp);
    }

    #[test]
    fn empty_hits_classify_to_empty() {
        assert!(classify_hits(&[], "E001", "x").is_empty());
    }
}
