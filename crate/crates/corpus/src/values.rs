//! Deterministic value derivation: every planted value is a pure function
//! of (seed, label, index), so corpora are reproducible byte for byte and
//! generators for different evidence kinds can plant the same value.

use sha2::{Digest, Sha256};

const BASE32: &[u8; 32] = b"abcdefghijklmnopqrstuvwxyz234567";

/// Base time for planted activity: 2021-06-01T00:00:00Z.
pub const BASE_UNIX: i64 = 1_622_505_600;

#[derive(Debug, Clone, Copy)]
pub struct ValueFactory {
    seed: u64,
}

impl ValueFactory {
    pub fn new(seed: u64) -> ValueFactory {
        ValueFactory { seed }
    }

    pub fn bytes(&self, label: &str, index: u32, len: usize) -> Vec<u8> {
        let mut out = Vec::with_capacity(len);
        let mut counter = 0u32;
        while out.len() < len {
            let mut h = Sha256::new();
            h.update(self.seed.to_le_bytes());
            h.update(label.as_bytes());
            h.update(index.to_le_bytes());
            h.update(counter.to_le_bytes());
            out.extend_from_slice(&h.finalize());
            counter += 1;
        }
        out.truncate(len);
        out
    }

    /// 56-character version-3 onion host label.
    pub fn onion56(&self, index: u32) -> String {
        self.bytes("onion", index, 56)
            .iter()
            .map(|b| BASE32[(*b & 0x1f) as usize] as char)
            .collect()
    }

    pub fn hexstr(&self, label: &str, index: u32, len: usize) -> String {
        hex::encode(self.bytes(label, index, len.div_ceil(2)))[..len].to_string()
    }

    /// Seconds timestamp for plant `index` of a store, one minute apart.
    pub fn unix_time(&self, store_slot: i64, index: u32) -> i64 {
        BASE_UNIX + store_slot * 7 + index as i64 * 60
    }

    pub fn prtime(&self, store_slot: i64, index: u32) -> i64 {
        self.unix_time(store_slot, index) * 1_000_000
    }

    /// Visited URL: mostly onion services with some clear-web pages mixed in.
    pub fn history_url(&self, index: u32) -> String {
        if index % 4 == 3 {
            format!(
                "https://forum-{}.example/threads/topic-{:04}/discussion-page-2",
                self.hexstr("forumhost", index, 10),
                index
            )
        } else {
            format!("http://{}.onion/market/listing-{:04}", self.onion56(index), index)
        }
    }

    pub fn history_title(&self, index: u32) -> String {
        format!("Listing {index:04} threads and offers overview")
    }

    pub fn bookmark_url(&self, index: u32) -> String {
        format!("http://{}.onion/wiki/entry-{:04}", self.onion56(10_000 + index), index)
    }

    pub fn bookmark_title(&self, index: u32) -> String {
        format!("Hidden service bookmark {index:04} reference page")
    }

    pub fn cookie_host(&self, index: u32) -> String {
        if index % 3 == 2 {
            format!("tracker-{}.example", self.hexstr("cookiehost", index, 8))
        } else {
            format!("{}.onion", self.onion56(20_000 + index))
        }
    }

    pub fn cookie_name(&self, index: u32) -> String {
        format!("session_token_{index:04}")
    }

    pub fn cookie_payload(&self, index: u32) -> String {
        self.hexstr("cookieval", index, 32)
    }

    /// Form plants alternate search-box fields and ordinary fields.
    pub fn form_field(&self, index: u32) -> String {
        match index % 4 {
            0 => "searchbar-history".to_string(),
            1 => "q".to_string(),
            2 => "address".to_string(),
            _ => "email".to_string(),
        }
    }

    pub fn form_value(&self, index: u32) -> String {
        match index % 4 {
            0 | 1 => format!("market query phrase {:04} {}", index, self.hexstr("q", index, 6)),
            2 => format!("12{index:02} Example Street, Sample City"),
            _ => format!("buyer{index:04}@mail.example"),
        }
    }

    pub fn download_destination(&self, index: u32) -> String {
        format!(
            "file:///home/user/Downloads/archive-{}-{index:04}.pdf",
            self.hexstr("dl", index, 8)
        )
    }

    pub fn download_source(&self, index: u32) -> String {
        format!("http://{}.onion/files/archive-{index:04}.pdf", self.onion56(30_000 + index))
    }

    pub fn login_host(&self, index: u32) -> String {
        format!("https://account-{}.example", self.hexstr("login", index, 10))
    }

    pub fn cache_url(&self, index: u32) -> String {
        if index % 2 == 0 {
            format!("http://{}.onion/assets/page-{index:04}.html", self.onion56(40_000 + index))
        } else {
            format!(
                "https://cdn-{}.example/static/bundle-{index:04}.js",
                self.hexstr("cdn", index, 8)
            )
        }
    }

    /// Deterministic deleted subset for the anti-forensics arm: a seeded
    /// contiguous index range (wrapping), like a clear-recent-history pass
    /// over a time span. Contiguous rowids share pages, so deletion empties
    /// whole pages instead of fragmenting every one.
    pub fn deleted_range(&self, label: &str, count: u32, fraction: f64) -> Vec<u32> {
        if count == 0 {
            return Vec::new();
        }
        let take = ((count as f64) * fraction).round() as u32;
        let h = self.bytes(&format!("delete-{label}"), 0, 8);
        let start = (u64::from_le_bytes(h.try_into().unwrap()) % count as u64) as u32;
        (0..take.min(count)).map(|k| (start + k) % count).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_deterministic() {
        let a = ValueFactory::new(7);
        let b = ValueFactory::new(7);
        assert_eq!(a.history_url(3), b.history_url(3));
        assert_eq!(a.onion56(0), b.onion56(0));
        let c = ValueFactory::new(8);
        assert_ne!(a.onion56(0), c.onion56(0));
    }

    #[test]
    fn onion_is_56_base32_chars() {
        let f = ValueFactory::new(1);
        let onion = f.onion56(5);
        assert_eq!(onion.len(), 56);
        assert!(onion.bytes().all(|b| BASE32.contains(&b)));
    }

    #[test]
    fn deletion_range_is_contiguous_and_sized() {
        let f = ValueFactory::new(3);
        let deleted = f.deleted_range("history", 1000, 0.4);
        assert_eq!(deleted.len(), 400);
        for pair in deleted.windows(2) {
            assert_eq!((pair[0] + 1) % 1000, pair[1]);
        }
        assert!(f.deleted_range("history", 0, 0.4).is_empty());
    }
}
