//! Shared artifact model: every finding produced by an extractor, carver or
//! scanner becomes one `Artifact` with a fine-grained kind, one of the five
//! reporting categories, a source location and a recovery state.

use chrono::{DateTime, Utc};
use sha2::{Digest, Sha256};

/// Fine-grained artifact kinds, one per row of the evidence-location matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArtifactKind {
    Urls,
    WebsiteContent,
    SearchQueries,
    Bookmarks,
    Cookies,
    EmailAddresses,
    EmailContent,
    Usernames,
    Passwords,
    DownloadFiles,
    UsageSession,
    Timestamps,
}

impl ArtifactKind {
    pub fn label(&self) -> &'static str {
        match self {
            ArtifactKind::Urls => "URLs",
            ArtifactKind::WebsiteContent => "Website Content",
            ArtifactKind::SearchQueries => "Search Queries",
            ArtifactKind::Bookmarks => "Bookmarks",
            ArtifactKind::Cookies => "Cookies",
            ArtifactKind::EmailAddresses => "Email Addresses",
            ArtifactKind::EmailContent => "Email Content",
            ArtifactKind::Usernames => "Usernames",
            ArtifactKind::Passwords => "Passwords",
            ArtifactKind::DownloadFiles => "Download Files",
            ArtifactKind::UsageSession => "Usage/Session",
            ArtifactKind::Timestamps => "Timestamps",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        ALL_KINDS.iter().copied().find(|k| k.label() == label)
    }
}

pub const ALL_KINDS: [ArtifactKind; 12] = [
    ArtifactKind::Urls,
    ArtifactKind::WebsiteContent,
    ArtifactKind::SearchQueries,
    ArtifactKind::Bookmarks,
    ArtifactKind::Cookies,
    ArtifactKind::EmailAddresses,
    ArtifactKind::EmailContent,
    ArtifactKind::Usernames,
    ArtifactKind::Passwords,
    ArtifactKind::DownloadFiles,
    ArtifactKind::UsageSession,
    ArtifactKind::Timestamps,
];

/// The five reporting categories, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    BrowsingHistory,
    SecurityLogins,
    CacheTemp,
    SqliteDbForm,
    Downloads,
}

pub const CATEGORY_ORDER: [Category; 5] = [
    Category::BrowsingHistory,
    Category::SecurityLogins,
    Category::CacheTemp,
    Category::SqliteDbForm,
    Category::Downloads,
];

impl Category {
    pub fn label(&self) -> &'static str {
        match self {
            Category::BrowsingHistory => "BROWSING HISTORY",
            Category::SecurityLogins => "SECURITY & LOGINS",
            Category::CacheTemp => "CACHE & TEMP",
            Category::SqliteDbForm => "SQLITE DB FORM",
            Category::Downloads => "DOWNLOADS",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        CATEGORY_ORDER.iter().copied().find(|c| c.label() == label)
    }

    pub fn index(&self) -> usize {
        CATEGORY_ORDER.iter().position(|c| c == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    FileSystem,
    Ram,
    UserSystemConfig,
}

impl Location {
    pub fn label(&self) -> &'static str {
        match self {
            Location::FileSystem => "FileSystem",
            Location::Ram => "RAM",
            Location::UserSystemConfig => "UserSystemConfig",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        [Location::FileSystem, Location::Ram, Location::UserSystemConfig]
            .iter()
            .copied()
            .find(|l| l.label() == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RecoveryState {
    Live,
    Carved,
    MemoryResident,
}

impl RecoveryState {
    pub fn label(&self) -> &'static str {
        match self {
            RecoveryState::Live => "live",
            RecoveryState::Carved => "carved",
            RecoveryState::MemoryResident => "memory-resident",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        [
            RecoveryState::Live,
            RecoveryState::Carved,
            RecoveryState::MemoryResident,
        ]
        .iter()
        .copied()
        .find(|r| r.label() == label)
    }
}

/// Where a finding came from: the registered evidence item, the store or
/// file inside it, and a locator (path, rowid, page/offset).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Provenance {
    pub evidence_id: String,
    pub source: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flag {
    /// At least one timestamp fell outside the plausibility window.
    ImplausibleTimestamp,
    /// The (kind, location) cell is marked absent in the evidence-location
    /// matrix; extraction disagrees with the published table.
    LocationMatrixDiscrepancy,
    /// Text decoded with replacement characters.
    LossyText,
}

impl Flag {
    pub fn label(&self) -> &'static str {
        match self {
            Flag::ImplausibleTimestamp => "implausible-timestamp",
            Flag::LocationMatrixDiscrepancy => "location-matrix-discrepancy",
            Flag::LossyText => "lossy-text",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        [
            Flag::ImplausibleTimestamp,
            Flag::LocationMatrixDiscrepancy,
            Flag::LossyText,
        ]
        .iter()
        .copied()
        .find(|f| f.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub artifact_id: String,
    pub kind: ArtifactKind,
    pub category: Category,
    pub location: Location,
    pub recovery_state: RecoveryState,
    pub value: String,
    pub timestamps: Vec<(String, DateTime<Utc>)>,
    pub provenance: Vec<Provenance>,
    /// Set when the source profile is TOR-flavored.
    pub tor: bool,
    pub flags: Vec<Flag>,
    /// Carving confidence, present for carved records only.
    pub plausibility: Option<f64>,
    /// Distinct source locations corroborating this value; set by
    /// cross-validation, 1 before it runs.
    pub corroboration: u32,
}

impl Artifact {
    /// Build an artifact with a deterministic id derived from what it is and
    /// where it came from, never from execution order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: ArtifactKind,
        category: Category,
        location: Location,
        recovery_state: RecoveryState,
        value: String,
        timestamps: Vec<(String, DateTime<Utc>)>,
        provenance: Provenance,
    ) -> Self {
        let mut flags = Vec::new();
        if timestamps.iter().any(|(_, t)| !in_sanity_window(t)) {
            flags.push(Flag::ImplausibleTimestamp);
        }
        if !location_matrix_allows(kind, location) {
            flags.push(Flag::LocationMatrixDiscrepancy);
        }
        let artifact_id = artifact_id(kind, location, recovery_state, &value, &provenance);
        Artifact {
            artifact_id,
            kind,
            category,
            location,
            recovery_state,
            value,
            timestamps,
            provenance: vec![provenance],
            tor: false,
            flags,
            plausibility: None,
            corroboration: 1,
        }
    }

    pub fn with_flag(mut self, flag: Flag) -> Self {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
        self
    }

    pub fn with_plausibility(mut self, p: f64) -> Self {
        self.plausibility = Some(p);
        self
    }

    /// Excluded entries do not count toward report tables: empty values,
    /// artifacts whose every timestamp is implausible, and carved records
    /// below the plausibility threshold.
    pub fn is_excluded(&self, threshold: f64) -> bool {
        if self.value.is_empty() {
            return true;
        }
        if !self.timestamps.is_empty()
            && self.timestamps.iter().all(|(_, t)| !in_sanity_window(t))
        {
            return true;
        }
        if let Some(p) = self.plausibility {
            if p < threshold {
                return true;
            }
        }
        false
    }
}

pub fn in_sanity_window(t: &DateTime<Utc>) -> bool {
    use chrono::Datelike;
    (crate::timestamp::SANITY_MIN_YEAR..crate::timestamp::SANITY_MAX_YEAR).contains(&t.year())
}

fn artifact_id(
    kind: ArtifactKind,
    location: Location,
    recovery: RecoveryState,
    value: &str,
    prov: &Provenance,
) -> String {
    let mut h = Sha256::new();
    for part in [
        kind.label(),
        location.label(),
        recovery.label(),
        value,
        &prov.evidence_id,
        &prov.source,
        &prov.detail,
    ] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}

/// The published evidence-location matrix: for each artifact kind, whether
/// it is expected in the file system, RAM, and user/system configuration.
/// Extraction that lands on a cell marked absent is flagged, not dropped;
/// the cookies row in particular contradicts the on-disk store reality.
pub fn location_matrix_allows(kind: ArtifactKind, location: Location) -> bool {
    let (fs, ram, cfg) = match kind {
        ArtifactKind::Urls => (false, true, true),
        ArtifactKind::WebsiteContent => (false, true, false),
        ArtifactKind::SearchQueries => (false, true, true),
        ArtifactKind::Bookmarks => (true, true, true),
        ArtifactKind::Cookies => (false, false, false),
        ArtifactKind::EmailAddresses => (false, true, false),
        ArtifactKind::EmailContent => (false, true, false),
        ArtifactKind::Usernames => (false, true, false),
        ArtifactKind::Passwords => (false, true, false),
        ArtifactKind::DownloadFiles => (true, true, false),
        ArtifactKind::UsageSession => (false, true, true),
        ArtifactKind::Timestamps => (true, false, true),
    };
    match location {
        Location::FileSystem => fs,
        Location::Ram => ram,
        Location::UserSystemConfig => cfg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn prov() -> Provenance {
        Provenance {
            evidence_id: "E001".into(),
            source: "places.sqlite".into(),
            detail: "rowid=1".into(),
        }
    }

    #[test]
    fn id_is_deterministic_from_provenance() {
        let a = Artifact::new(
            ArtifactKind::Urls,
            Category::BrowsingHistory,
            Location::FileSystem,
            RecoveryState::Live,
            "http://example.test/".into(),
            vec![],
            prov(),
        );
        let b = Artifact::new(
            ArtifactKind::Urls,
            Category::BrowsingHistory,
            Location::FileSystem,
            RecoveryState::Live,
            "http://example.test/".into(),
            vec![],
            prov(),
        );
        assert_eq!(a.artifact_id, b.artifact_id);
        assert_eq!(a.artifact_id.len(), 16);
    }

    #[test]
    fn matrix_flags_cookie_and_url_rows() {
        let c = Artifact::new(
            ArtifactKind::Cookies,
            Category::CacheTemp,
            Location::FileSystem,
            RecoveryState::Live,
            "host|name".into(),
            vec![],
            prov(),
        );
        assert!(c.flags.contains(&Flag::LocationMatrixDiscrepancy));
        let b = Artifact::new(
            ArtifactKind::Bookmarks,
            Category::BrowsingHistory,
            Location::FileSystem,
            RecoveryState::Live,
            "http://example.test/".into(),
            vec![],
            prov(),
        );
        assert!(!b.flags.contains(&Flag::LocationMatrixDiscrepancy));
    }

    #[test]
    fn ram_rows_match_matrix() {
        for kind in [
            ArtifactKind::Urls,
            ArtifactKind::WebsiteContent,
            ArtifactKind::SearchQueries,
            ArtifactKind::EmailAddresses,
        ] {
            assert!(location_matrix_allows(kind, Location::Ram));
        }
        assert!(!location_matrix_allows(ArtifactKind::Cookies, Location::Ram));
        assert!(!location_matrix_allows(ArtifactKind::Timestamps, Location::Ram));
    }

    #[test]
    fn excluded_rules() {
        let mut a = Artifact::new(
            ArtifactKind::Urls,
            Category::BrowsingHistory,
            Location::FileSystem,
            RecoveryState::Live,
            "".into(),
            vec![],
            prov(),
        );
        assert!(a.is_excluded(0.5)); // empty value
        a.value = "x".into();
        assert!(!a.is_excluded(0.5));
        a.timestamps = vec![(
            "visit".into(),
            Utc.with_ymd_and_hms(1971, 1, 1, 0, 0, 0).unwrap(),
        )];
        assert!(a.is_excluded(0.5)); // all timestamps implausible
        a.timestamps.push((
            "visit".into(),
            Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
        ));
        assert!(!a.is_excluded(0.5));
        a.plausibility = Some(0.4);
        assert!(a.is_excluded(0.5)); // carved below threshold
        a.plausibility = Some(0.5);
        assert!(!a.is_excluded(0.5));
    }

    #[test]
    fn labels_round_trip() {
        for k in ALL_KINDS {
            assert_eq!(ArtifactKind::parse(k.label()), Some(k));
        }
        for c in CATEGORY_ORDER {
            assert_eq!(Category::parse(c.label()), Some(c));
        }
    }
}
