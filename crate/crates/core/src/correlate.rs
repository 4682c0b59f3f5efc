//! Correlation stage: URL normalization, duplicate merging, cross-source
//! corroboration scoring, and the final timeline.

use crate::artifact::{Artifact, ArtifactKind, Location, RecoveryState};
use chrono::{DateTime, Utc};
use std::collections::{BTreeMap, HashMap};

/// Lowercase scheme and host, strip the fragment, keep the query.
pub fn normalize_url(value: &str) -> String {
    let scheme_end = match value.find("://") {
        Some(i) => i,
        None => return value.trim().to_string(),
    };
    let (scheme, rest) = value.split_at(scheme_end);
    let rest = &rest[3..];
    let host_end = rest
        .find(|c| c == '/' || c == '?' || c == '#')
        .unwrap_or(rest.len());
    let (host, tail) = rest.split_at(host_end);
    let tail = match tail.find('#') {
        Some(i) => &tail[..i],
        None => tail,
    };
    format!(
        "{}://{}{}",
        scheme.to_ascii_lowercase(),
        host.to_ascii_lowercase(),
        tail
    )
}

fn normalized_value(artifact: &Artifact) -> String {
    normalize_url(&artifact.value)
}

fn bucket_of(artifact: &Artifact, bucket_secs: i64) -> Option<i64> {
    artifact
        .timestamps
        .iter()
        .map(|(_, t)| t.timestamp())
        .min()
        .map(|s| s.div_euclid(bucket_secs.max(1)))
}

fn recovery_rank(state: RecoveryState) -> u8 {
    match state {
        RecoveryState::Live => 0,
        RecoveryState::Carved => 1,
        RecoveryState::MemoryResident => 2,
    }
}

/// Merge artifacts equal on (category, normalized value, time bucket). The
/// representative is the live one when present; all provenances are kept.
/// Idempotent, deterministic output order.
pub fn deduplicate(artifacts: Vec<Artifact>, bucket_secs: i64) -> Vec<Artifact> {
    let mut groups: BTreeMap<(u8, String, Option<i64>), Vec<Artifact>> = BTreeMap::new();
    for artifact in artifacts {
        let key = (
            artifact.category.index() as u8,
            normalized_value(&artifact),
            bucket_of(&artifact, bucket_secs),
        );
        groups.entry(key).or_default().push(artifact);
    }
    let mut merged = Vec::with_capacity(groups.len());
    for (_, mut group) in groups {
        group.sort_by(|a, b| {
            (recovery_rank(a.recovery_state), &a.artifact_id)
                .cmp(&(recovery_rank(b.recovery_state), &b.artifact_id))
        });
        let mut representative = group.remove(0);
        for other in group {
            for prov in other.provenance {
                if !representative.provenance.contains(&prov) {
                    representative.provenance.push(prov);
                }
            }
            for flag in other.flags {
                if !representative.flags.contains(&flag) {
                    representative.flags.push(flag);
                }
            }
            representative.tor |= other.tor;
        }
        representative.provenance.sort();
        merged.push(representative);
    }
    merged.sort_by(|a, b| (a.category, &a.value, &a.artifact_id).cmp(&(b.category, &b.value, &b.artifact_id)));
    merged
}

/// Corroboration: how many distinct source locations carry the same
/// normalized value, attached to every artifact of the group. Never removes
/// artifacts; scores land in [1, 3].
pub fn cross_validate(artifacts: &mut [Artifact]) {
    let mut locations: HashMap<String, [bool; 3]> = HashMap::new();
    for artifact in artifacts.iter() {
        let slot = match artifact.location {
            Location::FileSystem => 0,
            Location::Ram => 1,
            Location::UserSystemConfig => 2,
        };
        locations.entry(normalized_value(artifact)).or_default()[slot] = true;
    }
    for artifact in artifacts.iter_mut() {
        let seen = locations[&normalized_value(artifact)];
        artifact.corroboration = seen.iter().filter(|b| **b).count() as u32;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Visit,
    Download,
    CookieSet,
    FormEntry,
    LoginSaved,
    ProgramRun,
    CacheFetch,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Visit => "visit",
            EventKind::Download => "download",
            EventKind::CookieSet => "cookie-set",
            EventKind::FormEntry => "form-entry",
            EventKind::LoginSaved => "login-saved",
            EventKind::ProgramRun => "program-run",
            EventKind::CacheFetch => "cache-fetch",
        }
    }
}

fn event_kind(artifact: &Artifact) -> EventKind {
    match artifact.kind {
        ArtifactKind::Urls | ArtifactKind::Bookmarks => EventKind::Visit,
        ArtifactKind::DownloadFiles => EventKind::Download,
        ArtifactKind::Cookies => EventKind::CookieSet,
        ArtifactKind::SearchQueries => EventKind::FormEntry,
        ArtifactKind::UsageSession => {
            if artifact.location == Location::UserSystemConfig {
                EventKind::ProgramRun
            } else {
                EventKind::FormEntry
            }
        }
        ArtifactKind::Usernames | ArtifactKind::Passwords => EventKind::LoginSaved,
        ArtifactKind::WebsiteContent
        | ArtifactKind::EmailAddresses
        | ArtifactKind::EmailContent
        | ArtifactKind::Timestamps => EventKind::CacheFetch,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineEvent {
    pub at: DateTime<Utc>,
    pub event_kind: EventKind,
    pub label: String,
    pub artifact_ids: Vec<String>,
    pub corroboration: u32,
}

#[derive(Debug, Default)]
pub struct Timeline {
    pub events: Vec<TimelineEvent>,
    /// Artifacts carrying no timestamp; reported but not on the timeline.
    pub undated: usize,
}

/// One event per (artifact, timestamp label) pair, ascending by time with
/// deterministic tie-breaks.
pub fn build_timeline(artifacts: &[Artifact]) -> Timeline {
    let mut timeline = Timeline::default();
    for artifact in artifacts {
        if artifact.timestamps.is_empty() {
            timeline.undated += 1;
            continue;
        }
        let kind = event_kind(artifact);
        for (label, at) in &artifact.timestamps {
            timeline.events.push(TimelineEvent {
                at: *at,
                event_kind: kind,
                label: label.clone(),
                artifact_ids: vec![artifact.artifact_id.clone()],
                corroboration: artifact.corroboration,
            });
        }
    }
    timeline.events.sort_by(|a, b| {
        (a.at, a.event_kind.label(), &a.artifact_ids)
            .cmp(&(b.at, b.event_kind.label(), &b.artifact_ids))
    });
    timeline
}
