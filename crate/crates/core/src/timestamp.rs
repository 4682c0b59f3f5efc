//! Timestamp normalization for the epoch formats found in browser stores,
//! registry hives and cache entries. Everything is converted to UTC before
//! it is stored on an artifact.

use chrono::{DateTime, Datelike, TimeZone, Utc};
use thiserror::Error;

/// Seconds between 1601-01-01 and 1970-01-01.
pub const EPOCH_GAP_1601_SECS: i64 = 11_644_473_600;

/// Plausible-timestamp window. Values outside are flagged, never dropped.
pub const SANITY_MIN_YEAR: i32 = 1990;
pub const SANITY_MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EpochKind {
    /// Seconds since 1970-01-01 (cache metadata, cookie expiry).
    UnixSeconds,
    /// Milliseconds since 1970-01-01 (logins store).
    UnixMillis,
    /// Microseconds since 1970-01-01 (places/cookies/form history).
    PrtimeMicros,
    /// Microseconds since 1601-01-01 (Chromium-family stores).
    WebkitMicros,
    /// 100-nanosecond ticks since 1601-01-01 (registry, UserAssist).
    FiletimeTicks,
}

impl EpochKind {
    pub fn label(&self) -> &'static str {
        match self {
            EpochKind::UnixSeconds => "unix-seconds",
            EpochKind::UnixMillis => "unix-millis",
            EpochKind::PrtimeMicros => "prtime-micros",
            EpochKind::WebkitMicros => "webkit-micros",
            EpochKind::FiletimeTicks => "filetime-ticks",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeError {
    #[error("timestamp overflows the representable range: {0} ({1})")]
    Invalid(i64, &'static str),
}

/// A UTC timestamp plus a plausibility flag set at conversion time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizedTime {
    pub at: DateTime<Utc>,
    pub in_window: bool,
}

impl NormalizedTime {
    fn new(at: DateTime<Utc>) -> Self {
        NormalizedTime {
            at,
            in_window: (SANITY_MIN_YEAR..SANITY_MAX_YEAR).contains(&at.year()),
        }
    }
}

/// Convert a raw store integer into UTC according to its epoch kind.
pub fn normalize_timestamp(raw: i64, kind: EpochKind) -> Result<NormalizedTime, TimeError> {
    let micros = match kind {
        EpochKind::UnixSeconds => raw.checked_mul(1_000_000),
        EpochKind::UnixMillis => raw.checked_mul(1_000),
        EpochKind::PrtimeMicros => Some(raw),
        EpochKind::WebkitMicros => raw.checked_sub(EPOCH_GAP_1601_SECS * 1_000_000),
        EpochKind::FiletimeTicks => (raw / 10).checked_sub(EPOCH_GAP_1601_SECS * 1_000_000),
    }
    .ok_or(TimeError::Invalid(raw, kind.label()))?;
    match Utc.timestamp_micros(micros) {
        chrono::LocalResult::Single(at) => Ok(NormalizedTime::new(at)),
        _ => Err(TimeError::Invalid(raw, kind.label())),
    }
}

/// FILETIME (100-ns ticks since 1601-01-01) to UTC. Unsigned on purpose:
/// registry values store the full 64-bit range.
pub fn filetime_to_utc(ticks: u64) -> Result<NormalizedTime, TimeError> {
    let micros = (ticks / 10) as i128 - (EPOCH_GAP_1601_SECS as i128) * 1_000_000;
    let micros = i64::try_from(micros)
        .map_err(|_| TimeError::Invalid(ticks as i64, "filetime-ticks"))?;
    match Utc.timestamp_micros(micros) {
        chrono::LocalResult::Single(at) => Ok(NormalizedTime::new(at)),
        _ => Err(TimeError::Invalid(ticks as i64, "filetime-ticks")),
    }
}

/// Fixed-width RFC 3339 with microseconds, so lexicographic order equals
/// chronological order in manifests and reports.
pub fn format_utc(at: &DateTime<Utc>) -> String {
    at.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string()
}

pub fn parse_utc(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

/// True when an integer is a plausible timestamp under `kind`.
pub fn plausible_as(raw: i64, kind: EpochKind) -> bool {
    normalize_timestamp(raw, kind)
        .map(|t| t.in_window)
        .unwrap_or(false)
}

/// True when an integer looks like a timestamp in any supported epoch.
pub fn plausible_any_epoch(raw: i64) -> bool {
    [
        EpochKind::UnixSeconds,
        EpochKind::UnixMillis,
        EpochKind::PrtimeMicros,
        EpochKind::WebkitMicros,
        EpochKind::FiletimeTicks,
    ]
    .iter()
    .any(|k| plausible_as(raw, *k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unix_zero_is_epoch() {
        let t = normalize_timestamp(0, EpochKind::UnixSeconds).unwrap();
        assert_eq!(format_utc(&t.at), "1970-01-01T00:00:00.000000Z");
        assert!(!t.in_window); // before 1990
    }

    #[test]
    fn prtime_example() {
        let t = normalize_timestamp(1_321_009_871_000_000, EpochKind::PrtimeMicros).unwrap();
        assert_eq!(format_utc(&t.at), "2011-11-11T11:11:11.000000Z");
        assert!(t.in_window);
    }

    #[test]
    fn filetime_epoch_gap() {
        let t = filetime_to_utc(116_444_736_000_000_000).unwrap();
        assert_eq!(format_utc(&t.at), "1970-01-01T00:00:00.000000Z");
        // and via the generic path
        let t2 = normalize_timestamp(116_444_736_000_000_000, EpochKind::FiletimeTicks).unwrap();
        assert_eq!(t2.at, t.at);
    }

    #[test]
    fn filetime_zero_is_1601() {
        let t = filetime_to_utc(0).unwrap();
        assert_eq!(format_utc(&t.at), "1601-01-01T00:00:00.000000Z");
        assert!(!t.in_window);
    }

    #[test]
    fn filetime_2021() {
        let t = filetime_to_utc(132_539_328_000_000_000).unwrap();
        assert_eq!(format_utc(&t.at), "2021-01-01T00:00:00.000000Z");
    }

    #[test]
    fn unix_millis_and_webkit() {
        let t = normalize_timestamp(1_623_456_789_000, EpochKind::UnixMillis).unwrap();
        assert_eq!(format_utc(&t.at), "2021-06-12T00:13:09.000000Z");
        let w = normalize_timestamp(
            (EPOCH_GAP_1601_SECS + 1_623_456_789) * 1_000_000,
            EpochKind::WebkitMicros,
        )
        .unwrap();
        assert_eq!(w.at, t.at);
    }

    #[test]
    fn overflow_is_invalid() {
        assert!(normalize_timestamp(i64::MAX, EpochKind::UnixSeconds).is_err());
        assert!(normalize_timestamp(i64::MAX, EpochKind::PrtimeMicros).is_err());
    }

    #[test]
    fn out_of_window_flagged_not_dropped() {
        let t = normalize_timestamp(1, EpochKind::UnixSeconds).unwrap();
        assert!(!t.in_window);
        // 4.2e9 s is in 2103, past the window
        let far = normalize_timestamp(4_200_000_000, EpochKind::UnixSeconds).unwrap();
        assert!(!far.in_window);
    }

    #[test]
    fn window_edges() {
        // 1990-01-01 is inside, 2100-01-01 is outside (half-open window)
        let lo = Utc.with_ymd_and_hms(1990, 1, 1, 0, 0, 0).unwrap();
        let t = normalize_timestamp(lo.timestamp(), EpochKind::UnixSeconds).unwrap();
        assert!(t.in_window);
        let hi = Utc.with_ymd_and_hms(2100, 1, 1, 0, 0, 0).unwrap();
        let t = normalize_timestamp(hi.timestamp(), EpochKind::UnixSeconds).unwrap();
        assert!(!t.in_window);
    }
}
