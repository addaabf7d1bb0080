//! Wall-clock access for run metadata.
//!
//! When `SOURCE_DATE_EPOCH` is set, every timestamp written by the toolkit is
//! pinned to that instant so repeated runs produce byte-identical files.

use chrono::{DateTime, SecondsFormat, Utc};

pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

pub fn now() -> DateTime<Utc> {
    std::env::var(SOURCE_DATE_EPOCH)
        .ok()
        .and_then(|raw| raw.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now)
}

/// RFC 3339 rendering with second precision.
pub fn now_rfc3339() -> String {
    now().to_rfc3339_opts(SecondsFormat::Secs, true)
}
