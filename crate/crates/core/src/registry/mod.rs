//! Windows registry hive (regf) parsing and TOR installation/execution
//! indicators.

mod hive;
mod indicators;

pub use hive::{parse_hive, HiveError, HiveKey, HiveParse, HiveValue};
pub use indicators::{
    diff_hives, filetime_to_utc, find_tor_indicators, rot13, ExecutionIndicator, IndicatorSource,
};
