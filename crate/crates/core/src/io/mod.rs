pub mod report;
pub mod snapshot;

pub use report::{number, summary_csv, validate_report, Report, ReportCheck, ReportSeries};
pub use snapshot::{Snapshot, SnapshotError, FORMAT_VERSION, MAGIC};
