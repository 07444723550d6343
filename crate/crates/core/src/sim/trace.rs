use std::fmt;
use std::io::{self, Write};

use crate::model::Time;

/// One line of the event trace: `time<TAB>kind<TAB>entity<TAB>detail`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: Time,
    pub kind: &'static str,
    pub entity: String,
    pub detail: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.time, self.kind, self.entity, self.detail)
    }
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

pub fn trace_to_string(records: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}
