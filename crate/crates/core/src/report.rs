use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Unsat,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail | Verdict::Unsat => 1,
            Verdict::Inconclusive => 3,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unsat => "unsat",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A counterexample: a human-readable line plus the structured data needed
/// to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    pub text: String,
    pub data: Value,
}

impl Witness {
    pub fn new(kind: impl Into<String>, text: impl Into<String>, data: Value) -> Self {
        Witness {
            kind: kind.into(),
            text: text.into(),
            data,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub counters: BTreeMap<String, u64>,
    pub details: Value,
    pub instances_checked: u64,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn new(command: impl Into<String>, verdict: Verdict) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            verdict,
            witnesses: Vec::new(),
            counters: BTreeMap::new(),
            details: Value::Null,
            instances_checked: 0,
            elapsed_ms: 0,
        }
    }

    /// Pass when `witness` is `None`, fail with it otherwise.
    pub fn from_witness(command: impl Into<String>, witness: Option<Witness>) -> Self {
        let mut r = Report::new(command, if witness.is_some() { Verdict::Fail } else { Verdict::Pass });
        r.witnesses.extend(witness);
        r
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn counter(mut self, name: &str, value: u64) -> Self {
        self.counters.insert(name.to_string(), value);
        self
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn with_instances(mut self, n: u64) -> Self {
        self.instances_checked = n;
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.elapsed_ms = start.elapsed().as_millis() as u64;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with timing removed, for determinism comparisons.
    pub fn to_json_untimed(&self) -> String {
        let mut r = self.clone();
        r.elapsed_ms = 0;
        r.to_json()
    }

    pub fn render_text(&self, max_size: Option<usize>) -> String {
        let mut out = format!("{}: {}\n", self.command, self.verdict);
        if self.witnesses.is_empty() {
            match max_size {
                Some(n) => out.push_str(&format!("no violations in N≤{n} sweep\n")),
                None => out.push_str("no violations\n"),
            }
        }
        for w in &self.witnesses {
            out.push_str(&format!("  [{}] {}\n", w.kind, w.text));
        }
        for (k, v) in &self.counters {
            out.push_str(&format!("  {k}: {v}\n"));
        }
        out.push_str(&format!("  instances checked: {}\n", self.instances_checked));
        out
    }
}
