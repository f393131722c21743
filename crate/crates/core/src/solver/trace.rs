use std::fmt;

/// Which stage of the two-stage procedure produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Gd,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Init => "init",
            Phase::Gd => "gd",
        })
    }
}

/// One iterate's diagnostics. Error fields are filled only when ground truth
/// was supplied; factor-space fields only exist in the gradient phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// `F(U, V, S)` in the gradient phase, `L(X + S)` during initialization.
    pub objective: f64,
    pub rel_err_x: Option<f64>,
    pub rel_err_s: Option<f64>,
    /// `d²(Z, Z*)`.
    pub d2_z: Option<f64>,
    /// `D(Z, S)`.
    pub combined: Option<f64>,
    /// Wall-clock seconds spent since the previous record.
    pub secs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, mut record: TraceRecord) {
        record.iteration = self.records.len();
        self.records.push(record);
    }

    /// Appends `other`, renumbering so indices keep increasing.
    pub fn extend(&mut self, other: RunTrace) {
        for r in other.records {
            self.push(r);
        }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records of one phase; the position within the slice is the
    /// phase-local iteration number.
    pub fn phase(&self, phase: Phase) -> Vec<&TraceRecord> {
        self.records.iter().filter(|r| r.phase == phase).collect()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Number of gradient-phase updates performed.
    pub fn gd_iterations(&self) -> usize {
        self.phase(Phase::Gd).len().saturating_sub(1)
    }
}
