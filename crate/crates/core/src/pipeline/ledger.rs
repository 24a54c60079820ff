use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ingest::{SourceTag, StudentId};

/// Which additional sources each student has paid for, and at which
/// checkpoint. A source is paid for at most once per student.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcquisitionLedger {
    entries: BTreeMap<StudentId, BTreeMap<SourceTag, usize>>,
}

impl AcquisitionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record that `student` acquired `source` at `checkpoint_index`. Returns
    /// false, leaving the ledger untouched, when it was already held.
    pub fn acquire(
        &mut self,
        student: &StudentId,
        source: SourceTag,
        checkpoint_index: usize,
    ) -> bool {
        let sources = self.entries.entry(student.clone()).or_default();
        if sources.contains_key(&source) {
            return false;
        }
        sources.insert(source, checkpoint_index);
        true
    }

    pub fn holds(&self, student: &StudentId, source: SourceTag) -> bool {
        self.acquired_at(student, source).is_some()
    }

    pub fn holds_any(&self, student: &StudentId) -> bool {
        self.entries.get(student).is_some_and(|s| !s.is_empty())
    }

    pub fn acquired_at(&self, student: &StudentId, source: SourceTag) -> Option<usize> {
        self.entries.get(student)?.get(&source).copied()
    }

    /// Number of sources held by `student`.
    pub fn count_for(&self, student: &StudentId) -> usize {
        self.entries.get(student).map_or(0, BTreeMap::len)
    }

    /// Students holding at least one source.
    pub fn students(&self) -> impl Iterator<Item = &StudentId> {
        self.entries
            .iter()
            .filter(|(_, s)| !s.is_empty())
            .map(|(id, _)| id)
    }

    pub fn n_students(&self) -> usize {
        self.students().count()
    }

    pub fn n_entries(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.n_entries() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StudentId, SourceTag, usize)> {
        self.entries
            .iter()
            .flat_map(|(id, s)| s.iter().map(move |(tag, at)| (id, *tag, *at)))
    }
}
