use serde::{Deserialize, Serialize};

use super::Gesture;

pub const DEFAULT_REQUIRED: usize = 5;

/// Emits a label once it has been seen `required` hops in a row and differs
/// from the last emission.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Debouncer {
    required: usize,
    last_label: Option<Gesture>,
    run_length: usize,
    last_emitted: Option<Gesture>,
}

impl Default for Debouncer {
    fn default() -> Self {
        Self::new(DEFAULT_REQUIRED)
    }
}

impl Debouncer {
    pub fn new(required: usize) -> Self {
        Self { required: required.max(1), last_label: None, run_length: 0, last_emitted: None }
    }

    pub fn required(&self) -> usize {
        self.required
    }

    pub fn last_emitted(&self) -> Option<Gesture> {
        self.last_emitted
    }

    pub fn push(&mut self, label: Gesture) -> Option<Gesture> {
        if self.last_label == Some(label) {
            self.run_length = self.run_length.saturating_add(1);
        } else {
            self.last_label = Some(label);
            self.run_length = 1;
        }
        if self.run_length >= self.required && self.last_emitted != Some(label) {
            self.last_emitted = Some(label);
            return Some(label);
        }
        None
    }
}
