use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::profile::{TuioBlob, TuioCursor, TuioFrame, TuioObject, FSEQ_OUT_OF_BAND};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "lowercase")]
pub enum TuioEntity {
    Cursor(TuioCursor),
    Object(TuioObject),
    Blob(TuioBlob),
}

impl TuioEntity {
    pub fn session_id(&self) -> i32 {
        match self {
            TuioEntity::Cursor(c) => c.session_id,
            TuioEntity::Object(o) => o.session_id,
            TuioEntity::Blob(b) => b.session_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum TuioEvent {
    Added(TuioEntity),
    Updated(TuioEntity),
    Removed { session_id: i32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReconcileState {
    pub alive: BTreeSet<i32>,
    pub last_fseq: Option<i32>,
}

/// Diffs `frame` against the previously alive set.
///
/// A frame whose fseq is not newer than the last accepted one (and is not the
/// out-of-band value -1) is stale: it yields no events and leaves the state
/// untouched.
pub fn reconcile(prev: &ReconcileState, frame: &TuioFrame) -> (ReconcileState, Vec<TuioEvent>) {
    if frame.fseq != FSEQ_OUT_OF_BAND {
        if let Some(last) = prev.last_fseq {
            if frame.fseq <= last {
                return (prev.clone(), Vec::new());
            }
        }
    }
    let entities = frame
        .cursors
        .iter()
        .map(|c| TuioEntity::Cursor(*c))
        .chain(frame.objects.iter().map(|o| TuioEntity::Object(*o)))
        .chain(frame.blobs.iter().map(|b| TuioEntity::Blob(*b)));
    let mut events = Vec::new();
    for e in entities {
        if prev.alive.contains(&e.session_id()) {
            events.push(TuioEvent::Updated(e));
        } else {
            events.push(TuioEvent::Added(e));
        }
    }
    let alive = frame.alive_ids();
    events.extend(prev.alive.difference(&alive).map(|&id| TuioEvent::Removed { session_id: id }));
    let last_fseq = if frame.fseq == FSEQ_OUT_OF_BAND { prev.last_fseq } else { Some(frame.fseq) };
    (ReconcileState { alive, last_fseq }, events)
}

/// Owns the per-source reconcile state.
#[derive(Debug, Default)]
pub struct Reconciler {
    state: ReconcileState,
}

impl Reconciler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> &ReconcileState {
        &self.state
    }

    pub fn push(&mut self, frame: &TuioFrame) -> Vec<TuioEvent> {
        let (next, events) = reconcile(&self.state, frame);
        self.state = next;
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(fseq: i32, ids: &[i32]) -> TuioFrame {
        let mut f = TuioFrame::new(fseq);
        f.cursors = ids.iter().map(|&id| TuioCursor { session_id: id, x: 0.5, y: 0.5, ..Default::default() }).collect();
        f
    }

    fn summary(events: &[TuioEvent]) -> (Vec<i32>, Vec<i32>, Vec<i32>) {
        let (mut a, mut u, mut r) = (vec![], vec![], vec![]);
        for e in events {
            match e {
                TuioEvent::Added(x) => a.push(x.session_id()),
                TuioEvent::Updated(x) => u.push(x.session_id()),
                TuioEvent::Removed { session_id } => r.push(*session_id),
            }
        }
        (a, u, r)
    }

    #[test]
    fn added_and_removed() {
        let prev = ReconcileState { alive: [1, 2].into(), last_fseq: Some(1) };
        let (next, ev) = reconcile(&prev, &frame(2, &[2, 3]));
        assert_eq!(summary(&ev), (vec![3], vec![2], vec![1]));
        assert_eq!(next.alive, [2, 3].into());
    }

    #[test]
    fn identical_alive_updates_only() {
        let prev = ReconcileState { alive: [1, 2].into(), last_fseq: Some(1) };
        let (_, ev) = reconcile(&prev, &frame(2, &[1, 2]));
        assert_eq!(summary(&ev), (vec![], vec![1, 2], vec![]));
    }

    #[test]
    fn stale_frames_dropped() {
        let mut r = Reconciler::new();
        r.push(&frame(7, &[1]));
        assert!(r.push(&frame(5, &[2])).is_empty());
        assert!(r.push(&frame(7, &[2])).is_empty());
        assert_eq!(r.state().alive, [1].into());
        // out-of-band frames always apply and do not move the sequence
        let ev = r.push(&frame(FSEQ_OUT_OF_BAND, &[1, 4]));
        assert_eq!(summary(&ev), (vec![4], vec![1], vec![]));
        assert_eq!(r.state().last_fseq, Some(7));
    }

    #[test]
    fn empty_frame_removes_everything() {
        let prev = ReconcileState { alive: [1, 2, 3].into(), last_fseq: Some(9) };
        let (next, ev) = reconcile(&prev, &TuioFrame::new(10));
        assert_eq!(summary(&ev), (vec![], vec![], vec![1, 2, 3]));
        assert!(next.alive.is_empty());
    }
}
