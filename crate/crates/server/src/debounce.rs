//! Per-document debounce: each edit supersedes the pending run for its document.

use std::collections::HashMap;
use std::time::Duration;

use tokio::time::Instant;

pub const DEFAULT_WINDOW: Duration = Duration::from_millis(250);

#[derive(Debug, Clone)]
pub struct Debouncer {
    window: Duration,
    next: u64,
    pending: HashMap<String, (u64, Instant)>,
}

impl Debouncer {
    pub fn new(window: Duration) -> Self {
        Debouncer { window, next: 0, pending: HashMap::new() }
    }

    pub fn window(&self) -> Duration {
        self.window
    }

    pub fn set_window(&mut self, window: Duration) {
        self.window = window;
    }

    /// Records an edit; returns the generation and deadline of the run it schedules.
    pub fn edit(&mut self, uri: &str, now: Instant) -> (u64, Instant) {
        self.next += 1;
        let deadline = now + self.window;
        self.pending.insert(uri.to_owned(), (self.next, deadline));
        (self.next, deadline)
    }

    /// Whether the run `generation` for `uri` is still the latest and due; consumes it if so.
    pub fn fire(&mut self, uri: &str, generation: u64, now: Instant) -> bool {
        match self.pending.get(uri) {
            Some(&(g, deadline)) if g == generation && now >= deadline => {
                self.pending.remove(uri);
                true
            }
            _ => false,
        }
    }

    pub fn is_pending(&self, uri: &str) -> bool {
        self.pending.contains_key(uri)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn later_edit_supersedes() {
        let t0 = Instant::now();
        let mut d = Debouncer::new(Duration::from_millis(250));
        let (g1, _) = d.edit("a", t0);
        let (g2, dl2) = d.edit("a", t0 + Duration::from_millis(50));
        assert!(!d.fire("a", g1, t0 + Duration::from_millis(250)));
        assert!(!d.fire("a", g2, dl2 - Duration::from_millis(1)));
        assert!(d.fire("a", g2, dl2));
        assert!(!d.fire("a", g2, dl2));
        assert!(!d.is_pending("a"));
    }

    #[test]
    fn documents_are_independent() {
        let t0 = Instant::now();
        let mut d = Debouncer::new(Duration::from_millis(10));
        let (ga, _) = d.edit("a", t0);
        let (gb, _) = d.edit("b", t0);
        let later = t0 + Duration::from_millis(10);
        assert!(d.fire("a", ga, later));
        assert!(d.fire("b", gb, later));
    }

    proptest! {
        /// Exactly one run fires per burst of edits separated by less than the window.
        #[test]
        fn one_fire_per_burst(gaps in proptest::collection::vec(0u64..600, 1..40)) {
            let window = Duration::from_millis(250);
            let t0 = Instant::now();
            let mut d = Debouncer::new(window);
            let mut timers: Vec<(Instant, u64)> = Vec::new();
            let mut now = t0;
            let mut bursts = 1;
            for (i, gap) in gaps.iter().enumerate() {
                if i > 0 {
                    now += Duration::from_millis(*gap);
                    if *gap > 250 {
                        bursts += 1;
                    }
                }
                let (g, dl) = d.edit("u", now);
                timers.push((dl, g));
            }
            timers.sort();
            let mut fired = 0;
            let edits: Vec<Instant> = {
                let mut n = t0;
                gaps.iter().enumerate().map(|(i, g)| { if i > 0 { n += Duration::from_millis(*g); } n }).collect()
            };
            let mut d2 = Debouncer::new(window);
            let mut events: Vec<(Instant, u8, u64)> = edits.iter().map(|t| (*t, 0u8, 0u64)).collect();
            events.extend(timers.iter().map(|(t, g)| (*t, 1u8, *g)));
            events.sort();
            for (t, kind, g) in events {
                if kind == 0 {
                    d2.edit("u", t);
                } else if d2.fire("u", g, t) {
                    fired += 1;
                }
            }
            prop_assert_eq!(fired, bursts);
        }
    }
}
