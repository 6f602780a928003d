//! Ordered event queue with simulated time.
//!
//! Events are keyed by `(fire_at, sequence)`, where `sequence` is a
//! monotone insertion counter, so dispatch order is a strict total order
//! that does not depend on the payload type. Payloads live in a slab;
//! the heap only holds small keys, which keeps sift operations cheap and
//! makes cancellation O(1).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::time::SimTime;

/// Handle returned by [`EventQueue::schedule`], usable with [`EventQueue::cancel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ticket {
    slot: u32,
    generation: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events_processed: u64,
}

struct Slot<E> {
    generation: u32,
    event: Option<E>,
}

pub struct EventQueue<E> {
    now: SimTime,
    next_sequence: u64,
    heap: BinaryHeap<Reverse<(SimTime, u64, u32, u32)>>,
    slots: Vec<Slot<E>>,
    free: Vec<u32>,
    live: usize,
    processed: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_sequence: 0,
            heap: BinaryHeap::new(),
            slots: Vec::new(),
            free: Vec::new(),
            live: 0,
            processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of scheduled, not-yet-cancelled events.
    pub fn pending(&self) -> usize {
        self.live
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    /// Schedules `event` to fire at `at`.
    ///
    /// Panics if `at` is earlier than the current time: that can only come
    /// from a bug in an event handler.
    pub fn schedule(&mut self, at: SimTime, event: E) -> Ticket {
        assert!(at >= self.now, "event scheduled in the past: at={at} now={}", self.now);
        let slot = match self.free.pop() {
            Some(idx) => {
                let s = &mut self.slots[idx as usize];
                s.generation = s.generation.wrapping_add(1);
                s.event = Some(event);
                idx
            }
            None => {
                self.slots.push(Slot { generation: 0, event: Some(event) });
                (self.slots.len() - 1) as u32
            }
        };
        let generation = self.slots[slot as usize].generation;
        let seq = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Reverse((at, seq, slot, generation)));
        self.live += 1;
        Ticket { slot, generation }
    }

    pub fn schedule_in(&mut self, delay: SimTime, event: E) -> Ticket {
        let at = self.now + delay;
        self.schedule(at, event)
    }

    /// Cancels a pending event. Returns false if it already fired or was cancelled.
    pub fn cancel(&mut self, ticket: Ticket) -> bool {
        match self.slots.get_mut(ticket.slot as usize) {
            Some(s) if s.generation == ticket.generation && s.event.is_some() => {
                s.event = None;
                self.free.push(ticket.slot);
                self.live -= 1;
                true
            }
            _ => false,
        }
    }

    /// Removes and returns the next live event with `fire_at <= t_end`,
    /// advancing the clock to its fire time.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<E> {
        while let Some(&Reverse((at, _, slot, generation))) = self.heap.peek() {
            if at > t_end {
                return None;
            }
            self.heap.pop();
            let s = &mut self.slots[slot as usize];
            if s.generation != generation {
                continue;
            }
            let Some(event) = s.event.take() else {
                continue;
            };
            self.free.push(slot);
            self.live -= 1;
            debug_assert!(at >= self.now);
            self.now = at;
            self.processed += 1;
            return Some(event);
        }
        None
    }

    /// Time of the earliest live event, if any.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        while let Some(&Reverse((at, _, slot, generation))) = self.heap.peek() {
            let s = &self.slots[slot as usize];
            if s.generation == generation && s.event.is_some() {
                return Some(at);
            }
            self.heap.pop();
        }
        None
    }

    /// Dispatches every event with `fire_at <= t_end` in key order.
    ///
    /// If events remain beyond `t_end` the clock is left at `t_end`;
    /// if the queue drains first the clock stays at the last event time.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> RunStats
    where
        F: FnMut(&mut Self, E),
    {
        let before = self.processed;
        while let Some(ev) = self.pop_until(t_end) {
            handler(self, ev);
        }
        if self.peek_time().is_some() && self.now < t_end {
            self.now = t_end;
        }
        RunStats { events_processed: self.processed - before }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fires_at_scheduled_time() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_micros(5), 'a');
        let mut seen = Vec::new();
        q.run_until(SimTime::from_millis(1), |q, e| seen.push((q.now(), e)));
        assert_eq!(seen, vec![(SimTime::from_micros(5), 'a')]);
    }

    #[test]
    fn equal_times_follow_insertion_order() {
        let mut q = EventQueue::new();
        let t = SimTime::from_micros(5);
        q.schedule(t, 'A');
        q.schedule(t, 'B');
        let mut seen = Vec::new();
        q.run_until(t, |_, e| seen.push(e));
        assert_eq!(seen, vec!['A', 'B']);
    }

    #[test]
    fn cancelled_event_never_fires() {
        let mut q = EventQueue::new();
        let t = q.schedule(SimTime::from_micros(1), 1);
        q.schedule(SimTime::from_micros(2), 2);
        assert!(q.cancel(t));
        assert!(!q.cancel(t));
        let mut seen = Vec::new();
        q.run_until(SimTime::from_micros(10), |_, e| seen.push(e));
        assert_eq!(seen, vec![2]);
    }

    #[test]
    fn stale_ticket_does_not_cancel_reused_slot() {
        let mut q = EventQueue::new();
        let t = q.schedule(SimTime::from_micros(1), 1);
        assert_eq!(q.pop_until(SimTime::MAX), Some(1));
        // slot is reused by the next schedule
        q.schedule(SimTime::from_micros(2), 2);
        assert!(!q.cancel(t));
        assert_eq!(q.pop_until(SimTime::MAX), Some(2));
    }

    #[test]
    fn empty_queue_runs_zero_events() {
        let mut q: EventQueue<()> = EventQueue::new();
        let stats = q.run_until(SimTime::from_millis(1000), |_, _| {});
        assert_eq!(stats.events_processed, 0);
    }

    #[test]
    fn run_until_stops_at_horizon() {
        let mut q = EventQueue::new();
        for us in 1..=3 {
            q.schedule(SimTime::from_micros(us), us);
        }
        let stats = q.run_until(SimTime::from_micros(2), |_, _| {});
        assert_eq!(stats.events_processed, 2);
        assert_eq!(q.now(), SimTime::from_micros(2));
        assert_eq!(q.pending(), 1);
    }

    #[test]
    fn handler_inserted_earlier_event_preempts_pending() {
        // Script: A@1us schedules C@2us; B is pending @3us.
        // Expected dispatch by hand: A, C, B.
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_micros(1), 'A');
        q.schedule(SimTime::from_micros(3), 'B');
        let mut seen = Vec::new();
        q.run_until(SimTime::from_micros(10), |q, e| {
            seen.push(e);
            if e == 'A' {
                q.schedule(SimTime::from_micros(2), 'C');
            }
        });
        assert_eq!(seen, vec!['A', 'C', 'B']);
    }

    #[test]
    #[should_panic(expected = "scheduled in the past")]
    fn scheduling_in_the_past_is_a_fault() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_micros(5), ());
        q.pop_until(SimTime::MAX);
        q.schedule(SimTime::from_micros(4), ());
    }

    proptest! {
        #[test]
        fn dispatch_is_sorted_by_time_then_insertion(
            times in proptest::collection::vec(0u64..50, 1..200),
            cancel_mask in proptest::collection::vec(any::<bool>(), 200),
        ) {
            let mut q = EventQueue::new();
            let mut tickets = Vec::new();
            for (i, t) in times.iter().enumerate() {
                tickets.push(q.schedule(SimTime::from_nanos(*t), i));
            }
            let mut expected: Vec<(u64, usize)> = Vec::new();
            for (i, t) in times.iter().enumerate() {
                if cancel_mask[i] {
                    q.cancel(tickets[i]);
                } else {
                    expected.push((*t, i));
                }
            }
            expected.sort();
            let mut seen = Vec::new();
            let mut last = SimTime::ZERO;
            q.run_until(SimTime::MAX, |q, i| {
                assert!(q.now() >= last);
                last = q.now();
                seen.push((q.now().as_nanos(), i));
            });
            prop_assert_eq!(seen, expected);
        }
    }
}
