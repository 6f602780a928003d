use crate::fabric::SeqRange;

/// Sorted set of disjoint, non-adjacent byte ranges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RangeSet {
    ranges: Vec<SeqRange>,
    bytes: u64,
}

impl RangeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes
    }

    pub fn ranges(&self) -> &[SeqRange] {
        &self.ranges
    }

    pub fn first(&self) -> Option<SeqRange> {
        self.ranges.first().copied()
    }

    pub fn highest_end(&self) -> Option<u64> {
        self.ranges.last().map(|r| r.end)
    }

    /// Unions `r` into the set; returns how many bytes were newly covered.
    pub fn insert(&mut self, r: SeqRange) -> u64 {
        if r.is_empty() {
            return 0;
        }
        // first range whose end >= r.start (could merge)
        let lo = self.ranges.partition_point(|x| x.end < r.start);
        // first range whose start > r.end (cannot merge)
        let hi = self.ranges.partition_point(|x| x.start <= r.end);
        if lo == hi {
            self.ranges.insert(lo, r);
            self.bytes += r.len();
            return r.len();
        }
        let merged_start = r.start.min(self.ranges[lo].start);
        let merged_end = r.end.max(self.ranges[hi - 1].end);
        let old: u64 = self.ranges[lo..hi].iter().map(SeqRange::len).sum();
        self.ranges.drain(lo + 1..hi);
        self.ranges[lo] = SeqRange::new(merged_start, merged_end);
        let added = (merged_end - merged_start) - old;
        self.bytes += added;
        added
    }

    /// Forgets every byte below `x`.
    pub fn remove_below(&mut self, x: u64) {
        let cut = self.ranges.partition_point(|r| r.end <= x);
        let dropped: u64 = self.ranges[..cut].iter().map(SeqRange::len).sum();
        self.ranges.drain(..cut);
        self.bytes -= dropped;
        if let Some(first) = self.ranges.first_mut() {
            if first.start < x {
                self.bytes -= x - first.start;
                first.start = x;
            }
        }
    }

    /// Pops the first range if it starts at or below `x`.
    pub fn pop_front_if_reaches(&mut self, x: u64) -> Option<SeqRange> {
        match self.ranges.first() {
            Some(r) if r.start <= x => {
                let r = self.ranges.remove(0);
                self.bytes -= r.len();
                Some(r)
            }
            _ => None,
        }
    }

    /// Bytes of `[a, b)` covered by the set.
    pub fn covered(&self, a: u64, b: u64) -> u64 {
        if b <= a {
            return 0;
        }
        let start = self.ranges.partition_point(|r| r.end <= a);
        let mut sum = 0;
        for r in &self.ranges[start..] {
            if r.start >= b {
                break;
            }
            sum += r.end.min(b) - r.start.max(a);
        }
        sum
    }

    /// First maximal uncovered sub-range of `[from, until)`.
    pub fn first_gap(&self, from: u64, until: u64) -> Option<SeqRange> {
        if until <= from {
            return None;
        }
        let mut cursor = from;
        let start = self.ranges.partition_point(|r| r.end <= from);
        for r in &self.ranges[start..] {
            if r.start > cursor {
                return Some(SeqRange::new(cursor, r.start.min(until)));
            }
            cursor = cursor.max(r.end);
            if cursor >= until {
                return None;
            }
        }
        Some(SeqRange::new(cursor, until))
    }

    pub fn contains(&self, r: SeqRange) -> bool {
        self.covered(r.start, r.end) == r.len()
    }
}
