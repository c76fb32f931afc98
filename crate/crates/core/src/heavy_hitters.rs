//! Space Saving over a stream-summary bucket list.
//!
//! Entries with equal counts share a bucket; buckets form a list in
//! ascending count order, so the minimum is the head bucket and a touch
//! moves one entry at most one bucket to the right. Inside a bucket
//! entries are kept in touch order, and eviction takes the least recently
//! touched minimal entry.

use rustc_hash::FxHashMap;

use crate::types::ItemId;

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SsEntry<P> {
    id: ItemId,
    count: u64,
    pub payload: P,
}

impl<P> SsEntry<P> {
    pub fn id(&self) -> ItemId {
        self.id
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// What [`SpaceSaving::touch`] did to the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Touch {
    /// The id was already monitored.
    Existing,
    /// The id took a free entry.
    Fresh,
    /// The id took over the minimal entry of `old_id`; its payload is stale.
    Evicted { old_id: ItemId },
}

#[derive(Debug, Clone, Copy)]
struct Links {
    bucket: usize,
    prev: usize,
    next: usize,
}

#[derive(Debug, Clone, Copy)]
struct Bucket {
    count: u64,
    head: usize,
    tail: usize,
    prev: usize,
    next: usize,
}

#[derive(Debug, Clone)]
pub struct SpaceSaving<P> {
    capacity: usize,
    entries: Vec<SsEntry<P>>,
    links: Vec<Links>,
    index: FxHashMap<ItemId, usize>,
    buckets: Vec<Bucket>,
    free_buckets: Vec<usize>,
    min_bucket: usize,
    total: u64,
}

impl<P> SpaceSaving<P> {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "Space Saving capacity must be positive");
        SpaceSaving {
            capacity,
            entries: Vec::with_capacity(capacity),
            links: Vec::with_capacity(capacity),
            index: FxHashMap::with_capacity_and_hasher(capacity, Default::default()),
            buckets: Vec::new(),
            free_buckets: Vec::new(),
            min_bucket: NIL,
            total: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Number of touches so far; equals the sum of all counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// The smallest counter when the table is full, else 0.
    pub fn min_count(&self) -> u64 {
        if self.is_full() {
            self.buckets[self.min_bucket].count
        } else {
            0
        }
    }

    pub fn get(&self, id: ItemId) -> Option<&SsEntry<P>> {
        self.index.get(&id).map(|&s| &self.entries[s])
    }

    pub fn get_mut(&mut self, id: ItemId) -> Option<&mut SsEntry<P>> {
        self.index.get(&id).map(|&s| &mut self.entries[s])
    }

    pub fn iter(&self) -> impl Iterator<Item = &SsEntry<P>> {
        self.entries.iter()
    }

    /// Sum of `size(payload)` over live entries.
    pub fn footprint(&self, size: impl Fn(&P) -> usize) -> usize {
        self.entries.iter().map(|e| size(&e.payload)).sum()
    }

    /// Counts one arrival of `id`. A fresh entry gets its payload from
    /// `init`; an evicted entry keeps the previous owner's payload.
    pub fn touch(&mut self, id: ItemId, init: impl FnOnce() -> P) -> (Touch, &mut SsEntry<P>) {
        self.total += 1;
        if let Some(&slot) = self.index.get(&id) {
            self.increment(slot);
            return (Touch::Existing, &mut self.entries[slot]);
        }
        if self.entries.len() < self.capacity {
            let slot = self.entries.len();
            self.entries.push(SsEntry { id, count: 1, payload: init() });
            self.links.push(Links { bucket: NIL, prev: NIL, next: NIL });
            self.index.insert(id, slot);
            let b = if self.min_bucket != NIL && self.buckets[self.min_bucket].count == 1 {
                self.min_bucket
            } else {
                self.new_bucket(1, NIL, self.min_bucket)
            };
            self.push_entry(b, slot);
            return (Touch::Fresh, &mut self.entries[slot]);
        }
        let slot = self.buckets[self.min_bucket].head;
        let old_id = self.entries[slot].id;
        self.index.remove(&old_id);
        self.index.insert(id, slot);
        self.entries[slot].id = id;
        self.increment(slot);
        (Touch::Evicted { old_id }, &mut self.entries[slot])
    }

    fn increment(&mut self, slot: usize) {
        let b = self.links[slot].bucket;
        let target = self.buckets[b].count + 1;
        self.entries[slot].count = target;
        self.unlink_entry(slot);
        let nb = self.buckets[b].next;
        if nb != NIL && self.buckets[nb].count == target {
            self.push_entry(nb, slot);
            if self.buckets[b].head == NIL {
                self.drop_bucket(b);
            }
        } else if self.buckets[b].head == NIL {
            self.buckets[b].count = target;
            self.push_entry(b, slot);
        } else {
            let fresh = self.new_bucket(target, b, nb);
            self.push_entry(fresh, slot);
        }
    }

    fn new_bucket(&mut self, count: u64, prev: usize, next: usize) -> usize {
        let bucket = Bucket { count, head: NIL, tail: NIL, prev, next };
        let b = match self.free_buckets.pop() {
            Some(b) => {
                self.buckets[b] = bucket;
                b
            }
            None => {
                self.buckets.push(bucket);
                self.buckets.len() - 1
            }
        };
        if prev == NIL {
            self.min_bucket = b;
        } else {
            self.buckets[prev].next = b;
        }
        if next != NIL {
            self.buckets[next].prev = b;
        }
        b
    }

    fn drop_bucket(&mut self, b: usize) {
        let Bucket { prev, next, .. } = self.buckets[b];
        if prev == NIL {
            self.min_bucket = next;
        } else {
            self.buckets[prev].next = next;
        }
        if next != NIL {
            self.buckets[next].prev = prev;
        }
        self.free_buckets.push(b);
    }

    fn push_entry(&mut self, b: usize, slot: usize) {
        let tail = self.buckets[b].tail;
        self.links[slot] = Links { bucket: b, prev: tail, next: NIL };
        if tail == NIL {
            self.buckets[b].head = slot;
        } else {
            self.links[tail].next = slot;
        }
        self.buckets[b].tail = slot;
    }

    fn unlink_entry(&mut self, slot: usize) {
        let Links { bucket, prev, next } = self.links[slot];
        if prev == NIL {
            self.buckets[bucket].head = next;
        } else {
            self.links[prev].next = next;
        }
        if next == NIL {
            self.buckets[bucket].tail = prev;
        } else {
            self.links[next].prev = prev;
        }
    }

    #[cfg(test)]
    fn check_structure(&self) {
        let mut b = self.min_bucket;
        let mut prev_count = 0;
        let mut seen = 0;
        while b != NIL {
            let bucket = self.buckets[b];
            assert!(bucket.count > prev_count);
            assert_ne!(bucket.head, NIL, "empty bucket left in list");
            let mut s = bucket.head;
            while s != NIL {
                assert_eq!(self.entries[s].count, bucket.count);
                assert_eq!(self.links[s].bucket, b);
                seen += 1;
                s = self.links[s].next;
            }
            prev_count = bucket.count;
            b = bucket.next;
        }
        assert_eq!(seen, self.entries.len());
        assert_eq!(self.entries.iter().map(|e| e.count).sum::<u64>(), self.total);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(ss: &mut SpaceSaving<()>, id: u64) -> Touch {
        let t = ss.touch(ItemId(id), || ()).0;
        ss.check_structure();
        t
    }

    #[test]
    fn fresh_table() {
        let mut ss = SpaceSaving::<()>::new(4);
        assert_eq!(ss.min_count(), 0);
        assert_eq!(touch(&mut ss, 1), Touch::Fresh);
        assert_eq!(ss.get(ItemId(1)).unwrap().count(), 1);
        assert_eq!(ss.min_count(), 0);
    }

    #[test]
    fn capacity_two_hand_trace() {
        let mut ss = SpaceSaving::<()>::new(2);
        assert_eq!(touch(&mut ss, 'a' as u64), Touch::Fresh);
        assert_eq!(touch(&mut ss, 'a' as u64), Touch::Existing);
        assert_eq!(touch(&mut ss, 'b' as u64), Touch::Fresh);
        assert_eq!(touch(&mut ss, 'c' as u64), Touch::Evicted { old_id: ItemId('b' as u64) });
        assert_eq!(ss.get(ItemId('a' as u64)).unwrap().count(), 2);
        assert_eq!(ss.get(ItemId('c' as u64)).unwrap().count(), 2);
        assert!(ss.get(ItemId('b' as u64)).is_none());
        assert_eq!(ss.min_count(), 2);
        assert_eq!(ss.total(), 4);
    }

    #[test]
    fn newcomer_inherits_min_plus_one() {
        let mut ss = SpaceSaving::<()>::new(2);
        for _ in 0..4 {
            touch(&mut ss, 1);
        }
        for _ in 0..6 {
            touch(&mut ss, 2);
        }
        assert_eq!(ss.min_count(), 4);
        touch(&mut ss, 3);
        assert_eq!(ss.get(ItemId(3)).unwrap().count(), 5);
    }

    #[test]
    fn evicts_least_recent_among_minimal() {
        let mut ss = SpaceSaving::<()>::new(3);
        touch(&mut ss, 1);
        touch(&mut ss, 2);
        touch(&mut ss, 3);
        assert_eq!(touch(&mut ss, 4), Touch::Evicted { old_id: ItemId(1) });
        assert_eq!(touch(&mut ss, 5), Touch::Evicted { old_id: ItemId(2) });
    }

    #[test]
    fn evicted_payload_is_retained() {
        let mut ss = SpaceSaving::<Vec<u32>>::new(1);
        ss.touch(ItemId(1), Vec::new).1.payload.push(7);
        let (t, e) = ss.touch(ItemId(2), Vec::new);
        assert_eq!(t, Touch::Evicted { old_id: ItemId(1) });
        assert_eq!(e.payload, vec![7]);
        assert_eq!(ss.footprint(Vec::len), 1);
    }

    #[test]
    fn long_pseudo_random_run_keeps_structure() {
        let mut ss = SpaceSaving::<()>::new(16);
        let mut x = 12345u64;
        for _ in 0..20_000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let id = (x >> 33) % 64;
            ss.touch(ItemId(id * id % 97), || ());
        }
        ss.check_structure();
        assert!(ss.min_count() <= ss.total() / 16);
    }
}
