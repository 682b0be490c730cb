//! Bounded, least-recently-used cache of source routes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::RouteCacheError;
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub route: Vec<NodeId>,
    pub inserted: SimTime,
    pub last_used: SimTime,
    /// Logical recency stamp; strictly increasing across touches.
    stamp: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Inserted {
    Stored,
    Refreshed,
    /// Stored after evicting the least recently used route.
    Evicted(Vec<NodeId>),
}

/// Routes all start at the cache owner. Lookups also consider prefixes, so a
/// route `[A, B, C, D]` answers queries for `B`, `C` and `D`.
#[derive(Clone, Debug)]
pub struct RouteCache {
    owner: NodeId,
    capacity: usize,
    clock: u64,
    next_id: u64,
    entries: BTreeMap<u64, CacheEntry>,
    by_route: HashMap<Vec<NodeId>, u64>,
    by_stamp: BTreeMap<u64, u64>,
    /// Node -> (position in route, entry id).
    by_node: HashMap<NodeId, BTreeSet<(usize, u64)>>,
    by_link: HashMap<(NodeId, NodeId), BTreeSet<u64>>,
}

fn link_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl RouteCache {
    pub const DEFAULT_CAPACITY: usize = 1024;
    pub const MODIFIED_CAPACITY: usize = 256;

    pub fn new(owner: NodeId, capacity: usize) -> Self {
        assert!(capacity > 0, "route cache needs room for one route");
        RouteCache {
            owner,
            capacity,
            clock: 0,
            next_id: 0,
            entries: BTreeMap::new(),
            by_route: HashMap::new(),
            by_stamp: BTreeMap::new(),
            by_node: HashMap::new(),
            by_link: HashMap::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
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

    /// Entries from least to most recently used.
    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.by_stamp.values().map(|id| &self.entries[id])
    }

    pub fn contains(&self, route: &[NodeId]) -> bool {
        self.by_route.contains_key(route)
    }

    fn touch(&mut self, id: u64, now: SimTime) {
        self.clock += 1;
        let e = self.entries.get_mut(&id).expect("indexed entry");
        self.by_stamp.remove(&e.stamp);
        e.stamp = self.clock;
        e.last_used = now;
        self.by_stamp.insert(self.clock, id);
    }

    fn unlink(&mut self, id: u64) -> CacheEntry {
        let e = self.entries.remove(&id).expect("indexed entry");
        self.by_route.remove(&e.route);
        self.by_stamp.remove(&e.stamp);
        for (i, n) in e.route.iter().enumerate().skip(1) {
            if let Some(set) = self.by_node.get_mut(n) {
                set.remove(&(i, id));
            }
        }
        for w in e.route.windows(2) {
            if let Some(set) = self.by_link.get_mut(&link_key(w[0], w[1])) {
                set.remove(&id);
            }
        }
        e
    }

    fn link(&mut self, e: CacheEntry) {
        let id = self.next_id;
        self.next_id += 1;
        for (i, n) in e.route.iter().enumerate().skip(1) {
            self.by_node.entry(*n).or_default().insert((i, id));
        }
        for w in e.route.windows(2) {
            self.by_link.entry(link_key(w[0], w[1])).or_default().insert(id);
        }
        self.by_route.insert(e.route.clone(), id);
        self.by_stamp.insert(e.stamp, id);
        self.entries.insert(id, e);
    }

    pub fn insert(&mut self, route: Vec<NodeId>, now: SimTime) -> Result<Inserted, RouteCacheError> {
        check_route(&route)?;
        if route[0] != self.owner {
            return Err(RouteCacheError::WrongOwner {
                owner: self.owner.0,
                first: route[0].0,
            });
        }
        if let Some(&id) = self.by_route.get(&route) {
            self.touch(id, now);
            return Ok(Inserted::Refreshed);
        }
        let mut outcome = Inserted::Stored;
        if self.entries.len() >= self.capacity {
            let (_, &victim) = self.by_stamp.first_key_value().expect("full cache is non-empty");
            outcome = Inserted::Evicted(self.unlink(victim).route);
        }
        self.clock += 1;
        self.link(CacheEntry {
            route,
            inserted: now,
            last_used: now,
            stamp: self.clock,
        });
        Ok(outcome)
    }

    fn best(&self, dest: NodeId) -> Option<(u64, usize)> {
        let set = self.by_node.get(&dest)?;
        let &(end, _) = set.first()?;
        set.range((end, 0)..=(end, u64::MAX))
            .max_by_key(|(_, id)| self.entries[id].stamp)
            .map(|&(end, id)| (id, end))
    }

    /// Fewest-hop stored route (or route prefix) ending at `dest`; ties go
    /// to the most recently used entry. A hit marks the entry used.
    pub fn lookup(&mut self, dest: NodeId, now: SimTime) -> Option<Vec<NodeId>> {
        let (id, end) = self.best(dest)?;
        self.touch(id, now);
        Some(self.entries[&id].route[..=end].to_vec())
    }

    /// Hop count of the best route to `dest`, without touching it.
    pub fn hops_to(&self, dest: NodeId) -> Option<usize> {
        self.by_node.get(&dest)?.first().map(|&(end, _)| end)
    }

    /// Like [`RouteCache::lookup`] but without marking anything used.
    pub fn peek(&self, dest: NodeId) -> Option<Vec<NodeId>> {
        self.best(dest).map(|(id, end)| self.entries[&id].route[..=end].to_vec())
    }

    /// Cuts every route at the first use of link `a-b` (either direction),
    /// keeping the usable prefix. Returns how many entries were affected.
    pub fn remove_link(&mut self, a: NodeId, b: NodeId) -> usize {
        let ids: Vec<u64> = match self.by_link.get(&link_key(a, b)) {
            Some(set) => set.iter().copied().collect(),
            None => return 0,
        };
        for &id in &ids {
            let mut e = self.unlink(id);
            let cut = e
                .route
                .windows(2)
                .position(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
                .expect("filtered on link");
            e.route.truncate(cut + 1);
            if e.route.len() < 2 {
                continue;
            }
            match self.by_route.get(&e.route).copied() {
                Some(other) => {
                    if self.entries[&other].stamp < e.stamp {
                        let mut o = self.unlink(other);
                        o.stamp = e.stamp;
                        o.last_used = e.last_used;
                        self.link(o);
                    }
                }
                None => self.link(e),
            }
        }
        ids.len()
    }
}

/// Loop-free and at least one hop long.
pub fn check_route(route: &[NodeId]) -> Result<(), RouteCacheError> {
    if route.len() < 2 {
        return Err(RouteCacheError::TooShort);
    }
    if route.iter().enumerate().all(|(i, n)| !route[..i].contains(n)) {
        Ok(())
    } else {
        Err(RouteCacheError::Loop(route.iter().map(|n| n.0).collect()))
    }
}

pub fn has_link(route: &[NodeId], a: NodeId, b: NodeId) -> bool {
    route.windows(2).any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
}
