//! Classic B-tree with pair-write instrumentation, and the experiment that
//! compares its write counts with a B^ε-tree on the same insert stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::betree::{BeTree, TreeParams};
use crate::error::{Error, Result};

/// Pair-write counts of a B-tree.
///
/// `kv_writes` counts pairs placed into a node: each inserted or overwritten
/// pair, plus every pair a split moves (the upper half and the promoted
/// median). `slot_rewrites` additionally counts in-node shifts: every slot
/// whose content changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteCounter {
    pub kv_writes: u64,
    pub leaf_writes: u64,
    pub internal_writes: u64,
    pub slot_rewrites: u64,
}

impl WriteCounter {
    fn add(&mut self, n: u64, leaf: bool) {
        self.kv_writes += n;
        if leaf {
            self.leaf_writes += n;
        } else {
            self.internal_writes += n;
        }
    }

    pub fn delta_since(&self, before: &WriteCounter) -> WriteCounter {
        WriteCounter {
            kv_writes: self.kv_writes - before.kv_writes,
            leaf_writes: self.leaf_writes - before.leaf_writes,
            internal_writes: self.internal_writes - before.internal_writes,
            slot_rewrites: self.slot_rewrites - before.slot_rewrites,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct BNode {
    pairs: Vec<(u64, u64)>,
    children: Vec<usize>,
}

impl BNode {
    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Slots of `new` whose content differs from the same slot of `old`.
fn changed_slots(old: &[(u64, u64)], new: &[(u64, u64)]) -> u64 {
    new.iter()
        .enumerate()
        .filter(|(i, p)| old.get(*i) != Some(p))
        .count() as u64
}

pub struct BTree {
    nodes: Vec<BNode>,
    root: usize,
    max_keys: usize,
    counter: WriteCounter,
}

impl BTree {
    /// A B-tree whose nodes hold at most `max_keys` pairs.
    pub fn new(max_keys: usize) -> Result<Self> {
        if max_keys < 3 {
            return Err(Error::Config(format!("B-tree nodes need at least 3 keys, got {max_keys}")));
        }
        Ok(BTree {
            nodes: vec![BNode::default()],
            root: 0,
            max_keys,
            counter: WriteCounter::default(),
        })
    }

    pub fn counter(&self) -> WriteCounter {
        self.counter
    }

    pub fn get(&self, key: u64) -> Option<u64> {
        let mut id = self.root;
        loop {
            let n = &self.nodes[id];
            match n.pairs.binary_search_by_key(&key, |p| p.0) {
                Ok(i) => return Some(n.pairs[i].1),
                Err(i) if !n.is_leaf() => id = n.children[i],
                Err(_) => return None,
            }
        }
    }

    fn set_pairs(&mut self, id: usize, pairs: Vec<(u64, u64)>) {
        self.counter.slot_rewrites += changed_slots(&self.nodes[id].pairs, &pairs);
        self.nodes[id].pairs = pairs;
    }

    pub fn btree_insert_counted(&mut self, key: u64, value: u64) -> WriteCounter {
        let before = self.counter;
        let mut path = Vec::new();
        let mut id = self.root;
        loop {
            let n = &self.nodes[id];
            match n.pairs.binary_search_by_key(&key, |p| p.0) {
                Ok(i) => {
                    let leaf = n.is_leaf();
                    let mut pairs = n.pairs.clone();
                    pairs[i].1 = value;
                    self.counter.add(1, leaf);
                    self.set_pairs(id, pairs);
                    return self.counter.delta_since(&before);
                }
                Err(i) if !n.is_leaf() => {
                    path.push((id, i));
                    id = n.children[i];
                }
                Err(i) => {
                    let mut pairs = n.pairs.clone();
                    pairs.insert(i, (key, value));
                    self.counter.add(1, true);
                    self.place(id, pairs, None, path);
                    return self.counter.delta_since(&before);
                }
            }
        }
    }

    /// Installs `pairs` (and `children`, for internal nodes) into node `id`,
    /// splitting upward while a node overflows.
    fn place(
        &mut self,
        mut id: usize,
        mut pairs: Vec<(u64, u64)>,
        mut children: Option<Vec<usize>>,
        mut path: Vec<(usize, usize)>,
    ) {
        loop {
            if pairs.len() <= self.max_keys {
                self.set_pairs(id, pairs);
                if let Some(c) = children {
                    self.nodes[id].children = c;
                }
                return;
            }
            let mid = pairs.len() / 2;
            let right_pairs = pairs.split_off(mid + 1);
            let median = pairs.pop().expect("median");
            let (left_children, right_children) = match children.take() {
                Some(mut c) => {
                    let r = c.split_off(mid + 1);
                    (Some(c), r)
                }
                None => (None, Vec::new()),
            };
            let leaf = right_children.is_empty();
            self.set_pairs(id, pairs);
            if let Some(c) = left_children {
                self.nodes[id].children = c;
            }
            let right = self.nodes.len();
            self.nodes.push(BNode {
                pairs: Vec::new(),
                children: right_children,
            });
            self.counter.add(right_pairs.len() as u64, leaf);
            self.counter.slot_rewrites += right_pairs.len() as u64;
            self.nodes[right].pairs = right_pairs;
            self.counter.add(1, false);

            match path.pop() {
                Some((parent, slot)) => {
                    let mut p = self.nodes[parent].pairs.clone();
                    p.insert(slot, median);
                    let mut c = self.nodes[parent].children.clone();
                    c.insert(slot + 1, right);
                    id = parent;
                    pairs = p;
                    children = Some(c);
                }
                None => {
                    let root = self.nodes.len();
                    self.nodes.push(BNode {
                        pairs: Vec::new(),
                        children: vec![id, right],
                    });
                    self.set_pairs(root, vec![median]);
                    self.root = root;
                    return;
                }
            }
        }
    }

    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut id = self.root;
        while !self.nodes[id].is_leaf() {
            id = self.nodes[id].children[0];
            h += 1;
        }
        h
    }

    /// Sortedness, occupancy (at least `max_keys / 2` except at the root) and
    /// uniform leaf depth.
    pub fn audit(&self) -> Result<usize> {
        let min = self.max_keys / 2;
        let mut leaf_depth = None;
        let mut count = 0;
        let mut stack = vec![(self.root, 1usize, None::<u64>, None::<u64>)];
        while let Some((id, depth, lo, hi)) = stack.pop() {
            let n = &self.nodes[id];
            let fail = |m: &str| Err(Error::Audit(format!("b-tree node {id}: {m}")));
            if n.pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
                return fail("keys not sorted");
            }
            if n.pairs.iter().any(|p| lo.is_some_and(|l| p.0 <= l) || hi.is_some_and(|h| p.0 >= h)) {
                return fail("key outside range");
            }
            if n.pairs.len() > self.max_keys || (id != self.root && n.pairs.len() < min) {
                return fail("occupancy out of bounds");
            }
            count += n.pairs.len();
            if n.is_leaf() {
                match leaf_depth {
                    None => leaf_depth = Some(depth),
                    Some(d) if d != depth => return fail("uneven leaf depth"),
                    _ => {}
                }
            } else {
                if n.children.len() != n.pairs.len() + 1 {
                    return fail("child count mismatch");
                }
                for (i, &c) in n.children.iter().enumerate() {
                    let clo = if i == 0 { lo } else { Some(n.pairs[i - 1].0) };
                    let chi = n.pairs.get(i).map(|p| p.0).or(hi);
                    stack.push((c, depth + 1, clo, chi));
                }
            }
        }
        Ok(count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WriteCountPoint {
    pub n: u64,
    pub btree_writes: u64,
    pub betree_writes: u64,
    pub ratio: f64,
    /// Slot-level counts, including pairs shifted inside a node.
    pub btree_slot_rewrites: u64,
    pub betree_slot_rewrites: u64,
}

/// Sample points: powers of ten up to `n`, then `n` itself.
pub fn sample_points(n: u64) -> Vec<u64> {
    let mut pts = Vec::new();
    let mut p = 1u64;
    while p < n {
        pts.push(p);
        p = p.saturating_mul(10);
    }
    pts.push(n);
    pts
}

/// Feeds one random insert stream to a B-tree and a B^ε-tree of the same
/// node capacity and reports cumulative pair writes at each sample point.
pub fn write_count_experiment(n: u64, seed: u64, node_capacity: u32) -> Result<Vec<WriteCountPoint>> {
    if n == 0 {
        return Err(Error::Config("write-count experiment needs at least one insert".into()));
    }
    let mut btree = BTree::new(node_capacity as usize)?;
    let params = TreeParams::with_epsilon(node_capacity, 0.5);
    let mut betree = BeTree::counting(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample_points(n);
    let mut out = Vec::with_capacity(samples.len());
    let mut done = 0u64;
    for &target in &samples {
        while done < target {
            let key: u64 = rng.random();
            let value: u64 = rng.random();
            btree.btree_insert_counted(key, value);
            betree.upsert(key, value)?;
            done += 1;
        }
        let b = btree.counter().kv_writes;
        let e = betree.stats().pair_writes;
        out.push(WriteCountPoint {
            n: target,
            btree_writes: b,
            betree_writes: e,
            ratio: e as f64 / b as f64,
            btree_slot_rewrites: btree.counter().slot_rewrites,
            betree_slot_rewrites: betree.store().kv_writes(),
        });
    }
    Ok(out)
}
