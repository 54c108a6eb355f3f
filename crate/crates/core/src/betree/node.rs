use crate::layout::{NodeId, NodeKind};

use super::store::Field;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Payload {
    Value(u64),
    Index(u32),
}

/// A buffered upsert. Messages with equal keys are ordered by `seq`; the
/// highest wins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub key: u64,
    pub payload: Payload,
    pub seq: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pivot {
    /// Smallest key routed to `child`.
    pub key: u64,
    pub child: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Internal {
        pivots: Vec<Pivot>,
        buffer: Vec<Message>,
    },
    Leaf {
        elems: Vec<(u64, u64)>,
    },
}

pub type Image = Vec<Option<(Field, u64)>>;

impl Node {
    pub fn kind(&self) -> NodeKind {
        match self {
            Node::Internal { .. } => NodeKind::Internal,
            Node::Leaf { .. } => NodeKind::Leaf,
        }
    }

    /// Word-slot image: pair `j` is words `2j` (key) and `2j + 1`. Internal
    /// nodes keep pivots in the first `pivot_slots` pairs and the buffer after.
    pub fn image(&self, pivot_slots: usize, pairs: usize) -> Option<Image> {
        let mut img = vec![None; 2 * pairs];
        let mut put = |pair: usize, k: (Field, u64), v: (Field, u64)| -> bool {
            if pair >= pairs {
                return false;
            }
            img[2 * pair] = Some(k);
            img[2 * pair + 1] = Some(v);
            true
        };
        match self {
            Node::Internal { pivots, buffer } => {
                if pivots.len() > pivot_slots {
                    return None;
                }
                for (i, p) in pivots.iter().enumerate() {
                    put(i, (Field::PivotKey, p.key), (Field::Child, p.child as u64));
                }
                for (m, msg) in buffer.iter().enumerate() {
                    let payload = match msg.payload {
                        Payload::Value(v) => (Field::Payload, v),
                        Payload::Index(s) => (Field::Index, s as u64),
                    };
                    if !put(pivot_slots + m, (Field::Key, msg.key), payload) {
                        return None;
                    }
                }
            }
            Node::Leaf { elems } => {
                for (j, &(k, v)) in elems.iter().enumerate() {
                    if !put(j, (Field::Key, k), (Field::Element, v)) {
                        return None;
                    }
                }
            }
        }
        Some(img)
    }
}

/// Index of the child that `key` routes to: the last pivot whose key is
/// at most `key` (pivot 0 takes everything below pivot 1).
pub fn route(pivots: &[Pivot], key: u64) -> usize {
    pivots[1..].partition_point(|p| p.key <= key)
}

/// Splits `n` items into `parts` runs whose sizes differ by at most one.
pub fn balanced_bounds(n: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let base = n / parts;
    let extra = n % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}
