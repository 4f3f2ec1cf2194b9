//! Exact maximum clique by Bron–Kerbosch with Tomita pivoting and a size
//! bound.

/// Fixed-width bitset over `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub fn new(n: usize) -> Self {
        BitSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = BitSet::new(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn and(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn and_not(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    pub fn or(&self, other: &BitSet) -> BitSet {
        BitSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

/// Maximum clique of an undirected graph given as adjacency bitsets.
/// Among several maximum cliques the lexicographically smallest sorted
/// vertex list is returned.
pub fn maximum_clique(adjacency: &[BitSet]) -> Vec<usize> {
    let n = adjacency.len();
    let mut best: Vec<usize> = Vec::new();
    let mut current = Vec::new();
    expand(adjacency, &mut current, BitSet::full(n), BitSet::new(n), &mut best);
    best
}

fn expand(adj: &[BitSet], current: &mut Vec<usize>, mut candidates: BitSet, mut excluded: BitSet, best: &mut Vec<usize>) {
    if candidates.is_empty() {
        if excluded.is_empty() {
            let mut clique = current.clone();
            clique.sort_unstable();
            if clique.len() > best.len() || (clique.len() == best.len() && clique < *best) {
                *best = clique;
            }
        }
        return;
    }
    // Branches that cannot reach the incumbent size are cut; ties are kept
    // so the lexicographic tie-break sees every maximum clique.
    if current.len() + candidates.len() < best.len() {
        return;
    }
    let pivot = candidates
        .or(&excluded)
        .iter()
        .max_by_key(|&u| (candidates.and(&adj[u]).len(), std::cmp::Reverse(u)))
        .expect("candidates is nonempty");
    let branch: Vec<usize> = candidates.and_not(&adj[pivot]).iter().collect();
    for v in branch {
        current.push(v);
        expand(adj, current, candidates.and(&adj[v]), excluded.and(&adj[v]), best);
        current.pop();
        candidates.remove(v);
        excluded.insert(v);
        if current.len() + candidates.len() < best.len() {
            return;
        }
    }
}
