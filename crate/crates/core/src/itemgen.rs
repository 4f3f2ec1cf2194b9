//! Random items with balanced ground-truth hierarchies.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, HierarchySpec, Item, ItemId};
use crate::rng::RngSeed;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItemGenSpec {
    pub items: usize,
    /// Children per node at each level below the root; `[4, 2]` gives four
    /// groups of two leaves each.
    pub branching: Vec<usize>,
    /// Independent hierarchies over the same items.
    #[serde(default = "one")]
    pub perspectives: usize,
}

fn one() -> usize {
    1
}

impl Default for ItemGenSpec {
    fn default() -> Self {
        ItemGenSpec {
            items: 120,
            branching: vec![4, 2],
            perspectives: 1,
        }
    }
}

impl ItemGenSpec {
    pub fn leaves(&self) -> usize {
        self.branching.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.branching.contains(&0) {
            return Err(Error::Config("branching factors must be positive".into()));
        }
        if self.perspectives == 0 {
            return Err(Error::Config("at least one perspective is required".into()));
        }
        if self.items < self.leaves() {
            return Err(Error::Config(format!(
                "{} items cannot fill {} leaves",
                self.items,
                self.leaves()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemSet {
    pub items: Vec<Item>,
    pub hierarchies: Vec<Hierarchy>,
}

/// Items `0..n`, each hierarchy assigning them to leaves in shuffled order
/// with leaf sizes differing by at most one. Node labels are dotted paths
/// ("p0", "p0.2", "p0.2.1"); each item's features are the labels of its
/// leaf in every hierarchy.
pub fn generate_items(spec: &ItemGenSpec, seed: RngSeed) -> Result<ItemSet> {
    spec.validate()?;
    let n = spec.items;
    let leaves = spec.leaves();
    let mut features: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut hierarchies = Vec::with_capacity(spec.perspectives);
    for p in 0..spec.perspectives {
        let mut order: Vec<ItemId> = (0..n as ItemId).collect();
        order.shuffle(&mut seed.derive(p as u64).rng());
        let mut next_leaf = 0;
        let root = build(&format!("p{p}"), &spec.branching, &order, leaves, &mut next_leaf, &mut features);
        hierarchies.push(Hierarchy::from_spec(&root)?);
    }
    let items = features
        .into_iter()
        .enumerate()
        .map(|(i, f)| Item::new(i as ItemId, f))
        .collect();
    Ok(ItemSet { items, hierarchies })
}

fn build(
    label: &str,
    branching: &[usize],
    order: &[ItemId],
    leaves: usize,
    next_leaf: &mut usize,
    features: &mut [Vec<String>],
) -> HierarchySpec {
    match branching.split_first() {
        None => {
            let n = order.len();
            let i = *next_leaf;
            *next_leaf += 1;
            let members: Vec<ItemId> = order[i * n / leaves..(i + 1) * n / leaves].to_vec();
            for &x in &members {
                features[x as usize].push(label.to_string());
            }
            HierarchySpec::leaf(label, members)
        }
        Some((&fan, rest)) => HierarchySpec::node(
            label,
            (0..fan)
                .map(|c| build(&format!("{label}.{c}"), rest, order, leaves, next_leaf, features))
                .collect(),
        ),
    }
}
