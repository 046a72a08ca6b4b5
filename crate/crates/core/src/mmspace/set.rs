use serde::{Deserialize, Serialize};

/// A subset of the points of a space, kept both as a sorted index list and a membership mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "SetRepr", into = "SetRepr")]
pub struct PointSet {
    members: Vec<usize>,
    mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct SetRepr {
    n: usize,
    members: Vec<usize>,
}

impl From<SetRepr> for PointSet {
    fn from(r: SetRepr) -> Self {
        PointSet::from_indices(r.n, r.members)
    }
}

impl From<PointSet> for SetRepr {
    fn from(s: PointSet) -> Self {
        SetRepr {
            n: s.mask.len(),
            members: s.members,
        }
    }
}

impl PointSet {
    pub fn empty(n: usize) -> Self {
        PointSet {
            members: Vec::new(),
            mask: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        PointSet {
            members: (0..n).collect(),
            mask: vec![true; n],
        }
    }

    /// Indices outside `0..n` are ignored; duplicates collapse.
    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; n];
        for i in idx {
            if i < n {
                mask[i] = true;
            }
        }
        Self::from_mask(mask)
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect();
        PointSet { members, mask }
    }

    /// Size of the ambient space.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn indices(&self) -> &[usize] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    /// First member of `self` missing from `other`, if any.
    pub fn first_outside(&self, other: &PointSet) -> Option<usize> {
        self.iter().find(|&i| !other.contains(i))
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.first_outside(other).is_none()
    }

    pub fn complement(&self) -> PointSet {
        PointSet::from_mask(self.mask.iter().map(|m| !m).collect())
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::from_mask(
            self.mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a || *b)
                .collect(),
        )
    }

    pub fn intersection(&self, other: &PointSet) -> PointSet {
        PointSet::from_mask(
            self.mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a && *b)
                .collect(),
        )
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        PointSet::from_mask(
            self.mask
                .iter()
                .zip(&other.mask)
                .map(|(a, b)| *a && !*b)
                .collect(),
        )
    }

    /// Position of each member inside `indices()`, `None` for non-members.
    pub fn positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.mask.len()];
        for (k, &i) in self.members.iter().enumerate() {
            pos[i] = Some(k);
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = PointSet::from_indices(6, [0, 2, 4, 2]);
        let b = PointSet::from_indices(6, [2, 3]);
        assert_eq!(a.indices(), &[0, 2, 4]);
        assert_eq!(a.union(&b).indices(), &[0, 2, 3, 4]);
        assert_eq!(a.intersection(&b).indices(), &[2]);
        assert_eq!(a.difference(&b).indices(), &[0, 4]);
        assert_eq!(a.complement().indices(), &[1, 3, 5]);
        assert_eq!(a.first_outside(&b), Some(0));
        assert!(PointSet::from_indices(6, [2]).is_subset(&b));
        assert_eq!(a.positions()[4], Some(2));
    }

    #[test]
    fn serde_keeps_universe() {
        let a = PointSet::from_indices(5, [1, 3]);
        let s = serde_json::to_string(&a).unwrap();
        let b: PointSet = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.universe(), 5);
    }
}
