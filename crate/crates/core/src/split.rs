//! Stratified train/validation splitting and class balancing.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng::rng_from;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SplitError {
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("label {label} out of range for {classes} classes")]
    ClassOutOfRange { label: usize, classes: usize },
    #[error("split ratio parts must be positive")]
    BadRatio,
}

/// `train : validation` proportions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRatio {
    pub train: usize,
    pub val: usize,
}

impl Default for SplitRatio {
    fn default() -> Self {
        Self { train: 4, val: 1 }
    }
}

impl SplitRatio {
    /// Validation share of a class with `n` members: `floor(n * val / (train + val))`,
    /// raised to 1 when the class has at least two members.
    pub fn val_count(&self, n: usize) -> usize {
        let v = n * self.val / (self.train + self.val);
        if n >= 2 {
            v.max(1)
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    /// Per class, the seeded shuffle of its sample indices; the first
    /// `val_count` entries went to validation.
    pub order: Vec<Vec<usize>>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

fn group_by_class(labels: &[usize], classes: usize) -> Result<Vec<Vec<usize>>, SplitError> {
    let mut groups = vec![Vec::new(); classes];
    for (i, &label) in labels.iter().enumerate() {
        groups.get_mut(label).ok_or(SplitError::ClassOutOfRange { label, classes })?.push(i);
    }
    if let Some(empty) = groups.iter().position(Vec::is_empty) {
        return Err(SplitError::EmptyClass(empty));
    }
    Ok(groups)
}

pub fn stratified_split(labels: &[usize], classes: usize, ratio: SplitRatio, seed: u64) -> Result<SplitPlan, SplitError> {
    if ratio.train == 0 || ratio.val == 0 {
        return Err(SplitError::BadRatio);
    }
    let mut groups = group_by_class(labels, classes)?;
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (c, members) in groups.iter_mut().enumerate() {
        members.shuffle(&mut rng_from(seed, &[0x5b17, c as u64]));
        let n_val = ratio.val_count(members.len());
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok(SplitPlan { order: groups, train, val })
}

/// Undersamples every class to the smallest class count, choosing members
/// without replacement. Returned indices are ascending.
pub fn balance_classes(labels: &[usize], classes: usize, seed: u64) -> Result<Vec<usize>, SplitError> {
    let mut groups = group_by_class(labels, classes)?;
    let keep = groups.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = Vec::with_capacity(keep * classes);
    for (c, members) in groups.iter_mut().enumerate() {
        members.shuffle(&mut rng_from(seed, &[0xba1a, c as u64]));
        out.extend_from_slice(&members[..keep]);
    }
    out.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(counts: &[usize]) -> Vec<usize> {
        counts.iter().enumerate().flat_map(|(c, &n)| core::iter::repeat_n(c, n)).collect()
    }

    #[test]
    fn ten_per_class() {
        let l = labels(&[10, 10, 10, 10]);
        let plan = stratified_split(&l, 4, SplitRatio::default(), 1).unwrap();
        for c in 0..4 {
            assert_eq!(plan.train.iter().filter(|&&i| l[i] == c).count(), 8);
            assert_eq!(plan.val.iter().filter(|&&i| l[i] == c).count(), 2);
        }
    }

    #[test]
    fn five_items() {
        let plan = stratified_split(&labels(&[5]), 1, SplitRatio::default(), 0).unwrap();
        assert_eq!((plan.train.len(), plan.val.len()), (4, 1));
    }

    #[test]
    fn small_classes() {
        let ratio = SplitRatio::default();
        assert_eq!(ratio.val_count(1), 0);
        assert_eq!(ratio.val_count(2), 1);
        assert_eq!(ratio.val_count(9), 1);
        assert_eq!(ratio.val_count(14), 2);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let l = labels(&[30, 30]);
        let a = stratified_split(&l, 2, SplitRatio::default(), 5).unwrap();
        assert_eq!(a, stratified_split(&l, 2, SplitRatio::default(), 5).unwrap());
        assert_ne!(a.val, stratified_split(&l, 2, SplitRatio::default(), 6).unwrap().val);
    }

    #[test]
    fn empty_class_rejected() {
        assert_eq!(stratified_split(&labels(&[3, 0, 2]), 3, SplitRatio::default(), 0), Err(SplitError::EmptyClass(1)));
        assert_eq!(balance_classes(&[0, 0], 2, 0), Err(SplitError::EmptyClass(1)));
        assert!(matches!(stratified_split(&[0, 4], 2, SplitRatio::default(), 0), Err(SplitError::ClassOutOfRange { .. })));
    }

    #[test]
    fn balance_table_supports() {
        let l = labels(&[50, 124, 258, 318]);
        let kept = balance_classes(&l, 4, 3).unwrap();
        assert_eq!(kept.len(), 200);
        for c in 0..4 {
            assert_eq!(kept.iter().filter(|&&i| l[i] == c).count(), 50);
        }
        assert_eq!(kept, balance_classes(&l, 4, 3).unwrap());
    }

    #[test]
    fn balanced_input_is_kept_whole() {
        let l = labels(&[7, 7, 7]);
        let kept = balance_classes(&l, 3, 9).unwrap();
        assert_eq!(kept, (0..21).collect::<Vec<_>>());
    }
}
