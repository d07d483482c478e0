use std::collections::{BTreeMap, HashMap};

use num::{BigInt, BigRational, One, Zero};

use super::ScaleSequence;
use crate::{Error, Mass, Point, Result};

/// A finite word of digit vectors with a declared digit order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub order: u32,
    pub digits: Vec<Point>,
}

impl Word {
    pub fn new(order: u32, digits: Vec<Point>) -> Self {
        Word { order, digits }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn prefix(&self, m: usize) -> Word {
        Word::new(self.order, self.digits[..m].to_vec())
    }
}

/// `X(w)` as exact rationals together with the lattice point `𝔐_{|w|} X(w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedPoint {
    pub level: usize,
    pub exact: Vec<BigRational>,
    pub lattice: Point,
}

fn check_digits(scales: &ScaleSequence, order: u32, digits: &[Point]) -> Result<()> {
    if digits.len() > scales.depth() {
        return Err(Error::DepthExceedsScales {
            requested: digits.len(),
            available: scales.depth(),
        });
    }
    for (i, u) in digits.iter().enumerate() {
        if u.len() != scales.d() {
            return Err(Error::DimensionMismatch { expected: scales.d(), found: u.len() });
        }
        let hi = scales.digit_max(i + 1, order);
        if u.iter().any(|&c| c < 0 || c > hi) {
            return Err(Error::DigitOutOfRange { position: i + 1, digit: u.clone(), order });
        }
    }
    Ok(())
}

/// Horner evaluation of `𝔐_n X(w)`; digits are not range-checked.
pub fn lattice_point(scales: &ScaleSequence, digits: &[Point]) -> Result<Point> {
    let mut acc = vec![0i64; scales.d()];
    for (i, u) in digits.iter().enumerate() {
        let m = scales.m(i + 1) as i64;
        for (a, &c) in acc.iter_mut().zip(u) {
            *a = a
                .checked_mul(m)
                .and_then(|v| v.checked_add(c))
                .ok_or(Error::LatticeOverflow { level: i + 1 })?;
        }
    }
    Ok(acc)
}

/// Coding map `X(w) = Σ_{n ≤ |w|} w_n / 𝔐_n`.
pub fn coding_point(scales: &ScaleSequence, w: &Word) -> Result<CodedPoint> {
    check_digits(scales, w.order, &w.digits)?;
    let n = w.len();
    let mut exact = vec![BigRational::zero(); scales.d()];
    for (i, u) in w.digits.iter().enumerate() {
        let den = scales.mm_rational(i + 1);
        for (x, &c) in exact.iter_mut().zip(u) {
            *x += BigRational::from_integer(BigInt::from(c)) / &den;
        }
    }
    let lattice = lattice_point(scales, &w.digits)?;
    Ok(CodedPoint { level: n, exact, lattice })
}

/// Children and edge masses per node; nodes are digit prefixes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OffspringAssignment {
    pub order: u32,
    pub depth: usize,
    children: BTreeMap<Vec<Point>, Vec<(Point, Mass)>>,
}

impl OffspringAssignment {
    pub fn new(order: u32, depth: usize) -> Self {
        OffspringAssignment { order, depth, children: BTreeMap::new() }
    }

    /// Uniform children: each digit gets mass `1/#digits`.
    pub fn set_uniform(&mut self, node: Vec<Point>, digits: Vec<Point>) {
        let t = BigRational::new(BigInt::one(), BigInt::from(digits.len()));
        let kids = digits.into_iter().map(|u| (u, t.clone())).collect();
        self.children.insert(node, kids);
    }

    pub fn set_weighted(&mut self, node: Vec<Point>, kids: Vec<(Point, Mass)>) {
        self.children.insert(node, kids);
    }

    pub fn children(&self, node: &[Point]) -> Option<&[(Point, Mass)]> {
        self.children.get(node).map(|v| v.as_slice())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&Vec<Point>, &Vec<(Point, Mass)>)> {
        self.children.iter()
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    /// True when every node's edge masses are positive and sum to one.
    pub fn is_normalized(&self) -> bool {
        self.children.values().all(|kids| {
            let total: BigRational = kids.iter().map(|(_, m)| m.clone()).sum();
            kids.iter().all(|(_, m)| m > &BigRational::zero()) && total.is_one()
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub word: Vec<Point>,
    pub mass: Mass,
}

/// Leaves of the tree at a fixed depth with cumulative cylinder masses.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeLeafSet {
    pub depth: usize,
    pub order: u32,
    pub leaves: Vec<Leaf>,
}

impl TreeLeafSet {
    pub fn total_mass(&self) -> BigRational {
        self.leaves.iter().map(|l| l.mass.clone()).sum()
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }
}

/// Leaf sets at every depth `1..=n`.
pub fn expand_levels(
    scales: &ScaleSequence,
    assignment: &OffspringAssignment,
    n: usize,
) -> Result<Vec<TreeLeafSet>> {
    if n > scales.depth() {
        return Err(Error::DepthExceedsScales { requested: n, available: scales.depth() });
    }
    let mut out = Vec::with_capacity(n);
    let mut frontier = vec![Leaf { word: Vec::new(), mass: BigRational::one() }];
    for depth in 1..=n {
        let hi = scales.digit_max(depth, assignment.order);
        let mut next = Vec::new();
        for leaf in &frontier {
            let kids = assignment
                .children(&leaf.word)
                .ok_or(Error::MissingChildren { depth: depth - 1 })?;
            for (u, m) in kids {
                if u.len() != scales.d() {
                    return Err(Error::DimensionMismatch { expected: scales.d(), found: u.len() });
                }
                if u.iter().any(|&c| c < 0 || c > hi) {
                    return Err(Error::DigitOutOfRange {
                        position: depth,
                        digit: u.clone(),
                        order: assignment.order,
                    });
                }
                let mut word = leaf.word.clone();
                word.push(u.clone());
                next.push(Leaf { word, mass: &leaf.mass * m });
            }
        }
        out.push(TreeLeafSet { depth, order: assignment.order, leaves: next.clone() });
        frontier = next;
    }
    Ok(out)
}

/// Leaves of depth `n` with masses `∏ κ(u_k | w_{k-1})`.
pub fn expand_tree(
    scales: &ScaleSequence,
    assignment: &OffspringAssignment,
    n: usize,
) -> Result<TreeLeafSet> {
    if n == 0 {
        return Ok(TreeLeafSet {
            depth: 0,
            order: assignment.order,
            leaves: vec![Leaf { word: Vec::new(), mass: BigRational::one() }],
        });
    }
    Ok(expand_levels(scales, assignment, n)?.pop().unwrap())
}

/// `max_h #{w : X(w) = h}` over the leaves.
pub fn max_lattice_multiplicity(scales: &ScaleSequence, leaf_set: &TreeLeafSet) -> Result<usize> {
    let mut counts: HashMap<Point, usize> = HashMap::new();
    for leaf in &leaf_set.leaves {
        if leaf.word.len() != leaf_set.depth {
            return Err(Error::MixedDepths { first: leaf_set.depth, other: leaf.word.len() });
        }
        *counts.entry(lattice_point(scales, &leaf.word)?).or_default() += 1;
    }
    Ok(counts.values().copied().max().unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::super::make_scales;
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn coding_examples() {
        let s = make_scales(1, 2, &[2]).unwrap();
        let c = coding_point(&s, &Word::new(1, vec![vec![1]])).unwrap();
        assert_eq!(c.exact, vec![q(1, 2)]);
        let s = make_scales(1, 2, &[2, 3]).unwrap();
        let c = coding_point(&s, &Word::new(1, vec![vec![1], vec![2]])).unwrap();
        assert_eq!(c.exact, vec![q(5, 6)]);
        assert_eq!(c.lattice, vec![5]);
        let bad = coding_point(&s, &Word::new(1, vec![vec![2]]));
        assert!(matches!(bad, Err(Error::DigitOutOfRange { .. })));
    }

    #[test]
    fn uniform_and_weighted_leaves() {
        let s = make_scales(1, 1, &[2]).unwrap();
        let mut a = OffspringAssignment::new(1, 1);
        a.set_uniform(vec![], vec![vec![0], vec![1]]);
        let l = expand_tree(&s, &a, 1).unwrap();
        assert_eq!(l.leaves.len(), 2);
        assert!(l.leaves.iter().all(|x| x.mass == q(1, 2)));
        let mut b = OffspringAssignment::new(1, 1);
        b.set_weighted(vec![], vec![(vec![0], q(1, 3)), (vec![1], q(2, 3))]);
        let l = expand_tree(&s, &b, 1).unwrap();
        assert_eq!(l.leaves[0].mass, q(1, 3));
        assert_eq!(l.leaves[1].mass, q(2, 3));
        assert!(b.is_normalized());
    }

    #[test]
    fn missing_children_reported() {
        let s = make_scales(1, 1, &[2, 3]).unwrap();
        let mut a = OffspringAssignment::new(1, 2);
        a.set_uniform(vec![], vec![vec![0], vec![1]]);
        assert!(matches!(expand_tree(&s, &a, 2), Err(Error::MissingChildren { depth: 1 })));
        assert!(matches!(expand_tree(&s, &a, 3), Err(Error::DepthExceedsScales { .. })));
    }

    #[test]
    fn multiplicity_of_full_word_set() {
        let s = make_scales(1, 2, &[2, 3]).unwrap();
        let mut a = OffspringAssignment::new(2, 2);
        let d1 = s.digit_set(1, 2);
        let d2 = s.digit_set(2, 2);
        a.set_uniform(vec![], d1.clone());
        for u in &d1 {
            a.set_uniform(vec![u.clone()], d2.clone());
        }
        let leaves = expand_tree(&s, &a, 2).unwrap();
        assert_eq!(leaves.len(), 15);
        let depth1 = expand_tree(&s, &a, 1).unwrap();
        assert_eq!(max_lattice_multiplicity(&s, &depth1).unwrap(), 1);
        assert_eq!(max_lattice_multiplicity(&s, &leaves).unwrap(), 2);
    }
}
