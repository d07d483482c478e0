use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Tilings of `ℤ^d` by `q`-blocks, optionally folded modulo `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Plain { q: i64 },
    Modular { q: i64, modulus: i64 },
}

impl BlockKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BlockKind::Plain { q } if q >= 1 => Ok(()),
            BlockKind::Modular { q, modulus } if q >= 1 && modulus >= 1 => {
                if modulus % q != 0 {
                    Err(Error::ModulusNotDivisible { q, modulus })
                } else {
                    Ok(())
                }
            }
            _ => Err(Error::InvalidParameters(format!("bad block kind {self:?}"))),
        }
    }

    /// Label of the cell containing `u`.
    pub fn cell(&self, u: &[i64]) -> Point {
        match *self {
            BlockKind::Plain { q } => u.iter().map(|c| c.div_euclid(q)).collect(),
            BlockKind::Modular { q, modulus } => {
                u.iter().map(|c| c.rem_euclid(modulus).div_euclid(q)).collect()
            }
        }
    }
}

/// Groups `points` by cell; cells ordered by label, members by input order.
pub fn partition_indices(points: &[Point], kind: BlockKind) -> Result<Vec<Vec<usize>>> {
    kind.validate()?;
    let mut cells: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        cells.entry(kind.cell(p)).or_default().push(i);
    }
    Ok(cells.into_values().collect())
}

/// Cells of the given kind restricted to `{0, ..., side-1}^d`.
pub fn build_partition_blocks(kind: BlockKind, d: usize, side: i64) -> Result<Vec<Vec<Point>>> {
    let pts = crate::scales::grid_points(d, side);
    let idx = partition_indices(&pts, kind)?;
    Ok(idx
        .into_iter()
        .map(|cell| cell.into_iter().map(|i| pts[i].clone()).collect())
        .collect())
}

/// First pair of distinct points sharing a cell.
pub fn sparsity_witness(a: &[Point], kind: BlockKind) -> Option<(Point, Point)> {
    let mut seen: HashMap<Point, &Point> = HashMap::new();
    for p in a {
        if let Some(prev) = seen.insert(kind.cell(p), p) {
            if prev != p {
                return Some((prev.clone(), p.clone()));
            }
        }
    }
    None
}

pub fn is_block_sparse(a: &[Point], kind: BlockKind) -> bool {
    sparsity_witness(a, kind).is_none()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SumCertificate {
    pub sumset: Vec<Point>,
    /// `pairs[k] = (i, j)` with `sumset[k] = grid[i] + sparse[j]`.
    pub pairs: Vec<(usize, usize)>,
    pub bijective: bool,
    pub block_sparse: bool,
}

/// Sum of `Ã ⊂ Qℤ^d` and a set that is `q`-block sparse modulo `Q`.
pub fn residue_separated_sum(
    grid: &[Point],
    sparse: &[Point],
    q: i64,
    modulus: i64,
) -> Result<SumCertificate> {
    let kind = BlockKind::Modular { q, modulus };
    kind.validate()?;
    for g in grid {
        if g.iter().any(|c| c.rem_euclid(modulus) != 0) {
            return Err(Error::PreconditionViolated {
                left: g.clone(),
                right: vec![modulus; g.len()],
            });
        }
    }
    if let Some((a, b)) = sparsity_witness(sparse, kind) {
        return Err(Error::PreconditionViolated { left: a, right: b });
    }
    let mut sumset = Vec::with_capacity(grid.len() * sparse.len());
    let mut pairs = Vec::with_capacity(grid.len() * sparse.len());
    for (i, g) in grid.iter().enumerate() {
        for (j, s) in sparse.iter().enumerate() {
            sumset.push(g.iter().zip(s).map(|(x, y)| x + y).collect::<Point>());
            pairs.push((i, j));
        }
    }
    let distinct: HashSet<&Point> = sumset.iter().collect();
    let bijective = distinct.len() == sumset.len();
    let block_sparse = is_block_sparse(&sumset, BlockKind::Plain { q });
    Ok(SumCertificate { sumset, pairs, bijective, block_sparse })
}
