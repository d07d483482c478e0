use serde_json::json;

use super::report::ExperimentReport;
use crate::samplers::{sparsity_witness, BlockKind};
use crate::scales::OffspringAssignment;
use crate::Point;

/// Checks every offspring set against the block kinds declared for its level.
pub fn sparsity_certificate(assignment: &OffspringAssignment, kinds: &[Vec<BlockKind>]) -> ExperimentReport {
    let mut report = ExperimentReport::new(
        "sparsity_certificate",
        json!({ "levels": kinds.iter().map(|k| format!("{k:?}")).collect::<Vec<_>>() }),
        None,
    );
    report.tolerance("exact", 0.0);
    let mut checked = vec![0usize; kinds.len()];
    let mut witness: Option<(Vec<Point>, BlockKind, Point, Point)> = None;
    for (node, kids) in assignment.nodes() {
        let level = node.len();
        let Some(level_kinds) = kinds.get(level) else { continue };
        let digits: Vec<Point> = kids.iter().map(|(u, _)| u.clone()).collect();
        for kind in level_kinds {
            checked[level] += 1;
            if witness.is_none() {
                if let Some((a, b)) = sparsity_witness(&digits, *kind) {
                    witness = Some((node.clone(), *kind, a, b));
                }
            }
        }
    }
    for (k, c) in checked.iter().enumerate() {
        report.push("checks", k + 1, *c as f64);
    }
    let detail = match &witness {
        None => "every offspring set is block sparse".to_string(),
        Some((node, kind, a, b)) => format!("node {node:?}: {a:?} and {b:?} share a cell of {kind:?}"),
    };
    report.verdict("block_sparse", witness.is_none(), "exact", detail);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_violation_has_witness() {
        let mut a = OffspringAssignment::new(1, 1);
        a.set_uniform(vec![], vec![vec![0], vec![1], vec![4]]);
        let ok = sparsity_certificate(&a, &[vec![BlockKind::Plain { q: 1 }]]);
        assert!(ok.passed());
        let bad = sparsity_certificate(&a, &[vec![BlockKind::Plain { q: 2 }]]);
        assert!(!bad.passed());
        assert!(bad.verdicts[0].detail.contains("[0]"));
    }
}
