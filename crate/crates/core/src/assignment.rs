//! Exact linear assignment by shortest augmenting paths (Hungarian method
//! with potentials, O(n³)).
//!
//! Entries may be `+∞` to forbid an edge; the solver then reports `None`
//! when no finite perfect matching exists.

/// Optimal assignment of rows to columns with its dual potentials.
#[derive(Clone, Debug)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`.
    pub row_to_col: Vec<usize>,
    pub cost: f64,
    row_potential: Vec<f64>,
    col_potential: Vec<f64>,
}

/// Minimum-cost perfect assignment for an `n × n` row-major cost matrix.
pub fn solve(n: usize, cost: &[f64]) -> Option<Assignment> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n×n");
    if n == 0 {
        return Some(Assignment {
            row_to_col: Vec::new(),
            cost: 0.0,
            row_potential: Vec::new(),
            col_potential: Vec::new(),
        });
    }
    let inf = f64::INFINITY;
    // 1-based with a virtual column 0, as in the classical formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    let cost_sum = assignment_cost(n, cost, &row_to_col);
    Some(Assignment {
        row_to_col,
        cost: cost_sum,
        row_potential: u[1..].to_vec(),
        col_potential: v[1..].to_vec(),
    })
}

/// Sum of the assigned entries.
pub fn assignment_cost(n: usize, cost: &[f64], row_to_col: &[usize]) -> f64 {
    row_to_col.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum()
}

/// Optimal assignment whose permutation is lexicographically smallest among
/// all optimal ones (optimal meaning within 1e-13 relative of the minimum).
///
/// Ties are resolved in the equality subgraph of the dual solution: every
/// optimal permutation uses only edges with zero reduced cost.
pub fn solve_lexicographic(n: usize, cost: &[f64]) -> Option<Assignment> {
    let base = solve(n, cost)?;
    if n <= 1 {
        return Some(base);
    }
    let scale = 1.0
        + cost
            .iter()
            .filter(|c| c.is_finite())
            .fold(0.0_f64, |m, c| m.max(c.abs()));
    let accept = base.cost * (1.0 + 1e-13) + 1e-300;
    for tol in [1e-9, 1e-11, 1e-13] {
        let admissible: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| {
                        let r = cost[i * n + j] - base.row_potential[i] - base.col_potential[j];
                        r <= tol * scale
                    })
                    .collect()
            })
            .collect();
        if let Some(perm) = lexicographic_perfect_matching(n, &admissible, &base.row_to_col) {
            let c = assignment_cost(n, cost, &perm);
            if c <= accept {
                return Some(Assignment {
                    row_to_col: perm,
                    cost: c,
                    ..base
                });
            }
        }
    }
    Some(base)
}

/// Lexicographically smallest perfect matching of the bipartite graph
/// `admissible` (adjacency lists sorted ascending), starting from a known
/// perfect matching `start` of that graph.
fn lexicographic_perfect_matching(n: usize, admissible: &[Vec<usize>], start: &[usize]) -> Option<Vec<usize>> {
    let mut row_to_col = start.to_vec();
    let mut col_to_row = vec![usize::MAX; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        if !admissible[i].contains(&j) {
            return None;
        }
        col_to_row[j] = i;
    }
    for i in 0..n {
        for &j in &admissible[i] {
            if j >= row_to_col[i] {
                break;
            }
            // j is owned by a later row r; reroute r (through rows > i) to
            // the column freed by i.
            let r = col_to_row[j];
            if r < i {
                continue;
            }
            let freed = row_to_col[i];
            let mut trial_rc = row_to_col.clone();
            let mut trial_cr = col_to_row.clone();
            trial_rc[i] = j;
            trial_cr[j] = i;
            trial_cr[freed] = usize::MAX;
            trial_rc[r] = usize::MAX;
            let mut seen = vec![false; n];
            if augment(r, i, admissible, &mut trial_rc, &mut trial_cr, &mut seen) {
                row_to_col = trial_rc;
                col_to_row = trial_cr;
                break;
            }
        }
    }
    Some(row_to_col)
}

/// Kuhn augmenting step for `row` using only rows strictly after `fixed`.
fn augment(
    row: usize,
    fixed: usize,
    adj: &[Vec<usize>],
    rc: &mut [usize],
    cr: &mut [usize],
    seen: &mut [bool],
) -> bool {
    for &j in &adj[row] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        let owner = cr[j];
        if owner != usize::MAX && owner <= fixed {
            continue;
        }
        if owner == usize::MAX || augment(owner, fixed, adj, rc, cr, seen) {
            rc[row] = j;
            cr[j] = row;
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(n: usize, cost: &[f64]) -> (f64, Vec<usize>) {
        // lexicographic enumeration: first minimum found is the lexicographically smallest
        fn rec(n: usize, cost: &[f64], perm: &mut Vec<usize>, used: &mut [bool], best: &mut (f64, Vec<usize>)) {
            if perm.len() == n {
                let c: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                if c < best.0 {
                    *best = (c, perm.clone());
                }
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    perm.push(j);
                    rec(n, cost, perm, used, best);
                    perm.pop();
                    used[j] = false;
                }
            }
        }
        let mut best = (f64::INFINITY, Vec::new());
        rec(n, cost, &mut Vec::new(), &mut vec![false; n], &mut best);
        best
    }

    #[test]
    fn small_known_instance() {
        let c = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve(3, &c).unwrap();
        assert_eq!(a.cost, 5.0);
        assert_eq!(a.row_to_col, vec![1, 0, 2]);
    }

    #[test]
    fn forbidden_edges() {
        let inf = f64::INFINITY;
        let c = [inf, 1.0, 2.0, inf];
        let a = solve(2, &c).unwrap();
        assert_eq!(a.row_to_col, vec![1, 0]);
        let c = [inf, 1.0, inf, 3.0];
        assert!(solve(2, &c).is_none());
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let c = vec![1.0; 16];
        let a = solve_lexicographic(4, &c).unwrap();
        assert_eq!(a.row_to_col, vec![0, 1, 2, 3]);
        let c = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let a = solve_lexicographic(3, &c).unwrap();
        assert_eq!(a.row_to_col, vec![0, 1, 2]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..=6, seed in proptest::collection::vec(0u8..5, 36)) {
            // small integer costs produce many ties
            let cost: Vec<f64> = seed.iter().take(n * n).map(|&v| v as f64).collect();
            let (best, perm) = brute_force(n, &cost);
            let a = solve_lexicographic(n, &cost).unwrap();
            prop_assert_eq!(a.cost, best);
            prop_assert_eq!(a.row_to_col, perm);
        }
    }
}
