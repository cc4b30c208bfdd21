//! Maximum-weight bipartite assignment via the O(n^3) Hungarian algorithm
//! with row/column potentials. Weights must be finite and non-negative;
//! rectangular inputs are padded internally, and zero-weight edges are as
//! good as leaving both sides unmatched.

/// Assign each row to at most one column maximizing the total weight.
/// Returns `out[row] = Some(col)` for assigned pairs; padded (surplus)
/// rows or columns come back unassigned.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return vec![None; rows];
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols), "ragged weight matrix");
    debug_assert!(
        weights.iter().flatten().all(|w| w.is_finite() && *w >= 0.0),
        "weights must be finite and non-negative"
    );

    // Square the problem; padding cells cost 0 so they never beat a real
    // positive-weight edge. The solver minimizes, so negate.
    let n = rows.max(cols);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0.0
        }
    };

    // Shortest augmenting path formulation with potentials u, v. Arrays are
    // 1-indexed; way[j] remembers the column preceding j on the best path.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row (0 = free)
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = matched_row[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Total weight of an assignment, for tests and tie inspection.
pub fn assignment_weight(weights: &[Vec<f64>], assignment: &[Option<usize>]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Exhaustive reference: try every injective row -> column map.
    fn brute_force(weights: &[Vec<f64>]) -> f64 {
        let cols = weights.first().map_or(0, Vec::len);
        fn rec(weights: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == weights.len() {
                return 0.0;
            }
            // Leaving the row unmatched is always an option.
            let mut best = rec(weights, row + 1, used);
            for col in 0..used.len() {
                if !used[col] {
                    used[col] = true;
                    best = best.max(weights[row][col] + rec(weights, row + 1, used));
                    used[col] = false;
                }
            }
            best
        }
        rec(weights, 0, &mut vec![false; cols])
    }

    #[test]
    fn solves_small_known_cases() {
        let w = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let got = max_weight_assignment(&w);
        assert_eq!(got, vec![Some(1), Some(0)]);
        assert_eq!(assignment_weight(&w, &got), 4.0);

        // Diagonal dominance with a decoy.
        let w = vec![
            vec![9.0, 1.0, 1.0],
            vec![1.0, 9.0, 1.0],
            vec![8.0, 8.0, 9.0],
        ];
        let got = max_weight_assignment(&w);
        assert_eq!(assignment_weight(&w, &got), 27.0);
    }

    #[test]
    fn handles_rectangles_both_ways() {
        let wide = vec![vec![0.1, 5.0, 0.2]];
        assert_eq!(max_weight_assignment(&wide), vec![Some(1)]);

        let tall = vec![vec![1.0], vec![3.0], vec![2.0]];
        let got = max_weight_assignment(&tall);
        assert_eq!(got[1], Some(0));
        assert_eq!(got.iter().flatten().count(), 1);
    }

    #[test]
    fn empty_inputs_assign_nothing() {
        assert!(max_weight_assignment(&[]).is_empty());
        let no_cols: Vec<Vec<f64>> = vec![vec![], vec![]];
        assert_eq!(max_weight_assignment(&no_cols), vec![None, None]);
    }

    #[test]
    fn matches_exhaustive_search_on_random_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let rows = rng.gen_range(1..=6);
            let cols = rng.gen_range(1..=6);
            let w: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(0.0..10.0f64)).collect())
                .collect();
            let got = max_weight_assignment(&w);
            let want = brute_force(&w);
            assert!(
                (assignment_weight(&w, &got) - want).abs() < 1e-9,
                "hungarian {} vs brute force {want} on {w:?}",
                assignment_weight(&w, &got)
            );
        }
    }

    #[test]
    fn zero_columns_stay_unmatched_when_surplus() {
        // 3 rows, 2 columns: one row must stay unmatched, and it should be
        // the one contributing least.
        let w = vec![vec![5.0, 0.0], vec![0.0, 5.0], vec![1.0, 1.0]];
        let got = max_weight_assignment(&w);
        assert_eq!(got, vec![Some(0), Some(1), None]);
    }
}
