//! Reward matrices and exact maximum-reward one-to-one assignment.
//!
//! The solver is the O(n³) shortest-augmenting-path form of the Hungarian
//! method with row/column potentials. Rectangular inputs are zero-padded to
//! square, maximization is turned into minimization with `max - w`, and pairs
//! that carry no reward are dropped from the result.

use std::ops::{Add, Sub};

use serde::Serialize;

/// Edge weight usable by the solver.
pub trait Weight: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    const ZERO: Self;
    const INFINITY: Self;
}

impl Weight for i64 {
    const ZERO: Self = 0;
    const INFINITY: Self = i64::MAX / 4;
}

impl Weight for f64 {
    const ZERO: Self = 0.0;
    const INFINITY: Self = f64::INFINITY;
}

/// Minimum-cost perfect assignment on a square matrix. Returns the column
/// assigned to each row.
fn min_cost_square<W: Weight>(cost: &[Vec<W>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials; column 0 is the virtual source
    let mut u = vec![W::ZERO; n + 1];
    let mut v = vec![W::ZERO; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        row_of_col[0] = row;
        let mut j0 = 0;
        let mut minv = vec![W::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = W::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] = u[row_of_col[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Maximum-weight matching of a rectangular non-negative matrix. Returns the
/// matched `(row, col)` pairs with positive weight and their total.
pub fn max_weight_matching<W: Weight>(weights: &[Vec<W>]) -> (Vec<(usize, usize)>, W) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (Vec::new(), W::ZERO);
    }
    let n = rows.max(cols);
    let mut max = W::ZERO;
    for w in weights.iter().flatten() {
        if *w > max {
            max = *w;
        }
    }
    let at = |i: usize, j: usize| {
        if i < rows && j < cols {
            weights[i][j]
        } else {
            W::ZERO
        }
    };
    let cost: Vec<Vec<W>> = (0..n)
        .map(|i| (0..n).map(|j| max - at(i, j)).collect())
        .collect();
    let mut pairs = Vec::new();
    let mut total = W::ZERO;
    for (i, j) in min_cost_square(&cost).into_iter().enumerate() {
        let w = at(i, j);
        if w > W::ZERO {
            pairs.push((i, j));
            total = total + w;
        }
    }
    (pairs, total)
}

/// Answers × clusters matrix of integer rewards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewardMatrix {
    rows: usize,
    cols: usize,
    rewards: Vec<u64>,
}

impl RewardMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            rewards: vec![0; rows * cols],
        }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged reward matrix");
        Self {
            rows: rows.len(),
            cols,
            rewards: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.rewards[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, reward: u64) {
        self.rewards[row * self.cols + col] = reward;
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.rewards[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// Optimum over the given rows and columns only.
    fn best_total(&self, rows: &[usize], cols: &[usize]) -> u64 {
        let rows: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| cols.iter().any(|&c| self.get(r, c) > 0))
            .collect();
        let cols: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&c| rows.iter().any(|&r| self.get(r, c) > 0))
            .collect();
        let sub: Vec<Vec<i64>> = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| self.get(r, c) as i64).collect())
            .collect();
        max_weight_matching(&sub).1 as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    /// `(answer index, cluster index)`, sorted, rewards all positive.
    pub pairs: Vec<(usize, usize)>,
    pub total_reward: u64,
}

/// Maximum-total-reward one-to-one assignment. Among optimal assignments the
/// lexicographically smallest pair list is returned.
pub fn optimal_assignment(matrix: &RewardMatrix) -> Assignment {
    let all_rows: Vec<usize> = (0..matrix.rows()).collect();
    let all_cols: Vec<usize> = (0..matrix.cols()).collect();
    let optimum = matrix.best_total(&all_rows, &all_cols);

    let mut pairs = Vec::new();
    let mut remaining = optimum;
    let mut free_cols = all_cols;
    for row in 0..matrix.rows() {
        if remaining == 0 {
            break;
        }
        let later: Vec<usize> = (row + 1..matrix.rows()).collect();
        let pick = free_cols.iter().copied().find(|&col| {
            let r = matrix.get(row, col);
            if r == 0 || r > remaining {
                return false;
            }
            let rest: Vec<usize> = free_cols.iter().copied().filter(|&c| c != col).collect();
            r + matrix.best_total(&later, &rest) == remaining
        });
        if let Some(col) = pick {
            pairs.push((row, col));
            remaining -= matrix.get(row, col);
            free_cols.retain(|&c| c != col);
        }
    }
    debug_assert_eq!(remaining, 0);
    Assignment {
        pairs,
        total_reward: optimum,
    }
}
