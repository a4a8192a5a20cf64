//! Assignment and matching primitives: Hungarian algorithm (shortest
//! augmenting paths with potentials), Kuhn perfect matching on a bipartite
//! compatibility relation, and the dense transportation LP.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::optkit::{solve_lp, Bounds, LinearProgram, SolveStatus};

/// Minimum-cost perfect assignment on a square cost matrix.
/// Returns (row → column map, total cost). O(n³), deterministic.
pub fn hungarian(cost: &Mat) -> (Vec<usize>, f64) {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols());
    // Jonker–Volgenant style shortest augmenting path with dual potentials.
    // 1-based sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut match_col = vec![usize::MAX; n + 1]; // col -> row (1-based rows)
    for i in 1..=n {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == usize::MAX {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![usize::MAX; n];
    for j in 1..=n {
        if match_col[j] != usize::MAX && match_col[j] != 0 {
            assign[match_col[j] - 1] = j - 1;
        }
    }
    let total = (0..n).map(|i| cost[(i, assign[i])]).sum();
    (assign, total)
}

/// Perfect matching (row → column) in a bipartite graph given by an
/// adjacency predicate, via Kuhn's augmenting paths in index order.
/// Returns `Err(row)` with the first row that cannot be matched.
pub fn perfect_matching<F: Fn(usize, usize) -> bool>(
    n: usize,
    adjacent: F,
) -> std::result::Result<Vec<usize>, usize> {
    let mut col_of = vec![usize::MAX; n]; // row -> col
    let mut row_of = vec![usize::MAX; n]; // col -> row
    fn try_augment<F: Fn(usize, usize) -> bool>(
        r: usize,
        n: usize,
        adjacent: &F,
        seen: &mut [bool],
        col_of: &mut [usize],
        row_of: &mut [usize],
    ) -> bool {
        for c in 0..n {
            if !seen[c] && adjacent(r, c) {
                seen[c] = true;
                if row_of[c] == usize::MAX
                    || try_augment(row_of[c], n, adjacent, seen, col_of, row_of)
                {
                    col_of[r] = c;
                    row_of[c] = r;
                    return true;
                }
            }
        }
        false
    }
    for r in 0..n {
        let mut seen = vec![false; n];
        if !try_augment(r, n, &adjacent, &mut seen, &mut col_of, &mut row_of) {
            return Err(r);
        }
    }
    Ok(col_of)
}

/// Exact transportation LP: `min Σ γ_ij cost_ij` over plans with marginals
/// `(mu, nu)`. Returns the plan (as a dense matrix) and the optimal value.
pub fn transport_lp(mu: &[f64], nu: &[f64], cost: &Mat) -> Result<(Mat, f64)> {
    let n = mu.len();
    let m = nu.len();
    if cost.nrows() != n || cost.ncols() != m {
        return Err(Error::DimensionMismatch(
            "cost matrix size differs from the marginals".into(),
        ));
    }
    let mass_mu: f64 = mu.iter().sum();
    let mass_nu: f64 = nu.iter().sum();
    if (mass_mu - mass_nu).abs() > 1e-12 {
        return Err(Error::InvalidInput(
            "marginals carry different total mass".into(),
        ));
    }
    let nv = n * m;
    let mut c = vec![0.0; nv];
    for i in 0..n {
        for j in 0..m {
            c[i * m + j] = cost[(i, j)];
        }
    }
    // row-sum rows plus all-but-one column-sum rows (the last is implied)
    let mut eq_rows: Vec<Vec<f64>> = Vec::with_capacity(n + m - 1);
    let mut b_eq: Vec<f64> = Vec::with_capacity(n + m - 1);
    for i in 0..n {
        let mut row = vec![0.0; nv];
        for j in 0..m {
            row[i * m + j] = 1.0;
        }
        eq_rows.push(row);
        b_eq.push(mu[i]);
    }
    for j in 0..m.saturating_sub(1) {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[i * m + j] = 1.0;
        }
        eq_rows.push(row);
        b_eq.push(nu[j]);
    }
    let bounds: Bounds = vec![(Some(0.0), None); nv];
    let lp = LinearProgram::new(
        c,
        Mat::from_rows(&eq_rows)?,
        b_eq,
        Mat::zeros(0, nv),
        vec![],
        bounds,
    )?;
    let r = solve_lp(&lp)?;
    if r.status != SolveStatus::Optimal {
        return Err(Error::InvalidInput(format!(
            "transportation LP terminated with {:?}",
            r.status
        )));
    }
    let mut plan = Mat::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            plan[(i, j)] = r.x[i * m + j];
        }
    }
    Ok((plan, r.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hungarian_small() {
        let cost =
            Mat::from_rows(&[vec![8.0, 4.0, 7.0], vec![5.0, 2.0, 3.0], vec![9.0, 4.0, 8.0]])
                .unwrap();
        let (assign, total) = hungarian(&cost);
        assert_abs_diff_eq!(total, 15.0, epsilon = 1e-12);
        let mut seen = vec![false; 3];
        for &c in &assign {
            assert!(!seen[c]);
            seen[c] = true;
        }
    }

    #[test]
    fn hungarian_matches_brute_force() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in 2..=5usize {
            for _ in 0..5 {
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect())
                    .collect();
                let cost = Mat::from_rows(&rows).unwrap();
                let (_, total) = hungarian(&cost);
                // brute force over permutations
                let mut perm: Vec<usize> = (0..n).collect();
                let mut best = f64::INFINITY;
                loop {
                    let c: f64 = (0..n).map(|i| cost[(i, perm[i])]).sum();
                    best = best.min(c);
                    if !next_permutation(&mut perm) {
                        break;
                    }
                }
                assert_abs_diff_eq!(total, best, epsilon = 1e-9);
            }
        }
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    #[test]
    fn perfect_matching_identity_and_failure() {
        let m = perfect_matching(3, |r, c| r == c).unwrap();
        assert_eq!(m, vec![0, 1, 2]);
        // row 2 isolated
        let fail = perfect_matching(3, |r, c| r != 2 && (c == 0 || c == 1));
        assert_eq!(fail.unwrap_err(), 2);
    }

    #[test]
    fn transport_lp_moves_mass() {
        // unequal supports: μ uniform on {0, 1}, ν = δ_{0.5}
        let cost = Mat::from_rows(&[vec![0.25], vec![0.25]]).unwrap();
        let (plan, value) = transport_lp(&[0.5, 0.5], &[1.0], &cost).unwrap();
        assert_abs_diff_eq!(value, 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(plan[(0, 0)], 0.5, epsilon = 1e-10);
    }
}
