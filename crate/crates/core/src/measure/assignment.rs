use crate::scalar::Scalar;

/// Exact minimum-cost perfect matching on an `n × n` cost function.
///
/// Shortest augmenting paths with dual potentials, `O(n³)`. Returns the
/// column assigned to each row. Ties in reduced cost go to the lowest column
/// index, so the result is deterministic.
pub fn solve_assignment<T, F>(n: usize, cost: F) -> Vec<usize>
where
    T: Scalar,
    F: Fn(usize, usize) -> T,
{
    if n == 0 {
        return Vec::new();
    }
    let inf = T::infinity();
    // 1-based arrays; index 0 is the virtual source column
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = inf);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[row_of[j]] = u[row_of[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(c: &[Vec<f64>]) -> f64 {
        fn rec(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == c.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..c.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(c[row][j] + rec(c, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(c, 0, &mut vec![false; c.len()])
    }

    #[test]
    fn matches_enumeration_on_small_matrices() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=7 {
            for _ in 0..20 {
                let c: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
                let perm = solve_assignment(n, |i, j| c[i][j]);
                let got: f64 = perm.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
                assert!((got - brute_force(&c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ties_resolve_to_identity() {
        let perm = solve_assignment(4, |_, _| 1.0f64);
        assert_eq!(perm, vec![0, 1, 2, 3]);
    }
}
