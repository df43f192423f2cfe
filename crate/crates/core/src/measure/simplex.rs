use std::collections::VecDeque;

use crate::scalar::Scalar;

/// Transportation problem on the complete bipartite graph, solved by the
/// network simplex method with Bland's rule.
///
/// `cost` is row-major `rows × cols`. Supplies and demands are integers with
/// equal totals, which keeps degenerate pivots exact. Returns the optimal
/// integer flow, row-major.
///
/// Panics if the totals differ or either side is empty.
pub fn solve_transportation<T: Scalar>(
    cost: &[T],
    supply: &[i64],
    demand: &[i64],
) -> Vec<i64> {
    let (n, m) = (supply.len(), demand.len());
    assert!(n > 0 && m > 0, "empty transportation problem");
    assert_eq!(cost.len(), n * m, "cost matrix shape");
    assert_eq!(
        supply.iter().sum::<i64>(),
        demand.iter().sum::<i64>(),
        "unbalanced transportation problem"
    );

    let mut flow = vec![0i64; n * m];
    let mut basic = vec![false; n * m];
    northwest_corner(supply, demand, &mut flow, &mut basic);

    let scale = cost.iter().fold(T::one(), |acc, &c| acc.max(c.abs()));
    let tol = T::epsilon() * T::lit(64.0) * scale;

    let nodes = n + m;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_arc = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut pot = vec![T::zero(); nodes];
    let mut queue = VecDeque::with_capacity(nodes);

    loop {
        // spanning tree of the basis, rooted at row 0
        adj.iter_mut().for_each(Vec::clear);
        for (k, _) in basic.iter().enumerate().filter(|(_, &b)| b) {
            let (i, j) = (k / m, n + k % m);
            adj[i].push((j, k));
            adj[j].push((i, k));
        }
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[0] = 0;
        depth[0] = 0;
        pot[0] = T::zero();
        queue.clear();
        queue.push_back(0);
        while let Some(a) = queue.pop_front() {
            for &(b, k) in &adj[a] {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    parent_arc[b] = k;
                    depth[b] = depth[a] + 1;
                    // u_i + v_j = c_ij on basic arcs
                    pot[b] = cost[k] - pot[a];
                    queue.push_back(b);
                }
            }
        }

        // Bland: first improving arc in index order
        let entering = (0..n * m).find(|&k| {
            !basic[k] && cost[k] - pot[k / m] - pot[n + k % m] < -tol
        });
        let Some(enter) = entering else { break };

        // cycle: entering arc (+), then the tree path from its column back to
        // its row, alternating (-), (+), ...
        let (ri, cj) = (enter / m, n + enter % m);
        let (mut a, mut b) = (cj, ri);
        let mut from_col = Vec::new();
        let mut from_row = Vec::new();
        while depth[a] > depth[b] {
            from_col.push(parent_arc[a]);
            a = parent[a];
        }
        while depth[b] > depth[a] {
            from_row.push(parent_arc[b]);
            b = parent[b];
        }
        while a != b {
            from_col.push(parent_arc[a]);
            a = parent[a];
            from_row.push(parent_arc[b]);
            b = parent[b];
        }
        from_row.reverse();
        let path: Vec<usize> = from_col.into_iter().chain(from_row).collect();

        let mut theta = i64::MAX;
        let mut leaving = usize::MAX;
        for &k in path.iter().step_by(2) {
            if flow[k] < theta || (flow[k] == theta && k < leaving) {
                theta = flow[k];
                leaving = k;
            }
        }
        flow[enter] += theta;
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flow[k] -= theta;
            } else {
                flow[k] += theta;
            }
        }
        basic[enter] = true;
        basic[leaving] = false;
    }
    flow
}

fn northwest_corner(supply: &[i64], demand: &[i64], flow: &mut [i64], basic: &mut [bool]) {
    let (n, m) = (supply.len(), demand.len());
    let (mut i, mut j) = (0, 0);
    let mut left_s = supply[0];
    let mut left_d = demand[0];
    loop {
        let f = left_s.min(left_d);
        flow[i * m + j] = f;
        basic[i * m + j] = true;
        left_s -= f;
        left_d -= f;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if (left_s == 0 && i < n - 1) || j == m - 1 {
            i += 1;
            left_s = supply[i];
        } else {
            j += 1;
            left_d = demand[j];
        }
    }
}
