/// Exact minimum-cost assignment of every row to a distinct column
/// (shortest augmenting paths with potentials, O(r²c)).
///
/// `f64::INFINITY` marks a forbidden cell. Returns the column chosen for each
/// row and the total, or `None` when no assignment avoids forbidden cells
/// (including the `r > c` case).
pub fn hungarian_min_assignment(costs: &[Vec<f64>]) -> Option<(Vec<usize>, f64)> {
    let rows = costs.len();
    if rows == 0 {
        return Some((Vec::new(), 0.0));
    }
    let cols = costs[0].len();
    assert!(
        costs.iter().all(|r| r.len() == cols),
        "cost matrix must be rectangular"
    );
    if rows > cols {
        return None;
    }

    // Forbidden cells become a penalty no feasible assignment can reach.
    let max_abs = costs
        .iter()
        .flatten()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |m, c| m.max(c.abs()));
    let big = (rows as f64 + 1.0) * (max_abs + 1.0);
    let cell = |i: usize, j: usize| {
        let c = costs[i][j];
        if c.is_finite() {
            c
        } else {
            big
        }
    };

    // 1-based potentials; column 0 is the virtual start.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cell(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    let mut total = 0.0;
    for (i, &j) in assignment.iter().enumerate() {
        let c = costs[i][j];
        if !c.is_finite() {
            return None;
        }
        total += c;
    }
    Some((assignment, total))
}
