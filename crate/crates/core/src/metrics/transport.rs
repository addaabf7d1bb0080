//! Exact solver for the balanced transportation problem.
//!
//! Transportation simplex (MODI) over a spanning-tree basis of the bipartite
//! supply/demand graph. The initial basis comes from the northwest-corner
//! rule; pivots use Dantzig pricing and fall back to Bland's rule after a run
//! of degenerate pivots so the method cannot cycle.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("supply and demand must both be non-empty")]
    Empty,
    #[error("cost matrix has {found} entries, expected {expected}")]
    CostShape { expected: usize, found: usize },
    #[error("masses and costs must be finite and masses non-negative")]
    InvalidInput,
    #[error("simplex did not converge within {0} pivots")]
    NoConvergence(usize),
}

/// An optimal plan. `flows` is row-major `supply.len() x demand.len()`.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    pub flows: Vec<f64>,
    pub pivots: usize,
}

const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

/// Minimize `sum(flow[i][j] * cost[i][j])` subject to row sums `supply`,
/// column sums `demand`, and non-negative flows.
///
/// The two sides are expected to carry equal total mass; any small
/// imbalance (rounding) is absorbed by the last basic cell.
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan, TransportError> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(TransportError::Empty);
    }
    if cost.len() != m * n {
        return Err(TransportError::CostShape {
            expected: m * n,
            found: cost.len(),
        });
    }
    if supply
        .iter()
        .chain(demand)
        .any(|w| !w.is_finite() || *w < 0.0)
        || cost.iter().any(|c| !c.is_finite())
    {
        return Err(TransportError::InvalidInput);
    }

    let mut tree = Basis::northwest(supply, demand);
    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-13 * scale;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;

    let mut pivots = 0;
    let mut degenerate_run = 0;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    loop {
        tree.potentials(cost, &mut u, &mut v);
        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
        let Some((ei, ej)) = entering_cell(cost, &u, &v, &tree, tol, bland) else {
            break;
        };
        if pivots >= max_pivots {
            return Err(TransportError::NoConvergence(pivots));
        }
        let theta = tree.pivot(ei, ej, bland);
        pivots += 1;
        if theta > 0.0 {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
    }

    let mut flows = vec![0.0; m * n];
    for cell in &tree.cells {
        flows[cell.row * n + cell.col] += cell.flow.max(0.0);
    }
    let total = flows.iter().zip(cost).map(|(f, c)| f * c).sum();
    Ok(TransportPlan {
        cost: total,
        flows,
        pivots,
    })
}

fn entering_cell(
    cost: &[f64],
    u: &[f64],
    v: &[f64],
    tree: &Basis,
    tol: f64,
    bland: bool,
) -> Option<(usize, usize)> {
    let n = v.len();
    let mut best: Option<(usize, usize)> = None;
    let mut best_rc = -tol;
    for (i, ui) in u.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            if tree.is_basic(i, j) {
                continue;
            }
            let rc = cost[i * n + j] - ui - vj;
            if rc < best_rc {
                if bland {
                    return Some((i, j));
                }
                best_rc = rc;
                best = Some((i, j));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

/// Spanning tree over `m` row nodes and `n` column nodes (`m + n - 1` cells).
struct Basis {
    m: usize,
    n: usize,
    cells: Vec<Cell>,
    /// `slot[i * n + j]` is the index into `cells` of a basic cell.
    slot: Vec<Option<usize>>,
    // scratch for tree traversal
    adjacency: Vec<Vec<usize>>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
}

impl Basis {
    fn northwest(supply: &[f64], demand: &[f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        loop {
            if i == m - 1 && j == n - 1 {
                cells.push(Cell { row: i, col: j, flow: s[i].max(d[j]) });
                break;
            }
            let advance_row = j == n - 1 || (i < m - 1 && s[i] <= d[j]);
            if advance_row {
                let x = s[i];
                cells.push(Cell { row: i, col: j, flow: x });
                d[j] = (d[j] - x).max(0.0);
                s[i] = 0.0;
                i += 1;
            } else {
                let x = d[j];
                cells.push(Cell { row: i, col: j, flow: x });
                s[i] = (s[i] - x).max(0.0);
                d[j] = 0.0;
                j += 1;
            }
        }
        let mut slot = vec![None; m * n];
        for (k, c) in cells.iter().enumerate() {
            slot[c.row * n + c.col] = Some(k);
        }
        Basis {
            m,
            n,
            cells,
            slot,
            adjacency: vec![Vec::new(); m + n],
            parent_cell: vec![usize::MAX; m + n],
            depth: vec![0; m + n],
        }
    }

    fn is_basic(&self, i: usize, j: usize) -> bool {
        self.slot[i * self.n + j].is_some()
    }

    /// Solve `u[i] + v[j] = cost[i][j]` on the basic cells with `u[0] = 0`,
    /// recording parent links and depths for cycle search.
    fn potentials(&mut self, cost: &[f64], u: &mut [f64], v: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        for adj in &mut self.adjacency {
            adj.clear();
        }
        for (k, c) in self.cells.iter().enumerate() {
            self.adjacency[c.row].push(k);
            self.adjacency[m + c.col].push(k);
        }
        self.parent_cell.iter_mut().for_each(|p| *p = usize::MAX);
        let mut visited = vec![false; m + n];
        let mut stack = vec![0usize];
        visited[0] = true;
        u[0] = 0.0;
        self.depth[0] = 0;
        while let Some(node) = stack.pop() {
            for &k in &self.adjacency[node] {
                let c = self.cells[k];
                let other = if node < m { m + c.col } else { c.row };
                if visited[other] {
                    continue;
                }
                visited[other] = true;
                let cij = cost[c.row * n + c.col];
                if node < m {
                    v[c.col] = cij - u[c.row];
                } else {
                    u[c.row] = cij - v[c.col];
                }
                self.parent_cell[other] = k;
                self.depth[other] = self.depth[node] + 1;
                stack.push(other);
            }
        }
        debug_assert!(visited.iter().all(|&x| x), "basis is not spanning");
    }

    fn parent_node(&self, node: usize, k: usize) -> usize {
        let c = self.cells[k];
        if node < self.m {
            self.m + c.col
        } else {
            c.row
        }
    }

    /// Bring `(ei, ej)` into the basis. Returns the flow shifted around the cycle.
    fn pivot(&mut self, ei: usize, ej: usize, bland: bool) -> f64 {
        let m = self.m;
        // Tree path from column node ej to row node ei.
        let mut a = m + ej;
        let mut b = ei;
        let mut from_col = Vec::new();
        let mut from_row = Vec::new();
        while self.depth[a] > self.depth[b] {
            let k = self.parent_cell[a];
            from_col.push(k);
            a = self.parent_node(a, k);
        }
        while self.depth[b] > self.depth[a] {
            let k = self.parent_cell[b];
            from_row.push(k);
            b = self.parent_node(b, k);
        }
        while a != b {
            let ka = self.parent_cell[a];
            from_col.push(ka);
            a = self.parent_node(a, ka);
            let kb = self.parent_cell[b];
            from_row.push(kb);
            b = self.parent_node(b, kb);
        }
        from_row.reverse();
        let path: Vec<usize> = from_col.into_iter().chain(from_row).collect();

        // Cells at even positions lose flow, odd positions gain it.
        let mut leaving = usize::MAX;
        let mut theta = f64::INFINITY;
        for &k in path.iter().step_by(2) {
            let f = self.cells[k].flow;
            let better = f < theta
                || (f == theta && bland && self.cell_key(k) < self.cell_key(leaving));
            if better {
                theta = f;
                leaving = k;
            }
        }
        let theta = theta.max(0.0);
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                self.cells[k].flow = (self.cells[k].flow - theta).max(0.0);
            } else {
                self.cells[k].flow += theta;
            }
        }
        let old = self.cells[leaving];
        self.slot[old.row * self.n + old.col] = None;
        self.cells[leaving] = Cell { row: ei, col: ej, flow: theta };
        self.slot[ei * self.n + ej] = Some(leaving);
        theta
    }

    fn cell_key(&self, k: usize) -> usize {
        if k == usize::MAX {
            return usize::MAX;
        }
        let c = self.cells[k];
        c.row * self.n + c.col
    }
}
