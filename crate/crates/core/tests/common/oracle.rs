//! Brute-force transportation oracle.
//!
//! Every basic solution of a balanced transportation problem is a spanning
//! tree of the complete bipartite supply/demand graph whose flows are forced
//! by repeatedly peeling leaves. The optimum is attained at a basic solution,
//! so the minimum over all feasible spanning trees is the exact optimum.
//!
//! Trees are generated in Prüfer order (always peel the smallest leaf) so
//! each is visited once. Lines are numbered rows `0..m` then columns
//! `m..m+n`. Branches are cut when their cost so far plus a relaxed bound on
//! the rest cannot beat the best tree found, seeded with a greedy plan.

const NEG_TOL: f64 = 1e-12;

pub fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Exact optimum of `min sum f_ij c_ij` over non-negative flows with the
/// given row and column sums.
pub fn min_transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (m, n) = (supply.len(), demand.len());
    assert!(m > 0 && n > 0);
    let mut search = Search {
        m,
        cost,
        residual: supply.iter().chain(demand).copied().collect(),
        active: vec![true; m + n],
        obligated: vec![false; m + n],
        rows_left: m,
        cols_left: n,
        best: greedy_cost(supply, demand, cost) + 1e-12,
    };
    search.peel(0.0, m + n - 2);
    search.best
}

/// Transport distance between two weighted point sets.
pub fn emd(a_weights: &[f64], a_points: &[Vec<f32>], b_weights: &[f64], b_points: &[Vec<f32>]) -> f64 {
    let cost: Vec<Vec<f64>> = a_points
        .iter()
        .map(|p| b_points.iter().map(|q| euclidean(p, q)).collect())
        .collect();
    min_transport_cost(a_weights, b_weights, &cost)
}

/// Cost of the plan that repeatedly saturates the cheapest open cell.
fn greedy_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut cells: Vec<(usize, usize)> = (0..s.len()).flat_map(|i| (0..d.len()).map(move |j| (i, j))).collect();
    cells.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
    let mut total = 0.0;
    for (i, j) in cells {
        let f = s[i].min(d[j]);
        if f > 0.0 {
            total += f * cost[i][j];
            s[i] -= f;
            d[j] -= f;
        }
    }
    // Rounding can strand mass; ship it at the worst price so the bound stays valid.
    let worst = cost.iter().flatten().copied().fold(0.0, f64::max);
    total + s.iter().sum::<f64>().max(d.iter().sum::<f64>()).max(0.0) * worst
}

struct Search<'a> {
    m: usize,
    cost: &'a [Vec<f64>],
    residual: Vec<f64>,
    active: Vec<bool>,
    /// Line must still receive a peeled child before it may be peeled itself.
    obligated: Vec<bool>,
    rows_left: usize,
    cols_left: usize,
    best: f64,
}

impl Search<'_> {
    fn edge_cost(&self, a: usize, b: usize) -> f64 {
        let (r, c) = if a < self.m { (a, b) } else { (b, a) };
        self.cost[r][c - self.m]
    }

    /// Every active row must ship its residual to some active column.
    fn remaining_bound(&self) -> f64 {
        let lines = self.active.len();
        let rows: f64 = (0..self.m)
            .filter(|&r| self.active[r])
            .map(|r| {
                let cheapest = (self.m..lines)
                    .filter(|&c| self.active[c])
                    .map(|c| self.edge_cost(r, c))
                    .fold(f64::INFINITY, f64::min);
                self.residual[r].max(0.0) * cheapest
            })
            .sum();
        let cols: f64 = (self.m..lines)
            .filter(|&c| self.active[c])
            .map(|c| {
                let cheapest = (0..self.m)
                    .filter(|&r| self.active[r])
                    .map(|r| self.edge_cost(r, c))
                    .fold(f64::INFINITY, f64::min);
                self.residual[c].max(0.0) * cheapest
            })
            .sum();
        rows.max(cols)
    }

    fn peel(&mut self, acc: f64, steps_left: usize) {
        if acc + self.remaining_bound() * (1.0 - 1e-12) >= self.best {
            return;
        }
        let lines = self.active.len();
        if steps_left == 0 {
            let r = (0..self.m).find(|&i| self.active[i]).unwrap();
            let c = (self.m..lines).find(|&j| self.active[j]).unwrap();
            if self.obligated[r] || self.obligated[c] || self.residual[r] < -NEG_TOL {
                return;
            }
            let total = acc + self.residual[r] * self.edge_cost(r, c);
            self.best = self.best.min(total);
            return;
        }
        let pending = (0..lines).filter(|&x| self.active[x] && self.obligated[x]).count();
        if pending > steps_left {
            return;
        }

        let saved = self.obligated.clone();
        for leaf in 0..lines {
            if !self.active[leaf] {
                continue;
            }
            let is_row = leaf < self.m;
            let peelable = !self.obligated[leaf] && if is_row { self.rows_left >= 2 } else { self.cols_left >= 2 };
            if peelable {
                let flow = self.residual[leaf];
                let partners: Vec<usize> = if is_row {
                    (self.m..lines).filter(|&p| self.active[p]).collect()
                } else {
                    (0..self.m).filter(|&p| self.active[p]).collect()
                };
                self.active[leaf] = false;
                if is_row {
                    self.rows_left -= 1;
                } else {
                    self.cols_left -= 1;
                }
                for p in partners {
                    if self.residual[p] - flow < -NEG_TOL {
                        continue;
                    }
                    let was = self.obligated[p];
                    self.obligated[p] = false;
                    self.residual[p] -= flow;
                    self.peel(acc + flow * self.edge_cost(leaf, p), steps_left - 1);
                    self.residual[p] += flow;
                    self.obligated[p] = was;
                }
                self.active[leaf] = true;
                if is_row {
                    self.rows_left += 1;
                } else {
                    self.cols_left += 1;
                }
            }
            // Any larger leaf is only the smallest one if this line is not a leaf.
            self.obligated[leaf] = true;
        }
        self.obligated = saved;
    }
}
