//! The second-stage allocation: ship inventory to realized demand at unit
//! margin `p − c[i][j]`, minimizing total negative net profit.
//!
//! Both capacity families are inequalities (free disposal on both sides), so
//! the program is always feasible — the zero allocation costs nothing — and
//! its value is never positive. [`solve_allocation`] returns an optimal vertex
//! together with nonnegative duals certifying it; [`brute_force_allocation`]
//! recomputes the optimum by enumerating every basic feasible solution and
//! exists purely as an independent oracle for the solver.

use thiserror::Error;

use crate::market::{DemandVector, Inventory, MarketParams};
use crate::simplex;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("brute-force enumeration only supports m*n <= 9, got {0}")]
    TooLarge(usize),
}

/// An optimal allocation with the value and duals of one solve.
///
/// `x` is row-major `m×n`. The duals `(lambda, eta)` price the inventory and
/// demand constraints: `objective = -λᵀI - ηᵀD`, and every edge satisfies
/// `c[i][j] - p + λ[i] + η[j] ≥ 0`. Degenerate optima admit several valid
/// pairs; any certifying pair may be returned.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    pub m: usize,
    pub n: usize,
    pub x: Vec<f64>,
    pub objective: f64,
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
}

impl AllocationResult {
    pub fn shipped(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.n + j]
    }
}

/// Dual certificate of an allocation solve.
pub fn extract_duals(result: &AllocationResult) -> (&[f64], &[f64]) {
    (&result.lambda, &result.eta)
}

/// Solve the allocation program exactly.
///
/// Edges with `c[i][j] ≥ p` can never reduce the objective, so they are fixed
/// at zero before the solve; their dual feasibility is automatic because both
/// multipliers are nonnegative.
pub fn solve_allocation(
    inventory: &Inventory,
    demand: &DemandVector,
    price: f64,
    market: &MarketParams,
) -> AllocationResult {
    let (m, n) = (market.m, market.n);
    let inv = inventory.levels();
    let dem = demand.values();
    debug_assert_eq!(inv.len(), m);
    debug_assert_eq!(dem.len(), n);

    // Profitable edges only.
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let cost = market.c[i][j] - price;
            if cost < 0.0 {
                edges.push((i, j, cost));
            }
        }
    }
    if edges.is_empty() {
        return AllocationResult {
            m,
            n,
            x: vec![0.0; m * n],
            objective: 0.0,
            lambda: vec![0.0; m],
            eta: vec![0.0; n],
        };
    }

    let cols = edges.len();
    let c: Vec<f64> = edges.iter().map(|&(_, _, cost)| cost).collect();
    let mut rows = vec![vec![0.0f64; cols]; m + n];
    for (k, &(i, j, _)) in edges.iter().enumerate() {
        rows[i][k] = 1.0;
        rows[m + j][k] = 1.0;
    }
    let mut b = Vec::with_capacity(m + n);
    b.extend(inv.iter().map(|v| v.max(0.0)));
    b.extend(dem.iter().map(|v| v.max(0.0)));

    let sol = simplex::solve_min(&c, &rows, &b);

    let mut x = vec![0.0f64; m * n];
    for (k, &(i, j, _)) in edges.iter().enumerate() {
        x[i * n + j] = sol.x[k];
    }
    AllocationResult {
        m,
        n,
        x,
        objective: sol.objective,
        lambda: sol.duals[..m].to_vec(),
        eta: sol.duals[m..].to_vec(),
    }
}

/// Independent optimum by exhaustive vertex enumeration.
///
/// Every vertex of the feasible polytope keeps some edge set `S` basic and
/// makes `|S|` capacity rows tight; enumerating all `(S, R)` pairs and solving
/// the square system covers every basic feasible solution. Only meant for
/// `m*n ≤ 9`.
pub fn brute_force_allocation(
    inventory: &Inventory,
    demand: &DemandVector,
    price: f64,
    market: &MarketParams,
) -> Result<f64, TransportError> {
    let (m, n) = (market.m, market.n);
    let q = m * n;
    if q > 9 {
        return Err(TransportError::TooLarge(q));
    }
    let inv = inventory.levels();
    let dem = demand.values();
    let cost: Vec<f64> = (0..q).map(|e| market.c[e / n][e % n] - price).collect();
    let rows = m + n;
    let rhs: Vec<f64> = inv.iter().chain(dem.iter()).copied().collect();

    let feas_tol = 1e-9;
    let mut best = 0.0f64; // the zero allocation is always feasible

    for s_mask in 1u32..(1 << q) {
        let s: Vec<usize> = (0..q).filter(|&e| s_mask >> e & 1 == 1).collect();
        let k = s.len();
        if k > rows {
            continue;
        }
        for r_mask in 0u32..(1 << rows) {
            if r_mask.count_ones() as usize != k {
                continue;
            }
            let r: Vec<usize> = (0..rows).filter(|&i| r_mask >> i & 1 == 1).collect();
            // Square system: active rows over basic edges.
            let mut a = vec![vec![0.0f64; k + 1]; k];
            for (ri, &row) in r.iter().enumerate() {
                for (ci, &e) in s.iter().enumerate() {
                    let (i, j) = (e / n, e % n);
                    let hit = if row < m { i == row } else { j == row - m };
                    a[ri][ci] = if hit { 1.0 } else { 0.0 };
                }
                a[ri][k] = rhs[row];
            }
            let Some(xs) = solve_square(&mut a) else {
                continue;
            };
            if xs.iter().any(|&v| v < -feas_tol) {
                continue;
            }
            // Check all capacity rows.
            let mut loads = vec![0.0f64; rows];
            for (ci, &e) in s.iter().enumerate() {
                let (i, j) = (e / n, e % n);
                loads[i] += xs[ci];
                loads[m + j] += xs[ci];
            }
            if loads
                .iter()
                .zip(&rhs)
                .any(|(l, r)| *l > *r + feas_tol * (1.0 + r.abs()))
            {
                continue;
            }
            let value: f64 = s.iter().zip(&xs).map(|(&e, &x)| cost[e] * x).sum();
            if value < best {
                best = value;
            }
        }
    }
    Ok(best)
}

/// Gaussian elimination with partial pivoting on an augmented `k×(k+1)` system.
/// Returns `None` for (near-)singular systems.
fn solve_square(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Check feasibility, the duality gap, and complementary slackness of a solve.
/// Returns the first violated condition, if any.
pub fn verify_allocation(
    result: &AllocationResult,
    inventory: &Inventory,
    demand: &DemandVector,
    price: f64,
    market: &MarketParams,
    tol: f64,
) -> Result<(), String> {
    let (m, n) = (market.m, market.n);
    let inv = inventory.levels();
    let dem = demand.values();
    for (idx, &v) in result.x.iter().enumerate() {
        if v < -tol {
            return Err(format!("x[{idx}] negative: {v}"));
        }
    }
    for i in 0..m {
        let load: f64 = (0..n).map(|j| result.shipped(i, j)).sum();
        if load > inv[i] + tol {
            return Err(format!("supplier {i} overspent: {load} > {}", inv[i]));
        }
    }
    for j in 0..n {
        let load: f64 = (0..m).map(|i| result.shipped(i, j)).sum();
        if load > dem[j] + tol {
            return Err(format!("consumer {j} oversupplied: {load} > {}", dem[j]));
        }
    }
    for (i, &l) in result.lambda.iter().enumerate() {
        if l < -tol {
            return Err(format!("lambda[{i}] negative: {l}"));
        }
    }
    for (j, &e) in result.eta.iter().enumerate() {
        if e < -tol {
            return Err(format!("eta[{j}] negative: {e}"));
        }
    }
    let dual: f64 = -result
        .lambda
        .iter()
        .zip(inv)
        .map(|(l, v)| l * v)
        .sum::<f64>()
        - result.eta.iter().zip(dem).map(|(e, v)| e * v).sum::<f64>();
    if (result.objective - dual).abs() > tol * (1.0 + result.objective.abs()) {
        return Err(format!(
            "duality gap: primal {} vs dual {}",
            result.objective, dual
        ));
    }
    for i in 0..m {
        for j in 0..n {
            let reduced = market.c[i][j] - price + result.lambda[i] + result.eta[j];
            if reduced < -tol {
                return Err(format!("dual infeasible at edge ({i},{j}): {reduced}"));
            }
            if result.shipped(i, j) > tol && reduced > tol {
                return Err(format!(
                    "complementary slackness violated at ({i},{j}): x={} reduced={}",
                    result.shipped(i, j),
                    reduced
                ));
            }
        }
    }
    Ok(())
}
