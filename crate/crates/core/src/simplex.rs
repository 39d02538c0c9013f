//! Dense tableau simplex for small linear programs of the form
//!
//! ```text
//! minimize cᵀx   subject to   Ax ≤ b,  x ≥ 0,  b ≥ 0
//! ```
//!
//! The nonnegative right-hand side makes the slack basis feasible, so a single
//! phase suffices. Entering and leaving variables follow Bland's rule; cost
//! ties are expected in this problem family (equal supply costs define the
//! interval breakpoints) and produce heavily degenerate vertices.
//!
//! Row multipliers come out of the final reduced-cost row under the slack
//! columns, which for a `min`/`≤` program are exactly the nonnegative duals:
//! the optimal value equals `-Σ duals[i]·b[i]` and every column satisfies
//! `c_j + Σ duals[i]·A[i][j] ≥ 0`.

/// An optimal vertex with its certifying row multipliers.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One nonnegative multiplier per constraint row.
    pub duals: Vec<f64>,
}

const PIVOT_EPS: f64 = 1e-11;

/// Solve `min cᵀx, Ax ≤ b, x ≥ 0` with `b ≥ 0`.
///
/// Panics if the iteration cap is hit or a column is unbounded; neither can
/// happen for the capacity-bounded programs built in this crate.
pub fn solve_min(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> LpSolution {
    let n = c.len();
    let m = rows.len();
    debug_assert_eq!(b.len(), m);
    debug_assert!(
        b.iter().all(|&bi| bi >= -1e-12),
        "right-hand side must be nonnegative"
    );

    let width = n + m + 1; // structural | slack | rhs
    let mut tab = vec![vec![0.0f64; width]; m];
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        tab[i][..n].copy_from_slice(row);
        tab[i][n + i] = 1.0;
        tab[i][width - 1] = b[i].max(0.0);
    }
    // Reduced costs; slack basis has zero cost, so these start as c itself.
    let mut red = vec![0.0f64; n + m];
    red[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_iter = 2000 * (n + m + 4);
    let mut solved = false;
    for _ in 0..max_iter {
        let Some(enter) = (0..n + m).find(|&j| red[j] < -PIVOT_EPS) else {
            solved = true;
            break;
        };

        // Ratio test: find the tightest row, breaking ties on the smallest
        // basis index (Bland) so degenerate pivots cannot cycle.
        let mut best_ratio = f64::INFINITY;
        for row in tab.iter() {
            if row[enter] > PIVOT_EPS {
                best_ratio = best_ratio.min(row[width - 1] / row[enter]);
            }
        }
        assert!(
            best_ratio.is_finite(),
            "unbounded column in a capacity-bounded program"
        );
        let tie = best_ratio + 1e-12 * (1.0 + best_ratio.abs());
        let leave = (0..m)
            .filter(|&i| tab[i][enter] > PIVOT_EPS && tab[i][width - 1] / tab[i][enter] <= tie)
            .min_by_key(|&i| basis[i])
            .expect("ratio test found no row");

        // Pivot on (leave, enter).
        let piv = tab[leave][enter];
        for v in tab[leave].iter_mut() {
            *v /= piv;
        }
        tab[leave][enter] = 1.0;
        for i in 0..m {
            if i != leave {
                let f = tab[i][enter];
                if f != 0.0 {
                    for k in 0..width {
                        tab[i][k] -= f * tab[leave][k];
                    }
                    tab[i][enter] = 0.0;
                }
            }
        }
        let f = red[enter];
        if f != 0.0 {
            for k in 0..n + m {
                red[k] -= f * tab[leave][k];
            }
            red[enter] = 0.0;
        }
        basis[leave] = enter;
    }
    assert!(solved, "simplex iteration cap exceeded");

    let mut x = vec![0.0f64; n];
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = tab[i][width - 1].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    let duals = (0..m).map(|i| red[n + i].max(0.0)).collect();
    LpSolution { x, objective, duals }
}
