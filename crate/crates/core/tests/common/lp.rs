//! Dense two-phase simplex for the transportation LP, used as an oracle.
//!
//! Deliberately unrelated to the library's shortest-path solver: it works on
//! the raw equality system with artificial variables and Bland's rule.

const TOL: f64 = 1e-12;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `obj · x` over the columns with `allowed[j]`.
    fn run(&mut self, obj: &[f64], allowed: &[bool]) {
        loop {
            let entering = (0..self.cols).find(|&j| {
                allowed[j] && !self.basis.contains(&j) && {
                    let z: f64 = self.basis.iter().zip(&self.rows).map(|(&b, row)| obj[b] * row[j]).sum();
                    obj[j] - z < -TOL
                }
            });
            let Some(c) = entering else { return };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > TOL {
                    let ratio = row[self.cols] / row[c];
                    let better = match best {
                        None => true,
                        Some((bi, br)) => ratio < br - TOL || (ratio <= br + TOL && self.basis[i] < self.basis[bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let (r, _) = best.expect("transportation LP is bounded");
            self.pivot(r, c);
        }
    }
}

/// Optimal value of `min Σ c_ij x_ij` subject to row sums `a`, column sums `b`, `x >= 0`.
pub fn transport_lp(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let vars = n * m;
    let cons = n + m;
    let cols = vars + cons;
    let mut rows = vec![vec![0.0; cols + 1]; cons];
    for i in 0..n {
        for j in 0..m {
            rows[i][i * m + j] = 1.0;
            rows[n + j][i * m + j] = 1.0;
        }
    }
    for (k, row) in rows.iter_mut().enumerate() {
        row[vars + k] = 1.0;
        row[cols] = if k < n { a[k] } else { b[k - n] };
    }
    let mut t = Tableau { rows, basis: (vars..cols).collect(), cols };

    let phase1: Vec<f64> = (0..cols).map(|j| if j >= vars { 1.0 } else { 0.0 }).collect();
    t.run(&phase1, &vec![true; cols]);

    // Drive zero-level artificials out of the basis where possible; rows that
    // cannot be pivoted are redundant and keep their artificial at zero.
    for r in 0..cons {
        if t.basis[r] >= vars {
            if let Some(c) = (0..vars).find(|&j| t.rows[r][j].abs() > 1e-9 && !t.basis.contains(&j)) {
                t.pivot(r, c);
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    for i in 0..n {
        for j in 0..m {
            phase2[i * m + j] = cost[i][j];
        }
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < vars).collect();
    t.run(&phase2, &allowed);
    t.basis.iter().zip(&t.rows).map(|(&b, row)| phase2[b] * row[cols]).sum()
}

#[test]
fn lp_oracle_hand_cases() {
    // Identity costs: moving along the diagonal is free.
    let c = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    assert!(transport_lp(&c, &[0.5, 0.5], &[0.5, 0.5]).abs() < 1e-12);
    // All mass from one source spreads to two sinks.
    let c = vec![vec![2.0, 3.0]];
    assert!((transport_lp(&c, &[1.0], &[0.25, 0.75]) - 2.75).abs() < 1e-12);
    // Crossing is never optimal on a line: {0, 1} -> {2, 3}.
    let c = vec![vec![2.0, 3.0], vec![1.0, 2.0]];
    assert!((transport_lp(&c, &[0.5, 0.5], &[0.5, 0.5]) - 2.0).abs() < 1e-12);
}
