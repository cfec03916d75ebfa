//! Streaming least squares by Givens rotations: rows are folded one at a
//! time into an upper-triangular factor, so the design matrix is never
//! stored.

/// Accumulated `R`, `Qᵀy` and residual sum of squares.
#[derive(Clone, Debug)]
pub struct GivensLs {
    n: usize,
    r: Vec<f64>,
    qtb: Vec<f64>,
    rss: f64,
    col_sq: Vec<f64>,
    rows: usize,
}

/// Solution of a least-squares problem.
#[derive(Clone, Debug, PartialEq)]
pub struct LsSolution {
    pub theta: Vec<f64>,
    /// True when the ridge fallback was used.
    pub regularized: bool,
}

impl GivensLs {
    pub fn new(n: usize) -> Self {
        GivensLs { n, r: vec![0.0; n * n], qtb: vec![0.0; n], rss: 0.0, col_sq: vec![0.0; n], rows: 0 }
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Residual sum of squares of the unregularized solution.
    pub fn rss(&self) -> f64 {
        self.rss
    }

    /// Folds in the equation `row · θ ≈ y`. `row` is used as scratch.
    pub fn add_row(&mut self, row: &mut [f64], mut y: f64) {
        debug_assert_eq!(row.len(), self.n);
        let n = self.n;
        for (s, x) in self.col_sq.iter_mut().zip(row.iter()) {
            *s += x * x;
        }
        for i in 0..n {
            let a = row[i];
            if a == 0.0 {
                continue;
            }
            let d = self.r[i * n + i];
            let h = d.hypot(a);
            let (c, s) = (d / h, a / h);
            self.r[i * n + i] = h;
            for j in i + 1..n {
                let rij = self.r[i * n + j];
                let x = row[j];
                self.r[i * n + j] = c * rij + s * x;
                row[j] = c * x - s * rij;
            }
            let q = self.qtb[i];
            self.qtb[i] = c * q + s * y;
            y = c * y - s * q;
        }
        self.rss += y * y;
        self.rows += 1;
    }

    fn rank_deficient(&self) -> bool {
        (0..self.n).any(|i| {
            let d = self.r[i * self.n + i].abs();
            d <= 1e-12 * self.col_sq[i].sqrt() || d == 0.0
        })
    }

    fn back_substitute(&self) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = self.qtb[i];
            for j in i + 1..n {
                s -= self.r[i * n + j] * x[j];
            }
            x[i] = s / self.r[i * n + i];
        }
        x
    }

    /// Minimizer of `|Aθ - y|²`. On (numerical) rank deficiency, solves the
    /// ridge problem with `λ = 1e-10 · trace(AᵀA)/n` instead.
    pub fn solve(&self) -> LsSolution {
        if !self.rank_deficient() {
            return LsSolution { theta: self.back_substitute(), regularized: false };
        }
        let trace: f64 = self.col_sq.iter().sum();
        let lambda = if trace > 0.0 { 1e-10 * trace / self.n as f64 } else { 1.0 };
        let mut ridge = self.clone();
        let mut row = vec![0.0; self.n];
        for i in 0..self.n {
            row.iter_mut().for_each(|x| *x = 0.0);
            row[i] = lambda.sqrt();
            ridge.add_row(&mut row, 0.0);
        }
        LsSolution { theta: ridge.back_substitute(), regularized: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Normal equations solved by Gaussian elimination with partial pivoting.
    fn normal_solve(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let n = a[0].len();
        let mut m = vec![vec![0.0; n + 1]; n];
        for (row, &yy) in a.iter().zip(y) {
            for i in 0..n {
                for j in 0..n {
                    m[i][j] += row[i] * row[j];
                }
                m[i][n] += row[i] * yy;
            }
        }
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            x[i] = (m[i][n] - (i + 1..n).map(|j| m[i][j] * x[j]).sum::<f64>()) / m[i][i];
        }
        x
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a: Vec<Vec<f64>> = (0..200).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut ls = GivensLs::new(6);
        for (row, &yy) in a.iter().zip(&y) {
            ls.add_row(&mut row.clone(), yy);
        }
        let sol = ls.solve();
        assert!(!sol.regularized);
        let want = normal_solve(&a, &y);
        for (g, w) in sol.theta.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        let rss: f64 = a
            .iter()
            .zip(&y)
            .map(|(row, yy)| (yy - row.iter().zip(&want).map(|(p, q)| p * q).sum::<f64>()).powi(2))
            .sum();
        assert!((ls.rss() - rss).abs() < 1e-10 * rss);
    }

    #[test]
    fn exact_data_recovered() {
        let theta = [0.5, -2.0, 3.25];
        let mut ls = GivensLs::new(3);
        for i in 0..20 {
            let x = i as f64;
            let mut row = [1.0, x, x * x];
            let y = theta[0] + theta[1] * x + theta[2] * x * x;
            ls.add_row(&mut row, y);
        }
        let sol = ls.solve();
        for (g, w) in sol.theta.iter().zip(theta) {
            assert!((g - w).abs() < 1e-10);
        }
        assert!(ls.rss() < 1e-18);
    }

    #[test]
    fn duplicate_column_falls_back_to_ridge() {
        let mut ls = GivensLs::new(2);
        for i in 0..10 {
            let x = i as f64;
            ls.add_row(&mut [x, x], 2.0 * x);
        }
        let sol = ls.solve();
        assert!(sol.regularized);
        assert!(sol.theta.iter().all(|t| t.is_finite()));
        assert!((sol.theta[0] + sol.theta[1] - 2.0).abs() < 1e-6);
    }
}
