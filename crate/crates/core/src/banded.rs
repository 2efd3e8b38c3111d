//! Banded matrices and an LU factorization with partial pivoting.

use nalgebra::DMatrix;

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn identity(n: usize, lower: usize, upper: usize) -> Self {
        let mut m = Self::zeros(n, lower, upper);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.lower >= i && j <= i + self.upper
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.lower + self.upper + 1) + (j + self.lower - i)
    }

    /// Entry `(i, j)`, zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j);
        self.data[k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.slot(i, j);
        self.data[k] += value;
    }

    /// Column range of the band in row `i`.
    pub fn row_span(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.lower)..(i + self.upper + 1).min(self.n)
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    /// `y = self * x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_span(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Returned when a zero pivot is met during factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroPivot {
    pub column: usize,
}

/// LU factors of a [`BandMatrix`] with row interchanges.
///
/// The upper factor carries `lower + upper` super-diagonals to absorb
/// the fill created by pivoting.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    lower: usize,
    width: usize,
    upper_rows: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn factor(m: &BandMatrix) -> Result<Self, ZeroPivot> {
        let n = m.n;
        let kl = m.lower;
        let width = m.lower + m.upper + 1 + kl;
        // Row i stores columns i - kl ..= i + kl + ku.
        let mut rows = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for j in m.row_span(i) {
                rows[at(i, j)] = m.get(i, j);
            }
        }
        let mut multipliers = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0; n];
        for col in 0..n {
            let last_row = (col + kl).min(n - 1);
            let mut p = col;
            let mut best = rows[at(col, col)].abs();
            for r in col + 1..=last_row {
                let v = rows[at(r, col)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(ZeroPivot { column: col });
            }
            pivots[col] = p;
            let last_col = (col + width - 1 - kl).min(n - 1);
            if p != col {
                for j in col..=last_col {
                    rows.swap(at(col, j), at(p, j));
                }
            }
            let pivot = rows[at(col, col)];
            for r in col + 1..=last_row {
                let factor = rows[at(r, col)] / pivot;
                multipliers[col * kl + (r - col - 1)] = factor;
                rows[at(r, col)] = 0.0;
                if factor != 0.0 {
                    for j in col + 1..=last_col {
                        let u = rows[at(col, j)];
                        rows[at(r, j)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self {
            n,
            lower: kl,
            width,
            upper_rows: rows,
            multipliers,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.lower;
        for col in 0..n {
            let p = self.pivots[col];
            if p != col {
                b.swap(col, p);
            }
            let bc = b[col];
            for r in col + 1..=(col + kl).min(n.saturating_sub(1)) {
                b[r] -= self.multipliers[col * kl + (r - col - 1)] * bc;
            }
        }
        let at = |i: usize, j: usize| i * self.width + (j + kl - i);
        for i in (0..n).rev() {
            let last_col = (i + self.width - 1 - kl).min(n - 1);
            let mut acc = b[i];
            for j in i + 1..=last_col {
                acc -= self.upper_rows[at(i, j)] * b[j];
            }
            b[i] = acc / self.upper_rows[at(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_matrix(n: usize, kl: usize, ku: usize) -> BandMatrix {
        let mut m = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in m.row_span(i) {
                let v = ((i * 7 + j * 13) % 11) as f64 - 5.0;
                m.set(i, j, v);
            }
        }
        m
    }

    #[test]
    fn solves_against_dense_reference() {
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (12, 3, 2), (20, 7, 7), (9, 0, 3)] {
            let m = sample_matrix(n, kl, ku);
            let dense = m.to_dense();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + 1.0).collect();
            let mut b = vec![0.0; n];
            m.mul_vec(&x, &mut b);
            match BandLu::factor(&m) {
                Ok(lu) => {
                    lu.solve_in_place(&mut b);
                    for i in 0..n {
                        assert_relative_eq!(b[i], x[i], epsilon = 1e-9, max_relative = 1e-9);
                    }
                }
                Err(_) => assert!(dense.determinant().abs() < 1e-9),
            }
        }
    }

    #[test]
    fn zero_matrix_reports_pivot() {
        let m = BandMatrix::zeros(4, 1, 1);
        assert_eq!(BandLu::factor(&m).unwrap_err(), ZeroPivot { column: 0 });
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 2, 2.0);
        m.set(2, 1, 3.0);
        m.set(2, 2, 1.0);
        let lu = BandLu::factor(&m).unwrap();
        let mut b = vec![2.0, 1.0 + 6.0, 6.0 + 3.0];
        lu.solve_in_place(&mut b);
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(b[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(b[2], 3.0, epsilon = 1e-14);
    }
}
