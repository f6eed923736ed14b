//! Symmetric band matrices and their Cholesky factors.
//!
//! Row `i` stores columns `i - bw ..= i` of the lower triangle.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds to entry `(i, j)` with `j <= i`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.at(i, j);
        self.data[p] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.at(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.at(i, i)] * x[i];
        }
        y
    }

    /// In-place Cholesky `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // dot of L[i][lo..j] and L[j][lo..j]
                let len = j - lo;
                let ri = i * w + (lo + bw - i);
                let rj = j * w + (lo + bw - j);
                let dot: f64 = self.data[ri..ri + len]
                    .iter()
                    .zip(&self.data[rj..rj + len])
                    .map(|(a, b)| a * b)
                    .sum();
                let p = i * w + (j + bw - i);
                let s = self.data[p] - dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: s });
                    }
                    self.data[p] = s.sqrt();
                } else {
                    self.data[p] = s / self.data[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { factor: self })
    }
}

/// Lower-triangular band factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    factor: BandedSym,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.factor.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let (n, bw) = (f.n, f.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let ri = i * w + (lo + bw - i);
            let dot: f64 = f.data[ri..ri + (i - lo)]
                .iter()
                .zip(&y[lo..i])
                .map(|(a, b)| a * b)
                .sum();
            y[i] = (y[i] - dot) / f.data[i * w + bw];
        }
        for i in (0..n).rev() {
            y[i] /= f.data[i * w + bw];
            let xi = y[i];
            let lo = i.saturating_sub(bw);
            let ri = i * w + (lo + bw - i);
            for (yk, l) in y[lo..i].iter_mut().zip(&f.data[ri..ri + (i - lo)]) {
                *yk -= l * xi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_plus(n: usize, shift: f64) -> BandedSym {
        let mut m = BandedSym::zeros(n, 2);
        for i in 0..n {
            m.add(i, i, 2.0 + shift);
            if i >= 1 {
                m.add(i, i - 1, -1.0);
            }
            if i >= 2 {
                m.add(i, i - 2, 0.1);
            }
        }
        m
    }

    #[test]
    fn solves_banded_system() {
        let m = laplacian_plus(30, 0.5);
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = m.matvec(&x);
        let sol = m.cholesky().unwrap().solve(&b);
        for (a, e) in sol.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_reported() {
        let mut m = BandedSym::zeros(3, 1);
        m.add(0, 0, 1.0);
        m.add(1, 0, 2.0);
        m.add(1, 1, 1.0);
        m.add(2, 2, 1.0);
        assert!(matches!(
            m.cholesky(),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }
}
