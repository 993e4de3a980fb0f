//! Complex banded LU factorisation with partial pivoting.
//!
//! Storage follows the classic compact layout: row `i` of the band holds
//! `A[i][i - m1 ..= i + m2]`, so element `(i, j)` lives at column
//! `j + m1 - i`. Pivoting widens the upper band of `U` to `m1 + m2`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    m1: usize,
    m2: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    /// `m1` sub-diagonals and `m2` super-diagonals.
    pub fn zeros(n: usize, m1: usize, m2: usize) -> Self {
        Self {
            n,
            m1,
            m2,
            data: vec![Complex64::new(0.0, 0.0); n * (m1 + m2 + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        self.m1 + self.m2 + 1
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        assert!(i < self.n && j < self.n, "({i}, {j}) outside {}x{}", self.n, self.n);
        assert!(
            j + self.m1 >= i && j <= i + self.m2,
            "({i}, {j}) outside band m1={} m2={}",
            self.m1,
            self.m2
        );
        i * self.width() + (j + self.m1 - i)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if j + self.m1 < i || j > i + self.m2 {
            return Complex64::new(0.0, 0.0);
        }
        self.data[self.slot(i, j)]
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.m1);
                let hi = (i + self.m2).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(self) -> Result<BandLu> {
        let BandMatrix { n, m1, m2, mut data } = self;
        let mm = m1 + m2 + 1;
        let zero = Complex64::new(0.0, 0.0);
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max);

        // shift the first m1 rows left so every row starts at its first nonzero
        let mut l = m1;
        for i in 0..m1.min(n) {
            for j in (m1 - i)..mm {
                data[i * mm + j - l] = data[i * mm + j];
            }
            l -= 1;
            for j in (mm - l - 1)..mm {
                data[i * mm + j] = zero;
            }
        }

        let mut lower = vec![zero; n * m1.max(1)];
        let mut pivots = vec![0usize; n];
        let mut l = m1;
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for k in 0..n {
            let mut pivot = data[k * mm];
            let mut p = k;
            if l < n {
                l += 1;
            }
            for j in (k + 1)..l {
                if data[j * mm].norm() > pivot.norm() {
                    pivot = data[j * mm];
                    p = j;
                }
            }
            pivots[k] = p;
            let magnitude = pivot.norm();
            if magnitude <= f64::EPSILON * scale * 1e-3 || magnitude == 0.0 {
                return Err(Error::SingularSystem {
                    row: k,
                    condition_estimate: if magnitude == 0.0 {
                        f64::INFINITY
                    } else {
                        max_pivot.max(scale) / magnitude
                    },
                });
            }
            min_pivot = min_pivot.min(magnitude);
            max_pivot = max_pivot.max(magnitude);
            if p != k {
                for j in 0..mm {
                    data.swap(k * mm + j, p * mm + j);
                }
            }
            for i in (k + 1)..l {
                let factor = data[i * mm] / data[k * mm];
                lower[k * m1 + i - k - 1] = factor;
                for j in 1..mm {
                    data[i * mm + j - 1] = data[i * mm + j] - factor * data[k * mm + j];
                }
                data[i * mm + mm - 1] = zero;
            }
        }
        Ok(BandLu {
            n,
            m1,
            m2,
            upper: data,
            lower,
            pivots,
            pivot_ratio: max_pivot / min_pivot,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    m1: usize,
    m2: usize,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
    pivots: Vec<usize>,
    pivot_ratio: f64,
}

impl BandLu {
    /// Ratio of largest to smallest pivot modulus, a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let (n, m1) = (self.n, self.m1);
        let mm = self.m1 + self.m2 + 1;
        let mut l = m1;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            if l < n {
                l += 1;
            }
            for j in (k + 1)..l {
                let f = self.lower[k * m1 + j - k - 1];
                let bk = b[k];
                b[j] -= f * bk;
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in 1..l {
                acc -= self.upper[i * mm + k] * b[k + i];
            }
            b[i] = acc / self.upper[i * mm];
            if l < mm {
                l += 1;
            }
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
