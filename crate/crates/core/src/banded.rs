//! Direct solvers for the banded systems produced by the sector stencil.
//!
//! Nodes are numbered ring by ring, so every coupling lies within `n_theta`
//! of the diagonal. Cholesky handles the Gram matrix, LU with partial
//! pivoting handles the indefinite Newton Jacobian.

use crate::error::{Error, Result};

/// Symmetric band matrix, lower half stored row by row.
#[derive(Debug, Clone)]
pub struct BandedSym {
    n: usize,
    b: usize,
    // row i holds columns i-b ..= i at offsets 0 ..= b
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, b: usize) -> Self {
        BandedSym {
            n,
            b,
            data: vec![0.0; n * (b + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.b
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.b);
        i * (self.b + 1) + (j + self.b - i)
    }

    /// Adds `val` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, val: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let at = self.idx(i, j);
        self.data[at] += val;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.b {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.b);
            let row = &self.data[i * (self.b + 1)..(i + 1) * (self.b + 1)];
            let mut acc = 0.0;
            for j in lo..i {
                let a = row[j + self.b - i];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc + row[self.b] * x[i];
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let lo_i = i.saturating_sub(b);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(b));
                let mut s = l[i * w + (j + b - i)];
                let ri = i * w + b - i;
                let rj = j * w + b - j;
                for k in lo..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Degenerate(format!(
                            "matrix not positive definite at row {i} (pivot {s:.3e})"
                        )));
                    }
                    l[i * w + b] = s.sqrt();
                } else {
                    l[i * w + (j + b - i)] = s / l[j * w + b];
                }
            }
        }
        Ok(BandedCholesky { n, b, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    b: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let w = b + 1;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let base = i * w + b - i;
            let mut s = y[i];
            for k in lo..i {
                s -= self.l[base + k] * y[k];
            }
            y[i] = s / self.l[i * w + b];
        }
        for i in (0..n).rev() {
            let lo = i.saturating_sub(b);
            let base = i * w + b - i;
            let zi = y[i] / self.l[i * w + b];
            y[i] = zi;
            for k in lo..i {
                y[k] -= self.l[base + k] * zi;
            }
        }
        y
    }
}

/// General band matrix with equal lower and upper bandwidth `b`.
#[derive(Debug, Clone)]
pub struct BandedGeneral {
    n: usize,
    b: usize,
    // row r holds columns r-b ..= r+2b; the extra b columns absorb pivoting fill
    data: Vec<f64>,
}

impl BandedGeneral {
    pub fn zeros(n: usize, b: usize) -> Self {
        BandedGeneral {
            n,
            b,
            data: vec![0.0; n * (3 * b + 1)],
        }
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.b >= r && c <= r + 2 * self.b);
        r * (3 * self.b + 1) + (c + self.b - r)
    }

    pub fn add(&mut self, r: usize, c: usize, val: f64) {
        assert!(r.abs_diff(c) <= self.b, "entry ({r}, {c}) outside the band");
        let at = self.idx(r, c);
        self.data[at] += val;
    }

    pub fn from_sym(sym: &BandedSym) -> Self {
        let mut g = BandedGeneral::zeros(sym.n, sym.b);
        for i in 0..sym.n {
            for j in i.saturating_sub(sym.b)..=i {
                let v = sym.data[sym.idx(i, j)];
                g.add(i, j, v);
                if i != j {
                    g.add(j, i, v);
                }
            }
        }
        g
    }

    pub fn lu(mut self) -> Result<BandedLu> {
        let (n, b) = (self.n, self.b);
        let mut piv = vec![0usize; n];
        let mut mult = vec![0.0; n * b];
        for c in 0..n {
            let last_row = (c + b).min(n - 1);
            let last_col = (c + 2 * b).min(n - 1);
            let mut p = c;
            let mut best = self.data[self.idx(c, c)].abs();
            for r in c + 1..=last_row {
                let v = self.data[self.idx(r, c)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::Degenerate(format!("singular band matrix at column {c}")));
            }
            piv[c] = p;
            if p != c {
                for col in c..=last_col {
                    let (a, bb) = (self.idx(c, col), self.idx(p, col));
                    self.data.swap(a, bb);
                }
            }
            let pivot = self.data[self.idx(c, c)];
            for r in c + 1..=last_row {
                let m = self.data[self.idx(r, c)] / pivot;
                mult[c * b + (r - c - 1)] = m;
                if m != 0.0 {
                    for col in c + 1..=last_col {
                        let u = self.data[self.idx(c, col)];
                        let at = self.idx(r, col);
                        self.data[at] -= m * u;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            b,
            u: self.data,
            piv,
            mult,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    b: usize,
    u: Vec<f64>,
    piv: Vec<usize>,
    mult: Vec<f64>,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b) = (self.n, self.b);
        let w = 3 * b + 1;
        let mut y = rhs.to_vec();
        for c in 0..n {
            y.swap(c, self.piv[c]);
            let yc = y[c];
            for r in c + 1..=(c + b).min(n - 1) {
                y[r] -= self.mult[c * b + (r - c - 1)] * yc;
            }
        }
        for c in (0..n).rev() {
            let last_col = (c + 2 * b).min(n - 1);
            let mut s = y[c];
            for col in c + 1..=last_col {
                s -= self.u[c * w + (col + b - c)] * y[col];
            }
            y[c] = s / self.u[c * w + b];
        }
        y
    }
}
