//! Small sparse kernels used by the giant minimiser and the implicit solver.

/// Symmetric matrix in compressed-row form.
#[derive(Debug, Clone, Default)]
pub struct CsrMatrix {
    pub n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Row-by-row builder; rows must be pushed in order.
#[derive(Debug, Default)]
pub struct CsrBuilder {
    m: CsrMatrix,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        let mut m = CsrMatrix {
            n,
            ..Default::default()
        };
        m.row_ptr.reserve(n + 1);
        m.row_ptr.push(0);
        Self { m }
    }

    pub fn push_row(&mut self, entries: &[(usize, f64)]) {
        for &(c, v) in entries {
            self.m.cols.push(c);
            self.m.vals.push(v);
        }
        self.m.row_ptr.push(self.m.cols.len());
    }

    pub fn finish(self) -> CsrMatrix {
        assert_eq!(self.m.row_ptr.len(), self.m.n + 1, "every row must be pushed");
        self.m
    }
}

impl CsrMatrix {
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            *yr = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .find(|&i| self.cols[i] == r)
                    .map_or(0.0, |i| self.vals[i])
            })
            .collect()
    }

    /// True when the matrix is tridiagonal (every row touches only r-1, r, r+1).
    pub fn is_tridiagonal(&self) -> bool {
        (0..self.n).all(|r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).all(|i| self.cols[i] + 1 >= r && self.cols[i] <= r + 1)
        })
    }

    fn tridiagonal_bands(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut lower = vec![0.0; self.n];
        let mut diag = vec![0.0; self.n];
        let mut upper = vec![0.0; self.n];
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[i];
                if c + 1 == r {
                    lower[r] = self.vals[i];
                } else if c == r {
                    diag[r] = self.vals[i];
                } else {
                    upper[r] = self.vals[i];
                }
            }
        }
        (lower, diag, upper)
    }

    /// Solves `A x = b` for a symmetric positive definite `A`: directly when the
    /// matrix is tridiagonal, otherwise by Jacobi-preconditioned CG starting
    /// from `x`. Returns the number of CG iterations (0 for the direct path).
    pub fn solve_spd(&self, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> usize {
        if self.is_tridiagonal() {
            let (l, d, u) = self.tridiagonal_bands();
            thomas(&l, &d, &u, b, x);
            return 0;
        }
        conjugate_gradient(self, b, x, rel_tol, max_iter)
    }
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], x: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> usize {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = vec![0.0; n];
    a.mul_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let b_norm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    if dot(&r, &r).sqrt() <= rel_tol * b_norm {
        return 0;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return it;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= rel_tol * b_norm {
            return it;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    max_iter
}
