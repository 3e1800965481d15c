//! Dense least squares via Householder QR with column pivoting.
//!
//! Rank is decided by `|R[k][k]| > RANK_TOLERANCE * max column norm`. For a
//! rank-deficient system the minimum-norm solution is recovered with a second
//! QR factorization of the leading `r` rows of `R` (a complete orthogonal
//! decomposition).

/// Relative pivot threshold used for rank detection.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Matrix {
            rows,
            cols: columns.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn column_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn swap_columns(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(a * self.rows + r, b * self.rows + r);
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.column(c)) {
                *o += a * xc;
            }
        }
        out
    }

    /// `Aᵀ v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        (0..self.cols).map(|c| dot(self.column(c), v)).collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    // scaled to avoid overflow on large entries
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * a.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Householder QR of `a` in place. Reflector `k` is stored below the diagonal
/// of column `k` with its scaling in `betas[k]`; `R` occupies the upper
/// triangle. With `pivot`, columns are greedily reordered by remaining norm.
struct Householder {
    qr: Matrix,
    betas: Vec<f64>,
    perm: Vec<usize>,
}

impl Householder {
    fn factor(mut a: Matrix, pivot: bool) -> Self {
        let (m, n) = (a.rows, a.cols);
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut betas = vec![0.0; steps];
        for k in 0..steps {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for c in k..n {
                    let nc = norm(&a.column(c)[k..]);
                    if nc > best_norm {
                        best_norm = nc;
                        best = c;
                    }
                }
                a.swap_columns(k, best);
                perm.swap(k, best);
            }
            let col = &mut a.column_mut(k)[k..];
            let alpha = norm(col);
            if alpha == 0.0 {
                betas[k] = 0.0;
                continue;
            }
            let sign = if col[0] >= 0.0 { 1.0 } else { -1.0 };
            let v0 = col[0] + sign * alpha;
            // v = [1, col[1..] / v0], R[k][k] = -sign * alpha
            for x in col[1..].iter_mut() {
                *x /= v0;
            }
            col[0] = -sign * alpha;
            let beta = sign * v0 / alpha;
            betas[k] = beta;
            for c in k + 1..n {
                let (head, tail) = a.data.split_at_mut(c * m);
                let v = &head[k * m + k..k * m + m];
                let target = &mut tail[k..m];
                let mut s = target[0];
                for i in 1..v.len() {
                    s += v[i] * target[i];
                }
                s *= beta;
                target[0] -= s;
                for i in 1..v.len() {
                    target[i] -= s * v[i];
                }
            }
        }
        Householder { qr: a, betas, perm }
    }

    /// Overwrites `b` with `Qᵀ b`.
    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.qr.rows;
        for (k, &beta) in self.betas.iter().enumerate() {
            if beta == 0.0 {
                continue;
            }
            let v = &self.qr.column(k)[k..m];
            let mut s = b[k];
            for i in 1..v.len() {
                s += v[i] * b[k + i];
            }
            s *= beta;
            b[k] -= s;
            for i in 1..v.len() {
                b[k + i] -= s * v[i];
            }
        }
    }

    /// Overwrites `b` (length `rows`) with `Q b`.
    fn apply_q(&self, b: &mut [f64]) {
        let m = self.qr.rows;
        for (k, &beta) in self.betas.iter().enumerate().rev() {
            if beta == 0.0 {
                continue;
            }
            let v = &self.qr.column(k)[k..m];
            let mut s = b[k];
            for i in 1..v.len() {
                s += v[i] * b[k + i];
            }
            s *= beta;
            b[k] -= s;
            for i in 1..v.len() {
                b[k + i] -= s * v[i];
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.qr.get(i, j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub coefficients: Vec<f64>,
    pub rank: usize,
}

/// Minimum-norm solution of `min ‖A x − b‖₂`.
pub fn lstsq(a: &Matrix, b: &[f64]) -> LstsqSolution {
    assert_eq!(a.rows, b.len(), "right-hand side length mismatch");
    let n = a.cols;
    if n == 0 {
        return LstsqSolution { coefficients: Vec::new(), rank: 0 };
    }
    let max_col_norm = (0..n).map(|c| norm(a.column(c))).fold(0.0, f64::max);
    let f = Householder::factor(a.clone(), true);
    let steps = a.rows.min(n);
    let threshold = RANK_TOLERANCE * max_col_norm;
    let rank = (0..steps)
        .take_while(|&k| f.r(k, k).abs() > threshold)
        .count();

    let mut qtb = b.to_vec();
    f.apply_qt(&mut qtb);
    let c = &qtb[..rank];

    let z = if rank == n {
        back_substitute(|i, j| f.r(i, j), c)
    } else if rank == 0 {
        vec![0.0; n]
    } else {
        // T = [R11 R12] (rank × n); min-norm z solves T z = c.
        // Tᵀ = Q2 R2  =>  z = Q2 [R2⁻ᵀ c; 0].
        let mut tt = Matrix::zeros(n, rank);
        for i in 0..rank {
            for j in i..n {
                tt.set(j, i, f.r(i, j));
            }
        }
        let g = Householder::factor(tt, false);
        let w = forward_substitute_transposed(|i, j| g.r(i, j), c);
        let mut z = vec![0.0; n];
        z[..rank].copy_from_slice(&w);
        g.apply_q(&mut z);
        z
    };

    let mut coefficients = vec![0.0; n];
    for (k, &p) in f.perm.iter().enumerate() {
        coefficients[p] = z[k];
    }
    LstsqSolution { coefficients, rank }
}

/// Solves `U x = c` for upper-triangular `U` given by accessor.
fn back_substitute(u: impl Fn(usize, usize) -> f64, c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = c[i];
        for j in i + 1..n {
            s -= u(i, j) * x[j];
        }
        x[i] = s / u(i, i);
    }
    x
}

/// Solves `Uᵀ x = c` for upper-triangular `U` given by accessor.
fn forward_substitute_transposed(u: impl Fn(usize, usize) -> f64, c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = c[i];
        for j in 0..i {
            s -= u(j, i) * x[j];
        }
        x[i] = s / u(i, i);
    }
    x
}
