//! Minimal dense linear algebra for small problems: LU solves for Newton
//! systems and a scaling-and-squaring matrix exponential for phase-type
//! distribution evaluation. Sizes here are a few hundred at most, so plain
//! row-major storage and O(n^3) kernels are appropriate.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, other: &Matrix, factor: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += factor * s;
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting, stored in place.
pub struct LuFactors {
    lu: Matrix,
    pivots: Vec<usize>,
}

/// Factors a square matrix; fails on (numerical) singularity.
pub fn lu_factor(mut a: Matrix) -> Result<LuFactors, &'static str> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let mut p = k;
        let mut max = a.get(k, k).abs();
        for r in k + 1..n {
            let v = a.get(r, k).abs();
            if v > max {
                max = v;
                p = r;
            }
        }
        if max == 0.0 || !max.is_finite() {
            return Err("singular matrix in LU factorization");
        }
        pivots[k] = p;
        if p != k {
            for c in 0..n {
                let tmp = a.get(k, c);
                a.set(k, c, a.get(p, c));
                a.set(p, c, tmp);
            }
        }
        let pivot = a.get(k, k);
        for r in k + 1..n {
            let factor = a.get(r, k) / pivot;
            a.set(r, k, factor);
            if factor != 0.0 {
                for c in k + 1..n {
                    let v = a.get(r, c) - factor * a.get(k, c);
                    a.set(r, c, v);
                }
            }
        }
    }
    Ok(LuFactors { lu: a, pivots })
}

impl LuFactors {
    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        // apply the full row permutation first, then triangular solves
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..n {
                    x[r] -= self.lu.get(r, k) * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut sum = x[k];
            for c in k + 1..n {
                sum -= self.lu.get(k, c) * x[c];
            }
            x[k] = sum / self.lu.get(k, k);
        }
        x
    }

    pub fn solve_mat(&self, rhs: &Matrix) -> Matrix {
        let n = self.lu.rows;
        assert_eq!(rhs.rows, n);
        let mut out = Matrix::zeros(n, rhs.cols);
        let mut col = vec![0.0; n];
        for c in 0..rhs.cols {
            for r in 0..n {
                col[r] = rhs.get(r, c);
            }
            let solved = self.solve_vec(&col);
            for r in 0..n {
                out.set(r, c, solved[r]);
            }
        }
        out
    }
}

/// Matrix exponential by scaling and squaring with a degree-13 Pade
/// approximant. Accurate to close to machine precision for the small
/// generator matrices used here.
pub fn expm(a: &Matrix) -> Matrix {
    assert_eq!(a.rows, a.cols);
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let norm = a.one_norm();
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a_scaled = a.scaled(0.5f64.powi(squarings as i32));

    let n = a.rows;
    let ident = Matrix::identity(n);
    let a2 = a_scaled.matmul(&a_scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let mut inner_u = a6.scaled(B[13]);
    inner_u.add_assign_scaled(&a4, B[11]);
    inner_u.add_assign_scaled(&a2, B[9]);
    let mut u = a6.matmul(&inner_u);
    u.add_assign_scaled(&a6, B[7]);
    u.add_assign_scaled(&a4, B[5]);
    u.add_assign_scaled(&a2, B[3]);
    u.add_assign_scaled(&ident, B[1]);
    let u = a_scaled.matmul(&u);

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut inner_v = a6.scaled(B[12]);
    inner_v.add_assign_scaled(&a4, B[10]);
    inner_v.add_assign_scaled(&a2, B[8]);
    let mut v = a6.matmul(&inner_v);
    v.add_assign_scaled(&a6, B[6]);
    v.add_assign_scaled(&a4, B[4]);
    v.add_assign_scaled(&a2, B[2]);
    v.add_assign_scaled(&ident, B[0]);

    // solve (V - U) X = (V + U)
    let mut lhs = v.clone();
    lhs.add_assign_scaled(&u, -1.0);
    let mut rhs = v;
    rhs.add_assign_scaled(&u, 1.0);
    let factors = lu_factor(lhs).expect("Pade denominator must be nonsingular");
    let mut x = factors.solve_mat(&rhs);
    for _ in 0..squarings {
        x = x.matmul(&x);
    }
    x
}
