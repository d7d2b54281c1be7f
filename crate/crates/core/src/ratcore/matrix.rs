use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{rat_int, rat_to_f64, Rat, RatError, RatPoly};

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rat>) -> Result<Self, RatError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(RatError::Shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(RatMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<Self, RatError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(RatError::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Convenience constructor for integer matrices written as nested slices.
    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let data: Vec<Vec<Rat>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| rat_int(v)).collect())
            .collect();
        Self::from_rows(data).expect("well-formed literal matrix")
    }

    pub fn diagonal(entries: &[Rat]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.iter().enumerate() {
            m.data[i * n + i] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rat {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[Rat] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Rat] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Rat> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    /// Matrix product. Panics on incompatible shapes.
    pub fn matmul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if !b.is_zero() {
                        out.data[r * other.cols + c] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: &Rat) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> RatMatrix {
        assert!(self.is_square());
        let mut out = Self::identity(self.rows);
        for _ in 0..e {
            out = out.matmul(self);
        }
        out
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> RatMatrix {
        let mut out = Self::zeros(r1 - r0, c1 - c0);
        for r in r0..r1 {
            for c in c0..c1 {
                out.set(r - r0, c - c0, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn det(&self) -> Result<Rat, RatError> {
        self.require_square()?;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = Rat::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
                return Ok(Rat::zero());
            };
            if p != col {
                for c in 0..n {
                    a.swap(p * n + c, col * n + c);
                }
                det = -det;
            }
            let pivot = a[col * n + col].clone();
            det *= &pivot;
            for r in col + 1..n {
                let f = &a[r * n + col] / &pivot;
                if f.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = &f * &a[col * n + c];
                    a[r * n + c] -= v;
                }
            }
        }
        Ok(det)
    }

    /// Exact inverse by Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<RatMatrix, RatError> {
        self.require_square()?;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n)
                .find(|&r| !a.get(r, col).is_zero())
                .ok_or(RatError::Singular)?;
            if p != col {
                a.swap_rows(p, col);
                inv.swap_rows(p, col);
            }
            let pivot = Rat::one() / a.get(col, col);
            a.scale_row(col, &pivot);
            inv.scale_row(col, &pivot);
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                a.sub_row_multiple(r, col, &f);
                inv.sub_row_multiple(r, col, &f);
            }
        }
        Ok(inv)
    }

    /// Solves `self * x = b` exactly for square nonsingular `self`.
    pub fn solve(&self, b: &[Rat]) -> Result<Vec<Rat>, RatError> {
        Ok(self.inverse()?.mul_vec(b))
    }

    pub fn rank(&self) -> usize {
        let (_, pivots) = self.row_echelon();
        pivots.len()
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn row_echelon(&self) -> (RatMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !a.get(r, col).is_zero()) else {
                continue;
            };
            a.swap_rows(p, row);
            let inv = Rat::one() / a.get(row, col);
            a.scale_row(row, &inv);
            for r in 0..self.rows {
                if r != row && !a.get(r, col).is_zero() {
                    let f = a.get(r, col).clone();
                    a.sub_row_multiple(r, row, &f);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|v| v.denom().is_one())
    }

    pub fn to_int(&self) -> Result<IntMatrix, RatError> {
        if !self.is_integral() {
            return Err(RatError::NotIntegral);
        }
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.numer().clone()).collect(),
        })
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| rat_to_f64(self.get(r, c)))
    }

    /// `det(xI - self)`, computed with Berkowitz's division-free recurrence.
    pub fn char_poly(&self) -> Result<RatPoly, RatError> {
        self.require_square()?;
        let n = self.rows;
        // Coefficients highest degree first while building.
        let mut v = vec![Rat::one(), -self.get(0, 0).clone()];
        for r in 1..n {
            // Leading (r+1)x(r+1) block split as [[M, C], [R, a]].
            let a = self.get(r, r);
            let row: Vec<Rat> = (0..r).map(|c| self.get(r, c).clone()).collect();
            let mut col: Vec<Rat> = (0..r).map(|i| self.get(i, r).clone()).collect();
            // Toeplitz column t = [1, -a, -RC, -RMC, ..., -RM^{r-1}C].
            let mut t = Vec::with_capacity(r + 2);
            t.push(Rat::one());
            t.push(-a.clone());
            for _ in 0..r {
                let rc = row
                    .iter()
                    .zip(&col)
                    .fold(Rat::zero(), |acc, (x, y)| acc + x * y);
                t.push(-rc);
                col = (0..r)
                    .map(|i| {
                        (0..r).fold(Rat::zero(), |acc, k| acc + self.get(i, k) * &col[k])
                    })
                    .collect();
            }
            let next: Vec<Rat> = (0..r + 2)
                .map(|i| {
                    (0..=i.min(r))
                        .fold(Rat::zero(), |acc, j| acc + &t[i - j] * &v[j])
                })
                .collect();
            v = next;
        }
        v.reverse();
        Ok(RatPoly::new(v))
    }

    fn require_square(&self) -> Result<(), RatError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(RatError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, s: &Rat) {
        for c in 0..self.cols {
            self.data[r * self.cols + c] *= s;
        }
    }

    /// row[target] -= f * row[source]
    fn sub_row_multiple(&mut self, target: usize, source: usize, f: &Rat) {
        for c in 0..self.cols {
            let v = f * &self.data[source * self.cols + c];
            self.data[target * self.cols + c] -= v;
        }
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", super::format_rat(self.get(r, c)))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Dense row-major integer matrix with arbitrary-precision entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self, RatError> {
        if data.len() != rows * cols {
            return Err(RatError::Shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn from_i64_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.as_ref().len());
        let data = rows
            .iter()
            .flat_map(|row| row.as_ref().iter().map(|&v| BigInt::from(v)))
            .collect();
        Self::new(r, c, data).expect("well-formed literal matrix")
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![BigInt::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = BigInt::one();
        }
        IntMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn get_mut(&mut self, r: usize, c: usize) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }

    pub fn to_rat(&self) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| Rat::from_integer(v.clone())).collect(),
        }
    }

    pub fn matmul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut data = vec![BigInt::zero(); self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        IntMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                (0..self.cols).fold(BigInt::zero(), |acc, c| acc + self.get(r, c) * &v[c])
            })
            .collect()
    }

    pub fn det(&self) -> Result<BigInt, RatError> {
        Ok(self.to_rat().det()?.numer().clone())
    }

    pub fn abs_det(&self) -> Result<BigInt, RatError> {
        Ok(self.det()?.abs())
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|r| (0..self.cols).all(|c| r == c || self.get(r, c).is_zero()))
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    pub(crate) fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[target] += f * row[source]
    pub(crate) fn add_row_multiple(&mut self, target: usize, source: usize, f: &BigInt) {
        for c in 0..self.cols {
            let v = f * &self.data[source * self.cols + c];
            self.data[target * self.cols + c] += v;
        }
    }

    /// col[target] += f * col[source]
    pub(crate) fn add_col_multiple(&mut self, target: usize, source: usize, f: &BigInt) {
        for r in 0..self.rows {
            let v = f * &self.data[r * self.cols + source];
            self.data[r * self.cols + target] += v;
        }
    }

    pub(crate) fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -std::mem::take(&mut self.data[r * self.cols + c]);
            self.data[r * self.cols + c] = v;
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(r, c))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}
