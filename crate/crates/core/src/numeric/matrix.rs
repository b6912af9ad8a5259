use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
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
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Wraps row-major `data`, rejecting wrong lengths and NaN/Inf entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                op: "from_vec",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        let m = Self { rows, cols, data };
        m.validate()?;
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("matrix"))
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    /// `self += other`.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.check_same_shape("add_assign", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) -> Result<()> {
        self.check_same_shape("axpy", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    fn check_same_shape(&self, op: &'static str, other: &Matrix) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::Shape {
                op,
                left: self.shape(),
                right: other.shape(),
            })
        }
    }
}

/// `a · b`, accumulating each output entry over `k` in ascending order.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = b.cols;
    let mut out = Matrix::zeros(a.rows, n);
    // Column blocks of eight stay in registers across the k loop. Every
    // output entry still sums over k in ascending order.
    const BLOCK: usize = 8;
    let full = n - n % BLOCK;
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for j0 in (0..full).step_by(BLOCK) {
            let mut acc = [0.0f64; BLOCK];
            for (k, &aik) in a_row.iter().enumerate() {
                let b_blk = &b.data[k * n + j0..k * n + j0 + BLOCK];
                for (o, &bkj) in acc.iter_mut().zip(b_blk) {
                    *o += aik * bkj;
                }
            }
            out_row[j0..j0 + BLOCK].copy_from_slice(&acc);
        }
        for j in full..n {
            let mut acc = 0.0;
            for (k, &aik) in a_row.iter().enumerate() {
                acc += aik * b.data[k * n + j];
            }
            out_row[j] = acc;
        }
    }
    Ok(out)
}

/// `aᵀ · b` without materialising the transpose. Sums run over rows of `a`
/// in ascending order.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(Error::Shape {
            op: "matmul_tn",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let n = b.cols;
    let mut out = Matrix::zeros(a.cols, n);
    for i in 0..a.rows {
        let b_row = b.row(i);
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bij) in out.data[k * n..(k + 1) * n].iter_mut().zip(b_row) {
                *o += aik * bij;
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ`.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::Shape {
            op: "matmul_nt",
            left: a.shape(),
            right: b.shape(),
        });
    }
    matmul(a, &b.transpose())
}

#[inline]
fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op: "dot",
            left: (1, a.len()),
            right: (1, b.len()),
        });
    }
    Ok(dot_unchecked(a, b))
}

pub fn relu(x: &Matrix) -> Matrix {
    Matrix {
        rows: x.rows,
        cols: x.cols,
        data: x.data.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
    }
}

/// Passes `upstream` through where the pre-activation is strictly positive.
pub fn relu_backward(x: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    x.check_same_shape("relu_backward", upstream)?;
    Ok(Matrix {
        rows: x.rows,
        cols: x.cols,
        data: x
            .data
            .iter()
            .zip(&upstream.data)
            .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
            .collect(),
    })
}

/// Row `t` of the result is the sum of `rows[indices[j]]` for `j` in
/// `offsets[t]..offsets[t + 1]`, accumulated in index order.
pub fn segment_sum(rows: &Matrix, offsets: &[u32], indices: &[u32]) -> Result<Matrix> {
    let targets = offsets.len().checked_sub(1).ok_or(Error::Empty("offsets"))?;
    let last = offsets[targets] as usize;
    if last > indices.len() {
        return Err(Error::OutOfRange {
            context: "segment_sum offsets",
            index: last,
            len: indices.len(),
        });
    }
    let k = rows.cols;
    let mut out = Matrix::zeros(targets, k);
    for t in 0..targets {
        let (start, end) = (offsets[t] as usize, offsets[t + 1] as usize);
        if start > end {
            return Err(Error::Data(alloc::format!(
                "segment_sum offsets decrease at {t}"
            )));
        }
        let out_row = &mut out.data[t * k..(t + 1) * k];
        for &src in &indices[start..end] {
            let src = src as usize;
            if src >= rows.rows {
                return Err(Error::OutOfRange {
                    context: "segment_sum indices",
                    index: src,
                    len: rows.rows,
                });
            }
            for (o, &v) in out_row.iter_mut().zip(rows.row(src)) {
                *o += v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(3, 3, &mut rng);
        assert_eq!(matmul(&a, &Matrix::identity(3)).unwrap(), a);
    }

    #[test]
    fn scalar_product() {
        let a = Matrix::from_vec(1, 1, alloc::vec![2.0]).unwrap();
        let b = Matrix::from_vec(1, 1, alloc::vec![3.0]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().as_slice(), &[6.0]);
    }

    #[test]
    fn matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(4, 5, &mut rng);
        let b = random(5, 3, &mut rng);
        let fast = matmul(&a, &b).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn transposed_products_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(6, 4, &mut rng);
        let b = random(6, 5, &mut rng);
        let c = random(3, 4, &mut rng);
        let tn = matmul_tn(&a, &b).unwrap();
        let tn_ref = naive_matmul(&a.transpose(), &b);
        let nt = matmul_nt(&a, &c).unwrap();
        let nt_ref = naive_matmul(&a, &c.transpose());
        for (x, y) in tn.as_slice().iter().zip(tn_ref.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in nt.as_slice().iter().zip(nt_ref.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::Shape { .. })));
        assert!(relu_backward(&a, &Matrix::zeros(3, 2)).is_err());
        assert!(dot(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn from_vec_rejects_nan() {
        assert_eq!(
            Matrix::from_vec(1, 2, alloc::vec![1.0, f64::NAN]),
            Err(Error::NonFinite("matrix"))
        );
    }

    #[test]
    fn relu_definition() {
        let x = Matrix::from_vec(1, 3, alloc::vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&x).as_slice(), &[0.0, 0.0, 2.0]);
        let up = Matrix::from_vec(1, 3, alloc::vec![5.0, 5.0, 5.0]).unwrap();
        assert_eq!(relu_backward(&x, &up).unwrap().as_slice(), &[0.0, 0.0, 5.0]);
        let neg = Matrix::from_fn(3, 4, |r, c| -1.0 - (r + c) as f64);
        assert_eq!(relu(&neg), Matrix::zeros(3, 4));
    }

    #[test]
    fn relu_sum_is_abs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random(5, 7, &mut rng);
        let mut negated = x.clone();
        negated.scale(-1.0);
        let sum = relu(&x).add(&relu(&negated)).unwrap();
        for (s, v) in sum.as_slice().iter().zip(x.as_slice()) {
            assert_eq!(*s, v.abs());
        }
    }

    #[test]
    fn segment_sum_small_cases() {
        let rows = Matrix::from_vec(2, 2, alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = segment_sum(&rows, &[0, 2, 2], &[0, 1]).unwrap();
        assert_eq!(out.row(0), &[4.0, 6.0]);
        assert_eq!(out.row(1), &[0.0, 0.0]);
        assert!(matches!(
            segment_sum(&rows, &[0, 1], &[2]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn segment_sum_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = random(9, 4, &mut rng);
        let mut offsets = alloc::vec![0u32];
        let mut indices = Vec::new();
        for _ in 0..6 {
            let deg = rng.random_range(0..5);
            for _ in 0..deg {
                indices.push(rng.random_range(0..9u32));
            }
            offsets.push(indices.len() as u32);
        }
        let out = segment_sum(&rows, &offsets, &indices).unwrap();
        for t in 0..6 {
            let mut acc = alloc::vec![0.0; 4];
            for j in offsets[t]..offsets[t + 1] {
                let src = indices[j as usize] as usize;
                for c in 0..4 {
                    acc[c] += rows.get(src, c);
                }
            }
            assert_eq!(out.row(t), acc.as_slice());
        }
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), n in 1usize..6, m in 1usize..6, p in 1usize..6, q in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(n, m, &mut rng);
            let b = random(m, p, &mut rng);
            let c = random(p, q, &mut rng);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (x, y) in left.as_slice().iter().zip(right.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
            }
        }

        #[test]
        fn segment_sum_is_linear(seed in any::<u64>(), a in -4i32..5, b in -4i32..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Integer-valued rows keep every intermediate exactly representable.
            let x = Matrix::from_fn(6, 3, |_, _| rng.random_range(-50..50) as f64);
            let y = Matrix::from_fn(6, 3, |_, _| rng.random_range(-50..50) as f64);
            let offsets = [0u32, 3, 3, 7];
            let indices = [0u32, 5, 2, 1, 1, 4, 3];
            let mut combo = x.clone();
            combo.scale(a as f64);
            combo.axpy(b as f64, &y).unwrap();
            let lhs = segment_sum(&combo, &offsets, &indices).unwrap();
            let mut rhs = segment_sum(&x, &offsets, &indices).unwrap();
            rhs.scale(a as f64);
            rhs.axpy(b as f64, &segment_sum(&y, &offsets, &indices).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn kernels_are_deterministic(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random(4, 3, &mut rng);
            let b = random(3, 5, &mut rng);
            let first = matmul(&a, &b).unwrap();
            let second = matmul(&a, &b).unwrap();
            prop_assert!(first.as_slice().iter().zip(second.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
