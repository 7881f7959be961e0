//! Dense matrices over a [`Ring`], matrix units, Peirce corners and the
//! symmetric/skew predicates. Indices are 0-based in code; matrix units are
//! written `e_{i,j}` with the same 0-based indices.

use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalars::{Ring, Scalar};

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[", self.ring.name())?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.cols).map(|c| self.ring.display_scalar(self.at(r, c))).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(ring: &Ring, rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Matrix> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        for x in &data {
            ring.validate(x)?;
        }
        Ok(Matrix { ring: ring.clone(), rows, cols, data })
    }

    /// Builds a matrix from small integer rows, mapped into the ring.
    pub fn from_i64(ring: &Ring, rows: &[&[i64]]) -> Matrix {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.iter().map(|&v| ring.from_i64(v))).collect();
        Matrix { ring: ring.clone(), rows: n_rows, cols: n_cols, data }
    }

    pub fn from_fn(ring: &Ring, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Matrix {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { ring: ring.clone(), rows, cols, data }
    }

    pub fn zeros(ring: &Ring, rows: usize, cols: usize) -> Matrix {
        Matrix { ring: ring.clone(), rows, cols, data: vec![ring.zero(); rows * cols] }
    }

    pub fn identity(ring: &Ring, n: usize) -> Matrix {
        Matrix::from_fn(ring, n, n, |r, c| if r == c { ring.one() } else { ring.zero() })
    }

    /// The matrix unit `e_{i,j}` of `M_n(R)`.
    pub fn unit(ring: &Ring, n: usize, i: usize, j: usize) -> Result<Matrix> {
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange(i, j, n));
        }
        let mut m = Matrix::zeros(ring, n, n);
        m.data[i * n + j] = ring.one();
        Ok(m)
    }

    /// `e_{i,j} + e_{j,i}` for `i != j`, `e_{i,i}` on the diagonal.
    pub fn sym_unit(ring: &Ring, n: usize, i: usize, j: usize) -> Result<Matrix> {
        let mut m = Matrix::unit(ring, n, i, j)?;
        m.data[j * n + i] = ring.one();
        Ok(m)
    }

    /// Column vector from a slice.
    pub fn column(ring: &Ring, entries: Vec<Scalar>) -> Matrix {
        let rows = entries.len();
        Matrix { ring: ring.clone(), rows, cols: 1, data: entries }
    }

    /// Square matrix from a row-major vectorization of length `n^2`.
    pub fn from_vec(ring: &Ring, n: usize, v: &[Scalar]) -> Matrix {
        assert_eq!(v.len(), n * n);
        Matrix { ring: ring.clone(), rows: n, cols: n, data: v.to_vec() }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length; panics on non-square matrices.
    pub fn n(&self) -> usize {
        assert!(self.is_square());
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    /// Row-major entries (the fixed vectorization order).
    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<Scalar> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| self.ring.is_zero(x))
    }

    fn same_ring(&self, other: &Matrix) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring.name(), other.ring.name()));
        }
        Ok(())
    }

    fn same_shape(&self, other: &Matrix) -> Result<()> {
        self.same_ring(other)?;
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other)?;
        Ok(self.zip_with(other, |a, b| self.ring.add(a, b)))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other)?;
        Ok(self.zip_with(other, |a, b| self.ring.sub(a, b)))
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> Matrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Matrix { ring: self.ring.clone(), rows: self.rows, cols: self.cols, data }
    }

    pub fn neg(&self) -> Matrix {
        self.map(|x| self.ring.neg(x))
    }

    pub fn scale(&self, s: &Scalar) -> Matrix {
        self.map(|x| self.ring.mul(s, x))
    }

    pub fn map(&self, f: impl Fn(&Scalar) -> Scalar) -> Matrix {
        Matrix {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.same_ring(other)?;
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Matrix) -> Matrix {
        let ring = &self.ring;
        let mut data = vec![ring.zero(); self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if ring.is_zero(a) {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.at(k, c);
                    if ring.is_zero(b) {
                        continue;
                    }
                    let slot = &mut data[r * other.cols + c];
                    *slot = ring.add(slot, &ring.mul(a, b));
                }
            }
        }
        Matrix { ring: ring.clone(), rows: self.rows, cols: other.cols, data }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(&self.ring, self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    /// `ab - ba`.
    pub fn commutator(&self, other: &Matrix) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("commutator of non-square matrices".into()));
        }
        self.same_shape(other)?;
        self.mul_unchecked(other).sub(&other.mul_unchecked(self))
    }

    /// The Peirce corner `e_{i,i} a e_{j,j}`: entry `(i, j)` kept, all else zero.
    pub fn corner(&self, i: usize, j: usize) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("corner of a non-square matrix".into()));
        }
        let n = self.rows;
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange(i, j, n));
        }
        let mut m = Matrix::zeros(&self.ring, n, n);
        m.data[i * n + j] = self.at(i, j).clone();
        Ok(m)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|r| (0..r).all(|c| self.at(r, c) == self.at(c, r)))
    }

    /// `a^T = -a` with zero diagonal, in every characteristic.
    pub fn is_skew(&self) -> bool {
        let ring = &self.ring;
        self.is_square()
            && (0..self.rows).all(|r| {
                ring.is_zero(self.at(r, r))
                    && (0..r).all(|c| ring.is_zero(&ring.add(self.at(r, c), self.at(c, r))))
            })
    }

    /// Whether the matrix is `s * I` for some scalar `s`.
    pub fn is_scalar(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    if r == c {
                        self.at(r, c) == self.at(0, 0)
                    } else {
                        self.ring.is_zero(self.at(r, c))
                    }
                })
            })
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = (0..self.rows)
            .map(|r| Value::Array((0..self.cols).map(|c| self.ring.format_scalar(self.at(r, c))).collect()))
            .collect();
        json!({ "n": self.rows, "rows": rows })
    }

    /// Parses `{"n":2,"rows":[["0","1"],["0","0"]]}`; the matrix must be
    /// square of side `n`.
    pub fn from_json(ring: &Ring, v: &Value) -> Result<Matrix> {
        let bad = |m: &str| Error::Parse(format!("matrix: {m}"));
        let rows = v.get("rows").and_then(Value::as_array).ok_or_else(|| bad("missing rows"))?;
        let n = match v.get("n") {
            Some(n) => n.as_u64().ok_or_else(|| bad("bad n"))? as usize,
            None => rows.len(),
        };
        if rows.len() != n {
            return Err(Error::ShapeMismatch(format!("{} rows for n = {n}", rows.len())));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("row is not a list"))?;
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!("row of length {} for n = {n}", row.len())));
            }
            for x in row {
                data.push(ring.parse_scalar(x)?);
            }
        }
        Matrix::new(ring, n, n, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(ring: &Ring, n: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(ring, n, i, j).unwrap()
    }

    #[test]
    fn unit_examples() {
        let f2 = Ring::prime_field(2).unwrap();
        assert_eq!(e(&f2, 2, 0, 1), Matrix::from_i64(&f2, &[&[0, 1], &[0, 0]]));
        assert!(matches!(Matrix::unit(&f2, 2, 2, 0), Err(Error::IndexOutOfRange(2, 0, 2))));
        let q = Ring::rationals();
        let n = 3;
        for (i, j, k, l) in [(0, 1, 1, 2), (2, 0, 0, 0), (1, 1, 1, 2)] {
            let prod = e(&q, n, i, j).mul(&e(&q, n, k, l)).unwrap();
            assert_eq!(prod, e(&q, n, i, l));
        }
        assert!(e(&q, n, 0, 1).mul(&e(&q, n, 2, 0)).unwrap().is_zero());
    }

    #[test]
    fn arithmetic_examples() {
        let q = Ring::rationals();
        assert_eq!(e(&q, 2, 0, 1).mul(&e(&q, 2, 1, 0)).unwrap(), e(&q, 2, 0, 0));
        assert_eq!(e(&q, 2, 0, 1).transpose(), e(&q, 2, 1, 0));
        let half = q.fraction(1, 2).unwrap();
        let sym = e(&q, 2, 0, 1).add(&e(&q, 2, 1, 0)).unwrap().scale(&half);
        assert_eq!(sym, Matrix::sym_unit(&q, 2, 0, 1).unwrap().scale(&half));
        assert_eq!(*sym.at(1, 0), half);
        let f3 = Ring::prime_field(3).unwrap();
        assert!(matches!(e(&q, 2, 0, 1).add(&e(&f3, 2, 0, 1)), Err(Error::RingMismatch(..))));
        assert!(matches!(e(&q, 2, 0, 1).add(&e(&q, 3, 0, 1)), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn commutator_examples() {
        let q = Ring::rationals();
        let c = e(&q, 2, 0, 1).commutator(&e(&q, 2, 1, 0)).unwrap();
        assert_eq!(c, e(&q, 2, 0, 0).sub(&e(&q, 2, 1, 1)).unwrap());
        let a = Matrix::from_i64(&q, &[&[1, 2], &[3, 4]]);
        assert!(a.commutator(&a).unwrap().is_zero());
        // e11 * (e12 + e21) = e12 and (e12 + e21) * e11 = e21.
        let c = e(&q, 2, 0, 0).commutator(&Matrix::sym_unit(&q, 2, 0, 1).unwrap()).unwrap();
        assert_eq!(c, e(&q, 2, 0, 1).sub(&e(&q, 2, 1, 0)).unwrap());
    }

    #[test]
    fn corner_examples() {
        let q = Ring::rationals();
        let a = Matrix::from_i64(&q, &[&[1, 2], &[3, 4]]);
        assert_eq!(a.corner(0, 1).unwrap(), Matrix::from_i64(&q, &[&[0, 2], &[0, 0]]));
        let mut total = Matrix::zeros(&q, 2, 2);
        for i in 0..2 {
            for j in 0..2 {
                total = total.add(&a.corner(i, j).unwrap()).unwrap();
                let u = e(&q, 2, 1, 0);
                let cu = u.corner(i, j).unwrap();
                assert_eq!(cu == u, (i, j) == (1, 0));
                assert!((i, j) == (1, 0) || cu.is_zero());
            }
        }
        assert_eq!(total, a);
        assert!(a.corner(2, 0).is_err());
    }

    #[test]
    fn symmetric_and_skew_examples() {
        let q = Ring::rationals();
        let s = Matrix::sym_unit(&q, 2, 0, 1).unwrap();
        assert!(s.is_symmetric() && !s.is_skew());
        let k = e(&q, 2, 0, 1).sub(&e(&q, 2, 1, 0)).unwrap();
        assert!(k.is_skew() && !k.is_symmetric());
        let u = e(&q, 2, 0, 1);
        assert!(!u.is_skew() && !u.is_symmetric());
        // Over GF(2) a symmetric matrix with nonzero diagonal is not skew.
        let f2 = Ring::prime_field(2).unwrap();
        assert!(!Matrix::identity(&f2, 2).is_skew());
        assert!(Matrix::sym_unit(&f2, 2, 0, 1).unwrap().is_skew());
    }

    #[test]
    fn json_round_trip_and_errors() {
        let q = Ring::rationals();
        let a = Matrix::from_i64(&q, &[&[0, 1], &[0, 0]]).scale(&q.fraction(-2, 7).unwrap());
        let v = a.to_json();
        assert_eq!(v, json!({"n": 2, "rows": [["0", "-2/7"], ["0", "0"]]}));
        assert_eq!(Matrix::from_json(&q, &v).unwrap(), a);
        let ragged = json!({"n": 2, "rows": [["0", "1", "2"], ["0", "0"]]});
        assert!(matches!(Matrix::from_json(&q, &ragged), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn commutator_antisymmetric_and_corner_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rings = [
            Ring::prime_field(3).unwrap(),
            Ring::extension_field(2, 2).unwrap(),
            Ring::rationals(),
            Ring::integers(),
            Ring::integers_mod(6).unwrap(),
        ];
        for ring in &rings {
            for _ in 0..50 {
                let n = 3;
                let a = Matrix::from_fn(ring, n, n, |_, _| ring.random(&mut rng));
                let b = Matrix::from_fn(ring, n, n, |_, _| ring.random(&mut rng));
                assert_eq!(a.commutator(&b).unwrap(), b.commutator(&a).unwrap().neg());
                let c = a.corner(1, 2).unwrap();
                assert_eq!(c.corner(1, 2).unwrap(), c);
            }
        }
    }
}
