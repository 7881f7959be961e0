//! Exact linear systems `A x = b`.
//!
//! * fields: reduced row echelon form with a recorded left transform;
//! * `Z`: Smith normal form `P A Q = S`;
//! * `Z/m`: the integer system `[A | m I]`, solved over `Z` and reduced mod `m`.
//!
//! A [`FactoredSystem`] keeps the factorization of `A` so that many right-hand
//! sides can be tested cheaply; the local-derivation checkers rely on this.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalars::{Ring, Scalar};

/// Affine solution set `particular + span(homogeneous)`.
///
/// Over a field `homogeneous` is a basis of the null space, over `Z` a basis
/// of the solution lattice, over `Z/m` a generating set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSpace {
    pub particular: Option<Vec<Scalar>>,
    pub homogeneous: Vec<Vec<Scalar>>,
}

impl SolutionSpace {
    pub fn is_solvable(&self) -> bool {
        self.particular.is_some()
    }

    /// `particular + sum(coeffs[i] * homogeneous[i])`.
    pub fn member(&self, ring: &Ring, coeffs: &[Scalar]) -> Option<Vec<Scalar>> {
        let mut x = self.particular.clone()?;
        for (t, h) in coeffs.iter().zip(&self.homogeneous) {
            for (xi, hi) in x.iter_mut().zip(h) {
                *xi = ring.add(xi, &ring.mul(t, hi));
            }
        }
        Some(x)
    }

    /// The particular solution reshaped as an `n x n` matrix.
    pub fn particular_matrix(&self, ring: &Ring, n: usize) -> Option<Matrix> {
        self.particular.as_ref().map(|v| Matrix::from_vec(ring, n, v))
    }
}

type IntMat = Vec<Vec<BigInt>>;

fn int_identity(n: usize) -> IntMat {
    (0..n)
        .map(|r| (0..n).map(|c| if r == c { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

/// Smith decomposition `P A Q = S`, with the inverses when requested.
struct SmithRaw {
    s: IntMat,
    p: IntMat,
    q: IntMat,
    p_inv: Option<IntMat>,
    q_inv: Option<IntMat>,
    rank: usize,
}

struct SmithCalc {
    a: IntMat,
    rows: usize,
    cols: usize,
    p: IntMat,
    q: IntMat,
    p_inv: Option<IntMat>,
    q_inv: Option<IntMat>,
}

impl SmithCalc {
    // row_i += k * row_j
    fn row_add(&mut self, i: usize, j: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for m in [&mut self.a, &mut self.p] {
            let (src, dst) = if i < j {
                let (lo, hi) = m.split_at_mut(j);
                (&hi[0], &mut lo[i])
            } else {
                let (lo, hi) = m.split_at_mut(i);
                (&lo[j], &mut hi[0])
            };
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                if !s.is_zero() {
                    *d += k * s;
                }
            }
        }
        // inverse: col_j -= k * col_i
        if let Some(pi) = &mut self.p_inv {
            for row in pi.iter_mut() {
                let t = k * &row[i];
                row[j] -= t;
            }
        }
    }

    fn row_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        self.a.swap(i, j);
        self.p.swap(i, j);
        if let Some(pi) = &mut self.p_inv {
            for row in pi.iter_mut() {
                row.swap(i, j);
            }
        }
    }

    fn row_neg(&mut self, i: usize) {
        for m in [&mut self.a, &mut self.p] {
            for x in m[i].iter_mut() {
                *x = -&*x;
            }
        }
        if let Some(pi) = &mut self.p_inv {
            for row in pi.iter_mut() {
                row[i] = -&row[i];
            }
        }
    }

    // col_i += k * col_j
    fn col_add(&mut self, i: usize, j: usize, k: &BigInt) {
        if k.is_zero() {
            return;
        }
        for m in [&mut self.a, &mut self.q] {
            for row in m.iter_mut() {
                if !row[j].is_zero() {
                    let t = k * &row[j];
                    row[i] += t;
                }
            }
        }
        // inverse: row_j -= k * row_i
        if let Some(qi) = &mut self.q_inv {
            let (src, dst) = if j < i {
                let (lo, hi) = qi.split_at_mut(i);
                (&hi[0], &mut lo[j])
            } else {
                let (lo, hi) = qi.split_at_mut(j);
                (&lo[i], &mut hi[0])
            };
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d -= k * s;
            }
        }
    }

    fn col_swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for m in [&mut self.a, &mut self.q] {
            for row in m.iter_mut() {
                row.swap(i, j);
            }
        }
        if let Some(qi) = &mut self.q_inv {
            qi.swap(i, j);
        }
    }

    fn min_nonzero(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for r in t..self.rows {
            for c in t..self.cols {
                let v = &self.a[r][c];
                if v.is_zero() {
                    continue;
                }
                if best.is_none_or(|(br, bc)| v.abs() < self.a[br][bc].abs()) {
                    best = Some((r, c));
                    if v.abs().is_one() {
                        return best;
                    }
                }
            }
        }
        best
    }

    fn run(mut self) -> SmithRaw {
        let mut t = 0;
        while t < self.rows.min(self.cols) {
            let Some((r, c)) = self.min_nonzero(t) else { break };
            self.row_swap(t, r);
            self.col_swap(t, c);
            loop {
                let pivot = self.a[t][t].clone();
                let mut residual: Option<(bool, usize)> = None;
                for i in t + 1..self.rows {
                    if self.a[i][t].is_zero() {
                        continue;
                    }
                    let q = &self.a[i][t] / &pivot;
                    self.row_add(i, t, &-q);
                    if !self.a[i][t].is_zero() {
                        residual = Some((true, i));
                    }
                }
                for j in t + 1..self.cols {
                    if self.a[t][j].is_zero() {
                        continue;
                    }
                    let q = &self.a[t][j] / &pivot;
                    self.col_add(j, t, &-q);
                    if !self.a[t][j].is_zero() {
                        residual = Some((false, j));
                    }
                }
                match residual {
                    Some((true, i)) => {
                        self.row_swap(t, i);
                        continue;
                    }
                    Some((false, j)) => {
                        self.col_swap(t, j);
                        continue;
                    }
                    None => {}
                }
                let bad = (t + 1..self.rows).find(|&i| {
                    (t + 1..self.cols).any(|j| !self.a[i][j].is_multiple_of(&pivot))
                });
                match bad {
                    Some(i) => self.row_add(t, i, &BigInt::one()),
                    None => break,
                }
            }
            if self.a[t][t].is_negative() {
                self.row_neg(t);
            }
            t += 1;
        }
        SmithRaw { s: self.a, p: self.p, q: self.q, p_inv: self.p_inv, q_inv: self.q_inv, rank: t }
    }
}

fn smith_raw(a: IntMat, rows: usize, cols: usize, with_inverses: bool) -> SmithRaw {
    SmithCalc {
        a,
        rows,
        cols,
        p: int_identity(rows),
        q: int_identity(cols),
        p_inv: with_inverses.then(|| int_identity(rows)),
        q_inv: with_inverses.then(|| int_identity(cols)),
    }
    .run()
}

/// `A = U S V` with `U`, `V` unimodular and `S` diagonal, `d_i | d_{i+1}`, `d_i >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub u: Matrix,
    pub s: Matrix,
    pub v: Matrix,
}

impl SmithForm {
    pub fn diagonal(&self) -> Vec<BigInt> {
        let z = self.s.ring().clone();
        (0..self.s.rows().min(self.s.cols()))
            .map(|i| z.to_bigint(self.s.at(i, i)).unwrap())
            .collect()
    }
}

fn to_int_mat(a: &Matrix) -> IntMat {
    let ring = a.ring();
    (0..a.rows())
        .map(|r| (0..a.cols()).map(|c| ring.to_bigint(a.at(r, c)).unwrap()).collect())
        .collect()
}

fn from_int_mat(z: &Ring, m: &IntMat, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(z, rows, cols, |r, c| Scalar::Int(m[r][c].clone()))
}

pub fn smith_normal_form(a: &Matrix) -> Result<SmithForm> {
    if !a.ring().is_integers() {
        return Err(Error::UnsupportedRing(format!("Smith normal form over {}", a.ring().name())));
    }
    let (rows, cols) = a.shape();
    let raw = smith_raw(to_int_mat(a), rows, cols, true);
    let z = a.ring();
    Ok(SmithForm {
        u: from_int_mat(z, raw.p_inv.as_ref().unwrap(), rows, rows),
        s: from_int_mat(z, &raw.s, rows, cols),
        v: from_int_mat(z, raw.q_inv.as_ref().unwrap(), cols, cols),
    })
}

enum Factor {
    Field {
        transform: Vec<Vec<Scalar>>,
        rref: Vec<Vec<Scalar>>,
        pivots: Vec<usize>,
    },
    Integer {
        p: IntMat,
        q: IntMat,
        diag: Vec<BigInt>,
        rank: usize,
    },
    Modular {
        m: u64,
        p: IntMat,
        q: IntMat,
        diag: Vec<BigInt>,
        /// `(row of P mod m, d_i)` for every invariant factor `d_i != 1`.
        checks: Vec<(Vec<u64>, u64)>,
    },
}

/// A coefficient matrix factored once for repeated solving.
pub struct FactoredSystem {
    ring: Ring,
    rows: usize,
    cols: usize,
    factor: Factor,
}

impl FactoredSystem {
    pub fn new(a: &Matrix) -> FactoredSystem {
        let ring = a.ring().clone();
        let (rows, cols) = a.shape();
        let factor = if ring.is_field() {
            field_factor(a)
        } else if let Some(m) = ring.residue_modulus() {
            let mm = BigInt::from(m);
            let lifted: IntMat = (0..rows)
                .map(|r| {
                    let mut row: Vec<BigInt> = (0..cols).map(|c| ring.to_bigint(a.at(r, c)).unwrap()).collect();
                    row.extend((0..rows).map(|c| if c == r { mm.clone() } else { BigInt::zero() }));
                    row
                })
                .collect();
            let raw = smith_raw(lifted, rows, cols + rows, false);
            debug_assert_eq!(raw.rank, rows);
            let diag: Vec<BigInt> = (0..rows).map(|i| raw.s[i][i].clone()).collect();
            let checks = diag
                .iter()
                .enumerate()
                .filter(|(_, d)| !d.is_one())
                .map(|(i, d)| {
                    let row = raw.p[i].iter().map(|x| x.mod_floor(&mm).to_u64().unwrap()).collect();
                    (row, d.to_u64().unwrap())
                })
                .collect();
            Factor::Modular { m, p: raw.p, q: raw.q, diag, checks }
        } else {
            let raw = smith_raw(to_int_mat(a), rows, cols, false);
            let diag = (0..raw.rank).map(|i| raw.s[i][i].clone()).collect();
            Factor::Integer { p: raw.p, q: raw.q, diag, rank: raw.rank }
        };
        FactoredSystem { ring, rows, cols, factor }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn unknowns(&self) -> usize {
        self.cols
    }

    /// Decides solvability without building solutions.
    pub fn is_solvable(&self, b: &[Scalar]) -> bool {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let ring = &self.ring;
        match &self.factor {
            Factor::Field { transform, pivots, .. } => transform[pivots.len()..].iter().all(|row| {
                let mut acc = ring.zero();
                for (t, x) in row.iter().zip(b) {
                    if !ring.is_zero(t) && !ring.is_zero(x) {
                        acc = ring.add(&acc, &ring.mul(t, x));
                    }
                }
                ring.is_zero(&acc)
            }),
            Factor::Modular { m, checks, .. } => {
                let b: Vec<u64> = b.iter().map(|x| ring.index_of(x)).collect();
                checks.iter().all(|(row, d)| {
                    let mut acc: u128 = 0;
                    for (&r, &x) in row.iter().zip(&b) {
                        acc += r as u128 * x as u128;
                        if acc >= 1 << 120 {
                            acc %= *m as u128;
                        }
                    }
                    (acc % *m as u128).is_multiple_of(*d as u128)
                })
            }
            Factor::Integer { .. } => self.solve(b).is_solvable(),
        }
    }

    pub fn solve(&self, b: &[Scalar]) -> SolutionSpace {
        assert_eq!(b.len(), self.rows, "right-hand side length");
        let ring = &self.ring;
        match &self.factor {
            Factor::Field { transform, rref, pivots } => {
                let c: Vec<Scalar> = transform
                    .iter()
                    .map(|row| {
                        row.iter()
                            .zip(b)
                            .fold(ring.zero(), |acc, (t, x)| ring.add(&acc, &ring.mul(t, x)))
                    })
                    .collect();
                let rank = pivots.len();
                let particular = c[rank..].iter().all(|x| ring.is_zero(x)).then(|| {
                    let mut x = vec![ring.zero(); self.cols];
                    for (i, &pc) in pivots.iter().enumerate() {
                        x[pc] = c[i].clone();
                    }
                    x
                });
                let homogeneous = (0..self.cols)
                    .filter(|col| !pivots.contains(col))
                    .map(|free| {
                        let mut v = vec![ring.zero(); self.cols];
                        v[free] = ring.one();
                        for (i, &pc) in pivots.iter().enumerate() {
                            v[pc] = ring.neg(&rref[i][free]);
                        }
                        v
                    })
                    .collect();
                SolutionSpace { particular, homogeneous }
            }
            Factor::Integer { p, q, diag, rank } => {
                let bz: Vec<BigInt> = b.iter().map(|x| ring.to_bigint(x).unwrap()).collect();
                let c = int_mat_vec(p, &bz);
                let y = integer_preimage(&c, diag, *rank);
                let particular = y.map(|y| int_mat_vec(q, &y).into_iter().map(Scalar::Int).collect());
                let homogeneous = (*rank..self.cols)
                    .map(|j| (0..self.cols).map(|r| Scalar::Int(q[r][j].clone())).collect())
                    .collect();
                SolutionSpace { particular, homogeneous }
            }
            Factor::Modular { m, p, q, diag, .. } => {
                let mm = BigInt::from(*m);
                let bz: Vec<BigInt> = b.iter().map(|x| ring.to_bigint(x).unwrap()).collect();
                let c = int_mat_vec(p, &bz);
                let lifted_cols = self.cols + self.rows;
                let particular = integer_preimage(&c, diag, self.rows).map(|mut y| {
                    y.resize(lifted_cols, BigInt::zero());
                    int_mat_vec(q, &y)[..self.cols]
                        .iter()
                        .map(|x| ring.from_bigint(&x.mod_floor(&mm)))
                        .collect()
                });
                let mut homogeneous: Vec<Vec<Scalar>> = Vec::new();
                for j in self.rows..lifted_cols {
                    let v: Vec<Scalar> = (0..self.cols).map(|r| ring.from_bigint(&q[r][j])).collect();
                    if v.iter().any(|x| !ring.is_zero(x)) && !homogeneous.contains(&v) {
                        homogeneous.push(v);
                    }
                }
                SolutionSpace { particular, homogeneous }
            }
        }
    }
}

fn int_mat_vec(m: &IntMat, v: &[BigInt]) -> Vec<BigInt> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .fold(BigInt::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

/// Solves `S y = c` for the diagonal `S`; the first `rank` entries of `diag`
/// are the nonzero invariant factors. The result has length `rank` padded by
/// the caller with free zeros, so it is returned at full width `c.len().max(rank)`.
fn integer_preimage(c: &[BigInt], diag: &[BigInt], rank: usize) -> Option<Vec<BigInt>> {
    if c[rank..].iter().any(|x| !x.is_zero()) {
        return None;
    }
    let mut y = Vec::with_capacity(rank);
    for (ci, d) in c[..rank].iter().zip(diag) {
        let (quot, rem) = ci.div_rem(d);
        if !rem.is_zero() {
            return None;
        }
        y.push(quot);
    }
    Some(y)
}

fn field_factor(a: &Matrix) -> Factor {
    let ring = a.ring();
    let (rows, cols) = a.shape();
    let mut m: Vec<Vec<Scalar>> = (0..rows).map(|r| (0..cols).map(|c| a.at(r, c).clone()).collect()).collect();
    let mut t: Vec<Vec<Scalar>> = (0..rows)
        .map(|r| (0..rows).map(|c| if r == c { ring.one() } else { ring.zero() }).collect())
        .collect();
    let mut pivots = Vec::new();
    for col in 0..cols {
        let rank = pivots.len();
        if rank == rows {
            break;
        }
        let Some(pr) = (rank..rows).find(|&r| !ring.is_zero(&m[r][col])) else { continue };
        m.swap(rank, pr);
        t.swap(rank, pr);
        let inv = ring.inv(&m[rank][col]).expect("field element is invertible");
        for x in m[rank].iter_mut().chain(t[rank].iter_mut()) {
            *x = ring.mul(x, &inv);
        }
        for r in 0..rows {
            if r == rank || ring.is_zero(&m[r][col]) {
                continue;
            }
            let factor = m[r][col].clone();
            let (pivot_m, pivot_t) = (m[rank].clone(), t[rank].clone());
            for (x, p) in m[r].iter_mut().zip(&pivot_m) {
                if !ring.is_zero(p) {
                    *x = ring.sub(x, &ring.mul(&factor, p));
                }
            }
            for (x, p) in t[r].iter_mut().zip(&pivot_t) {
                if !ring.is_zero(p) {
                    *x = ring.sub(x, &ring.mul(&factor, p));
                }
            }
        }
        pivots.push(col);
    }
    m.truncate(pivots.len());
    Factor::Field { transform: t, rref: m, pivots }
}

/// Solves `A x = b` for a column `b` given as a slice.
pub fn solve_linear(a: &Matrix, b: &[Scalar]) -> Result<SolutionSpace> {
    if b.len() != a.rows() {
        return Err(Error::ShapeMismatch(format!(
            "right-hand side of length {} for {} equations",
            b.len(),
            a.rows()
        )));
    }
    for x in b {
        a.ring().validate(x)?;
    }
    Ok(FactoredSystem::new(a).solve(b))
}
