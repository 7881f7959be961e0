//! The Jordan algebra `H_n(R)` of symmetric matrices.
//!
//! Inner Jordan derivations `sum_k [L_{a_k}, L_{b_k}]` act on `H_n` as
//! `x -> cx - xc` with the skew matrix `c = 1/4 sum_k [a_k, b_k]`, so the
//! local checker and the globalizer work with skew implementers. Over rings
//! where 2 is not invertible the half-normalized product does not exist; the
//! checker and globalizer still run (they only need `cx - xc`) and the
//! Leibniz test falls back to the doubled product `ab + ba`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::derivations::sylvester_matrix;
use crate::error::{Error, Result};
use crate::globalize::GlobalizeError;
use crate::linsolve::{FactoredSystem, SolutionSpace};
use crate::localcheck::{
    build_verdict, first_failures, module_basis, AdditiveMap, Carrier, PointOracle, PointSet, Verdict,
};
use crate::matrix::Matrix;
use crate::scalars::{Ring, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<SymMatrix> {
        if !m.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        Ok(SymMatrix(m))
    }

    /// `e_{i,i}` or `e_{i,j} + e_{j,i}` (0-based).
    pub fn basis(ring: &Ring, n: usize, i: usize, j: usize) -> Result<SymMatrix> {
        let m = if i == j { Matrix::unit(ring, n, i, i)? } else { Matrix::sym_unit(ring, n, i, j)? };
        Ok(SymMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn ring(&self) -> &Ring {
        self.0.ring()
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

fn two_inverse(ring: &Ring) -> Result<Scalar> {
    ring.inv(&ring.from_i64(2)).ok_or_else(|| Error::TwoNotInvertible(ring.name()))
}

/// `ab + ba`, defined over every ring.
pub fn jordan_product_doubled(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    Ok(SymMatrix(a.0.mul(&b.0)?.add(&b.0.mul(&a.0)?)?))
}

/// `a . b = (ab + ba) / 2`.
pub fn jordan_product(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    let half = two_inverse(a.ring())?;
    Ok(SymMatrix(jordan_product_doubled(a, b)?.0.scale(&half)))
}

/// Whether the Leibniz test over this ring uses `ab + ba` instead of the
/// half-normalized product.
pub fn uses_doubled_product(ring: &Ring) -> bool {
    !ring.two_invertible()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JordanDerivationPairs {
    pairs: Vec<(SymMatrix, SymMatrix)>,
}

impl JordanDerivationPairs {
    pub fn new(pairs: Vec<(SymMatrix, SymMatrix)>) -> Result<JordanDerivationPairs> {
        let (a0, _) = pairs.first().ok_or_else(|| Error::ShapeMismatch("empty pair list".into()))?;
        let (ring, n) = (a0.ring().clone(), a0.n());
        for (a, b) in &pairs {
            for m in [a, b] {
                if m.ring() != &ring {
                    return Err(Error::RingMismatch(m.ring().name(), ring.name()));
                }
                if m.n() != n {
                    return Err(Error::ShapeMismatch(format!("mixed dimensions {n} and {}", m.n())));
                }
            }
        }
        Ok(JordanDerivationPairs { pairs })
    }

    pub fn pairs(&self) -> &[(SymMatrix, SymMatrix)] {
        &self.pairs
    }

    pub fn ring(&self) -> &Ring {
        self.pairs[0].0.ring()
    }

    pub fn n(&self) -> usize {
        self.pairs[0].0.n()
    }
}

/// `sum_k a_k.(b_k.x) - b_k.(a_k.x)`.
pub fn inner_jordan_apply(p: &JordanDerivationPairs, x: &SymMatrix) -> Result<SymMatrix> {
    if x.ring() != p.ring() {
        return Err(Error::RingMismatch(x.ring().name(), p.ring().name()));
    }
    let mut acc = Matrix::zeros(x.ring(), x.n(), x.n());
    for (a, b) in p.pairs() {
        let ab = jordan_product(a, &jordan_product(b, x)?)?;
        let ba = jordan_product(b, &jordan_product(a, x)?)?;
        acc = acc.add(&ab.0.sub(&ba.0)?)?;
    }
    Ok(SymMatrix(acc))
}

/// A skew matrix (zero diagonal) acting on `H_n` by `x -> cx - xc`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkewImplementer(Matrix);

impl SkewImplementer {
    pub fn new(c: Matrix) -> Result<SkewImplementer> {
        if !c.is_skew() {
            return Err(Error::ShapeMismatch("implementer is not skew-symmetric".into()));
        }
        Ok(SkewImplementer(c))
    }

    /// `c = sum_{i<j} t_{ij} (e_{i,j} - e_{j,i})` from the strictly upper
    /// entries in [`skew_positions`] order.
    pub fn from_upper(ring: &Ring, n: usize, t: &[Scalar]) -> SkewImplementer {
        let mut c = Matrix::zeros(ring, n, n);
        for (v, (i, j)) in t.iter().zip(skew_positions(n)) {
            c.set(i, j, v.clone());
            c.set(j, i, ring.neg(v));
        }
        SkewImplementer(c)
    }

    pub fn random(ring: &Ring, n: usize, rng: &mut ChaCha8Rng, bound: i64) -> SkewImplementer {
        let t: Vec<Scalar> = skew_positions(n).iter().map(|_| ring.random_bounded(rng, bound)).collect();
        SkewImplementer::from_upper(ring, n, &t)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn apply(&self, x: &SymMatrix) -> Result<SymMatrix> {
        Ok(SymMatrix(self.0.commutator(&x.0)?))
    }
}

/// Strictly upper positions `(i, j)`, `i < j`, row by row.
pub fn skew_positions(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// `c = 1/4 sum_k [a_k, b_k]`.
pub fn pairs_to_skew(p: &JordanDerivationPairs) -> Result<SkewImplementer> {
    let ring = p.ring();
    let half = two_inverse(ring)?;
    let quarter = ring.mul(&half, &half);
    let mut acc = Matrix::zeros(ring, p.n(), p.n());
    for (a, b) in p.pairs() {
        acc = acc.add(&a.0.commutator(&b.0)?)?;
    }
    SkewImplementer::new(acc.scale(&quarter))
}

/// Pairs `(4 c^{i,j} e_{i,i}, e_{i,j} + e_{j,i})`, using
/// `[e_{i,i}, e_{i,j} + e_{j,i}] = e_{i,j} - e_{j,i}`.
pub fn skew_to_pairs(c: &SkewImplementer) -> Result<JordanDerivationPairs> {
    let ring = c.0.ring();
    two_inverse(ring)?;
    let n = c.0.n();
    let four = ring.from_i64(4);
    let mut pairs = Vec::new();
    for (i, j) in skew_positions(n) {
        let t = c.0.at(i, j);
        if !ring.is_zero(t) {
            let a = SymMatrix::basis(ring, n, i, i)?;
            pairs.push((SymMatrix(a.0.scale(&ring.mul(&four, t))), SymMatrix::basis(ring, n, i, j)?));
        }
    }
    if pairs.is_empty() {
        let z = SymMatrix(Matrix::zeros(ring, n, n));
        pairs.push((z.clone(), z));
    }
    JordanDerivationPairs::new(pairs)
}

/// Coefficients of `t -> [c(t), x]` on the carrier coordinates of `H_n`.
fn skew_coefficients(x: &Matrix) -> Matrix {
    let n = x.n();
    let ring = x.ring();
    let syl = sylvester_matrix(x);
    let eqs = Carrier::Jordan.positions(n);
    let unknowns = skew_positions(n);
    Matrix::from_fn(ring, eqs.len(), unknowns.len(), |r, u| {
        let (p, q) = eqs[r];
        let (i, j) = unknowns[u];
        // The vectorized unknown a^{i,j} is column i*n + j of the Sylvester matrix.
        ring.sub(syl.at(p * n + q, i * n + j), syl.at(p * n + q, j * n + i))
    })
}

fn jordan_rhs(y: &Matrix) -> Vec<Scalar> {
    Carrier::Jordan.positions(y.n()).into_iter().map(|(i, j)| y.at(i, j).clone()).collect()
}

/// All skew `c` with `cx - xc = y` at one symmetric point.
pub struct SkewSystem {
    system: FactoredSystem,
}

impl SkewSystem {
    pub fn new(x: &Matrix) -> SkewSystem {
        SkewSystem { system: FactoredSystem::new(&skew_coefficients(x)) }
    }

    pub fn admits(&self, y: &Matrix) -> bool {
        self.system.is_solvable(&jordan_rhs(y))
    }

    pub fn solve(&self, y: &Matrix) -> SolutionSpace {
        self.system.solve(&jordan_rhs(y))
    }
}

impl PointOracle for SkewSystem {
    fn admits(&self, y: &Matrix) -> bool {
        SkewSystem::admits(self, y)
    }
}

/// `x -> cx - xc` as an additive map of `H_n(R)`.
pub fn map_from_skew(c: &SkewImplementer) -> AdditiveMap {
    let m = c.matrix();
    AdditiveMap::from_fn(m.ring(), m.n(), Carrier::Jordan, |x| m.commutator(x).unwrap())
}

fn require_jordan(f: &AdditiveMap) -> Result<()> {
    if f.carrier() != Carrier::Jordan {
        return Err(Error::CarrierMismatch("expected a map on symmetric matrices".into()));
    }
    Ok(())
}

pub fn check_local_inner_jordan(f: &AdditiveMap, pts: &PointSet) -> Result<Verdict> {
    Ok(check_local_inner_jordan_batch(&[f], pts)?.pop().unwrap())
}

pub fn check_local_inner_jordan_batch(maps: &[&AdditiveMap], pts: &PointSet) -> Result<Vec<Verdict>> {
    let Some(first) = maps.first() else { return Ok(Vec::new()) };
    for f in maps {
        require_jordan(f)?;
        if f.ring() != first.ring() || f.n() != first.n() {
            return Err(Error::ShapeMismatch("batch maps must share ring and dimension".into()));
        }
    }
    let points = pts.resolve(first.ring(), first.n(), Carrier::Jordan)?;
    let fails = first_failures(maps, &points, SkewSystem::new);
    Ok(maps
        .iter()
        .zip(fails)
        .map(|(f, fail)| {
            build_verdict(fail, &points, pts.seed(), |x| {
                !SkewSystem::new(x).solve(&f.apply_unchecked(x)).is_solvable()
            })
        })
        .collect())
}

/// Joint skew solve over the Jordan module basis. Skew implementers on
/// `H_n` are unique, so no gauge is applied.
pub fn globalize_jordan(f: &AdditiveMap) -> std::result::Result<SkewImplementer, GlobalizeError> {
    require_jordan(f)?;
    let (ring, n) = (f.ring(), f.n());
    if n < 2 {
        return if f.apply_unchecked(&Matrix::identity(ring, n.max(1))).is_zero() || n == 0 {
            Ok(SkewImplementer(Matrix::zeros(ring, n, n)))
        } else {
            Err(GlobalizeError::Failed { stage: "jordan".into(), violation: json!({"reason": "nonzero map on H_1"}) })
        };
    }
    let basis = module_basis(ring, n, Carrier::Jordan);
    let blocks: Vec<Matrix> = basis.iter().map(skew_coefficients).collect();
    let rhs: Vec<Scalar> = basis.iter().flat_map(|x| jordan_rhs(&f.apply_unchecked(x))).collect();
    let rows = blocks[0].rows();
    let stacked = Matrix::from_fn(ring, rows * blocks.len(), blocks[0].cols(), |r, c| {
        blocks[r / rows].at(r % rows, c).clone()
    });
    let sol = FactoredSystem::new(&stacked).solve(&rhs);
    let t = sol.particular.ok_or_else(|| GlobalizeError::Failed {
        stage: "jordan".into(),
        violation: json!({"reason": "basis constraints admit no common skew implementer"}),
    })?;
    Ok(SkewImplementer::from_upper(ring, n, &t))
}

/// Whether `0` is the only skew matrix commuting with all of `H_n(R)`.
pub fn skew_commutant_is_trivial(ring: &Ring, n: usize) -> bool {
    if n < 2 {
        return true;
    }
    let basis = module_basis(ring, n, Carrier::Jordan);
    let blocks: Vec<Matrix> = basis.iter().map(skew_coefficients).collect();
    let rows = blocks[0].rows();
    let stacked = Matrix::from_fn(ring, rows * blocks.len(), blocks[0].cols(), |r, c| {
        blocks[r / rows].at(r % rows, c).clone()
    });
    let rhs = vec![ring.zero(); stacked.rows()];
    let sol = FactoredSystem::new(&stacked).solve(&rhs);
    sol.homogeneous.iter().all(|h| h.iter().all(|v| ring.is_zero(v)))
}

/// Jordan Leibniz rule on all pairs of module basis elements, with the
/// half-normalized product when 2 is invertible and `ab + ba` otherwise.
pub fn jordan_is_derivation(f: &AdditiveMap) -> bool {
    assert_eq!(f.carrier(), Carrier::Jordan, "use localcheck::is_derivation for M_n");
    let ring = f.ring();
    let half = ring.inv(&ring.from_i64(2));
    let prod = |a: &Matrix, b: &Matrix| {
        let d = a.mul_unchecked(b).add(&b.mul_unchecked(a)).unwrap();
        match &half {
            Some(h) => d.scale(h),
            None => d,
        }
    };
    let basis = module_basis(ring, f.n(), Carrier::Jordan);
    let images: Vec<Matrix> = basis.iter().map(|b| f.apply_unchecked(b)).collect();
    basis.iter().zip(&images).enumerate().all(|(s, (u, fu))| {
        basis.iter().zip(&images).skip(s).all(|(v, fv)| {
            f.apply_unchecked(&prod(u, v)) == prod(fu, v).add(&prod(u, fv)).unwrap()
        })
    })
}

/// `b -> c_b b - b c_b` on the Jordan basis, one skew implementer per basis
/// element, extended linearly.
pub fn gen_jordan_patched(ring: &Ring, n: usize, implementers: &[SkewImplementer]) -> Result<AdditiveMap> {
    let positions = Carrier::Jordan.positions(n);
    if implementers.len() != positions.len() {
        return Err(Error::WrongImageCount { expected: positions.len(), got: implementers.len() });
    }
    let images: Vec<Matrix> = positions
        .into_iter()
        .zip(implementers)
        .map(|((i, j), c)| Ok(c.apply(&SymMatrix::basis(ring, n, i, j)?)?.into_matrix()))
        .collect::<Result<_>>()?;
    AdditiveMap::from_basis_images(ring, n, Carrier::Jordan, &images)
}

pub fn random_jordan_patched(ring: &Ring, n: usize, seed: u64) -> AdditiveMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let implementers: Vec<SkewImplementer> = Carrier::Jordan
        .positions(n)
        .iter()
        .map(|_| SkewImplementer::random(ring, n, &mut rng, 9))
        .collect();
    gen_jordan_patched(ring, n, &implementers).unwrap()
}
