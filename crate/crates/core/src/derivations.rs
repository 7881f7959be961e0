//! Inner derivations `x -> ax - xa` of `M_n(R)` and the witness equations
//! `ax - xa = y`, single and joint.
//!
//! The unknown implementer `a` is vectorized row-major, so unknown `p*n + q`
//! is the entry `a^{p,q}`; equation `r*n + c` is entry `(r, c)` of `ax - xa`.

use crate::error::{Error, Result};
use crate::linsolve::{FactoredSystem, SolutionSpace};
use crate::matrix::Matrix;
use crate::scalars::Ring;

/// `x -> ax - xa`.
pub fn inner_apply(a: &Matrix, x: &Matrix) -> Result<Matrix> {
    a.commutator(x)
}

/// Subtracts `a^{1,1} I`, leaving the inner derivation unchanged.
pub fn canonicalize(a: &Matrix) -> Matrix {
    let n = a.n();
    if n == 0 {
        return a.clone();
    }
    let ring = a.ring();
    let shift = a.at(0, 0).clone();
    let mut out = a.clone();
    for i in 0..n {
        out.set(i, i, ring.sub(a.at(i, i), &shift));
    }
    out
}

/// Whether `a` and `b` implement the same inner derivation, i.e. `a - b`
/// is central.
pub fn inner_equal(a: &Matrix, b: &Matrix) -> Result<bool> {
    Ok(a.sub(b)?.is_scalar())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerDerivation {
    implementer: Matrix,
    canonical: bool,
}

impl InnerDerivation {
    pub fn new(implementer: Matrix) -> Result<InnerDerivation> {
        if !implementer.is_square() {
            return Err(Error::ShapeMismatch("implementer must be square".into()));
        }
        Ok(InnerDerivation { implementer, canonical: false })
    }

    /// Same derivation, implementer in the zero-`(1,1)` gauge.
    pub fn canonical(&self) -> InnerDerivation {
        InnerDerivation { implementer: canonicalize(&self.implementer), canonical: true }
    }

    pub fn implementer(&self) -> &Matrix {
        &self.implementer
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        inner_apply(&self.implementer, x)
    }
}

/// Coefficient matrix of `a -> ax - xa` acting on the vectorized `a`.
pub fn sylvester_matrix(x: &Matrix) -> Matrix {
    let n = x.n();
    let ring = x.ring();
    let mut m = Matrix::zeros(ring, n * n, n * n);
    for r in 0..n {
        for c in 0..n {
            let eq = r * n + c;
            // (ax)_{r,c} = sum_q a^{r,q} x^{q,c}
            for q in 0..n {
                let v = x.at(q, c);
                if !ring.is_zero(v) {
                    let u = r * n + q;
                    m.set(eq, u, ring.add(m.at(eq, u), v));
                }
            }
            // (xa)_{r,c} = sum_p x^{r,p} a^{p,c}
            for p in 0..n {
                let v = x.at(r, p);
                if !ring.is_zero(v) {
                    let u = p * n + c;
                    m.set(eq, u, ring.sub(m.at(eq, u), v));
                }
            }
        }
    }
    m
}

fn check_pair(x: &Matrix, y: &Matrix) -> Result<()> {
    if !x.is_square() || x.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!("point {:?} with value {:?}", x.shape(), y.shape())));
    }
    if x.ring() != y.ring() {
        return Err(Error::RingMismatch(x.ring().name(), y.ring().name()));
    }
    Ok(())
}

/// All `a` with `ax - xa = y`, as vectorized `n x n` matrices.
pub fn sylvester_solve(x: &Matrix, y: &Matrix) -> Result<SolutionSpace> {
    check_pair(x, y)?;
    Ok(FactoredSystem::new(&sylvester_matrix(x)).solve(y.entries()))
}

/// All `a` commuting with `x`.
pub fn centralizer(x: &Matrix) -> Result<SolutionSpace> {
    if !x.is_square() {
        return Err(Error::ShapeMismatch("centralizer of a non-square matrix".into()));
    }
    sylvester_solve(x, &Matrix::zeros(x.ring(), x.n(), x.n()))
}

/// The witness equation at one point, factored for repeated right-hand sides.
pub struct SylvesterSystem {
    n: usize,
    system: FactoredSystem,
}

impl SylvesterSystem {
    pub fn new(x: &Matrix) -> SylvesterSystem {
        SylvesterSystem { n: x.n(), system: FactoredSystem::new(&sylvester_matrix(x)) }
    }

    /// Whether some `a` has `ax - xa = y`.
    pub fn admits(&self, y: &Matrix) -> bool {
        debug_assert_eq!(y.n(), self.n);
        self.system.is_solvable(y.entries())
    }

    pub fn solve(&self, y: &Matrix) -> SolutionSpace {
        self.system.solve(y.entries())
    }
}

/// Simultaneous witness constraints `a x_i - x_i a = y_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessSystem {
    ring: Ring,
    n: usize,
    constraints: Vec<(Matrix, Matrix)>,
}

impl WitnessSystem {
    pub fn new(constraints: Vec<(Matrix, Matrix)>) -> Result<WitnessSystem> {
        let (first, _) = constraints
            .first()
            .ok_or_else(|| Error::ShapeMismatch("empty witness system".into()))?;
        let ring = first.ring().clone();
        let n = first.rows();
        for (x, y) in &constraints {
            check_pair(x, y)?;
            if x.ring() != &ring {
                return Err(Error::RingMismatch(ring.name(), x.ring().name()));
            }
            if x.rows() != n {
                return Err(Error::ShapeMismatch(format!("mixed dimensions {n} and {}", x.rows())));
            }
        }
        Ok(WitnessSystem { ring, n, constraints })
    }

    pub fn constraints(&self) -> &[(Matrix, Matrix)] {
        &self.constraints
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// Stacked coefficient matrix and right-hand side.
    pub fn stacked(&self) -> (Matrix, Vec<crate::scalars::Scalar>) {
        let nn = self.n * self.n;
        let blocks: Vec<Matrix> = self.constraints.iter().map(|(x, _)| sylvester_matrix(x)).collect();
        let a = Matrix::from_fn(&self.ring, nn * blocks.len(), nn, |r, c| blocks[r / nn].at(r % nn, c).clone());
        let b = self.constraints.iter().flat_map(|(_, y)| y.entries().iter().cloned()).collect();
        (a, b)
    }
}

/// All `a` satisfying every constraint of the system at once.
pub fn joint_solve(sys: &WitnessSystem) -> SolutionSpace {
    let (a, b) = sys.stacked();
    FactoredSystem::new(&a).solve(&b)
}
