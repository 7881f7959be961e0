//! Additive maps on `M_n(R)` and `H_n(R)`, point sets, and the local
//! inner derivation decision procedure.
//!
//! An additive map is stored as a matrix over the prime ring acting on
//! coordinates in a fixed module basis. Over `GF(p^k)` every carrier basis
//! element `b` is split into `w^t b` for `t < k`, so the stored map is only
//! `GF(p)`-linear and need not be homogeneous over the whole field.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::derivations::{inner_apply, sylvester_solve, SylvesterSystem};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalars::{Ring, RingSpec, Scalar};

/// Largest point set (or map space) that may be scanned exhaustively.
pub const EXHAUSTIVE_BUDGET: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Carrier {
    /// The full matrix algebra `M_n(R)`, basis `e_{i,j}` row-major.
    Full,
    /// Symmetric matrices `H_n(R)`, basis `e_{1,1}, ..., e_{n,n}, e_{1,2}+e_{2,1}, ...`.
    Jordan,
}

impl Carrier {
    /// Positions `(i, j)` of the carrier basis, in basis order.
    pub fn positions(self, n: usize) -> Vec<(usize, usize)> {
        match self {
            Carrier::Full => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
            Carrier::Jordan => {
                let mut out: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
                for i in 0..n {
                    for j in i + 1..n {
                        out.push((i, j));
                    }
                }
                out
            }
        }
    }

    pub fn basis_len(self, n: usize) -> usize {
        match self {
            Carrier::Full => n * n,
            Carrier::Jordan => n * (n + 1) / 2,
        }
    }

    /// The carrier basis element at position `(i, j)`.
    pub fn basis_element(self, ring: &Ring, n: usize, (i, j): (usize, usize)) -> Matrix {
        match self {
            Carrier::Full => Matrix::unit(ring, n, i, j).unwrap(),
            Carrier::Jordan => Matrix::sym_unit(ring, n, i, j).unwrap(),
        }
    }

    pub fn contains(self, x: &Matrix) -> bool {
        match self {
            Carrier::Full => x.is_square(),
            Carrier::Jordan => x.is_symmetric(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Carrier::Full => "full",
            Carrier::Jordan => "jordan",
        }
    }
}

/// Coordinates of `x` over the prime ring in the carrier's module basis.
pub fn carrier_coords(carrier: Carrier, x: &Matrix) -> Vec<Scalar> {
    let ring = x.ring();
    carrier
        .positions(x.n())
        .into_iter()
        .flat_map(|(i, j)| ring.to_prime_coords(x.at(i, j)))
        .collect()
}

/// Inverse of [`carrier_coords`].
pub fn matrix_from_coords(ring: &Ring, n: usize, carrier: Carrier, coords: &[Scalar]) -> Matrix {
    let k = ring.extension_degree();
    let mut m = Matrix::zeros(ring, n, n);
    for (b, (i, j)) in carrier.positions(n).into_iter().enumerate() {
        let v = ring.from_prime_coords(&coords[b * k..(b + 1) * k]);
        if i != j && carrier == Carrier::Jordan {
            m.set(j, i, v.clone());
        }
        m.set(i, j, v);
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditiveMap {
    ring: Ring,
    n: usize,
    carrier: Carrier,
    action: Matrix,
}

impl AdditiveMap {
    /// Wraps an action matrix over the prime ring.
    pub fn from_action(ring: &Ring, n: usize, carrier: Carrier, action: Matrix) -> Result<AdditiveMap> {
        let dim = carrier.basis_len(n) * ring.extension_degree();
        if action.shape() != (dim, dim) {
            return Err(Error::ShapeMismatch(format!(
                "action of shape {:?} for module dimension {dim}",
                action.shape()
            )));
        }
        if action.ring() != &ring.prime_ring() {
            return Err(Error::RingMismatch(action.ring().name(), ring.prime_ring().name()));
        }
        Ok(AdditiveMap { ring: ring.clone(), n, carrier, action })
    }

    /// The additive map agreeing with `f` on the module basis.
    pub fn from_fn(ring: &Ring, n: usize, carrier: Carrier, f: impl Fn(&Matrix) -> Matrix) -> AdditiveMap {
        let basis = module_basis(ring, n, carrier);
        let cols: Vec<Vec<Scalar>> = basis.iter().map(|b| carrier_coords(carrier, &f(b))).collect();
        let dim = basis.len();
        let action = Matrix::from_fn(&ring.prime_ring(), dim, dim, |r, c| cols[c][r].clone());
        AdditiveMap { ring: ring.clone(), n, carrier, action }
    }

    pub fn zero(ring: &Ring, n: usize, carrier: Carrier) -> AdditiveMap {
        let dim = carrier.basis_len(n) * ring.extension_degree();
        AdditiveMap { ring: ring.clone(), n, carrier, action: Matrix::zeros(&ring.prime_ring(), dim, dim) }
    }

    pub fn identity(ring: &Ring, n: usize, carrier: Carrier) -> AdditiveMap {
        let dim = carrier.basis_len(n) * ring.extension_degree();
        AdditiveMap { ring: ring.clone(), n, carrier, action: Matrix::identity(&ring.prime_ring(), dim) }
    }

    /// Extends images of the carrier basis (`R`-linearly), or of the full
    /// module basis (`w^t b`, prime-linearly) when `k` times as many are given.
    pub fn from_basis_images(ring: &Ring, n: usize, carrier: Carrier, images: &[Matrix]) -> Result<AdditiveMap> {
        let len = carrier.basis_len(n);
        let k = ring.extension_degree();
        for img in images {
            if img.shape() != (n, n) {
                return Err(Error::ShapeMismatch(format!("image of shape {:?} for n = {n}", img.shape())));
            }
            if img.ring() != ring {
                return Err(Error::RingMismatch(img.ring().name(), ring.name()));
            }
            if !carrier.contains(img) {
                return Err(Error::CarrierMismatch("image outside the carrier".into()));
            }
        }
        let module_images: Vec<Matrix> = if images.len() == len * k {
            images.to_vec()
        } else if images.len() == len {
            let scalars = ring.prime_basis();
            images.iter().flat_map(|img| scalars.iter().map(move |w| img.scale(w))).collect()
        } else {
            return Err(Error::WrongImageCount { expected: len, got: images.len() });
        };
        let dim = len * k;
        let cols: Vec<Vec<Scalar>> = module_images.iter().map(|m| carrier_coords(carrier, m)).collect();
        let action = Matrix::from_fn(&ring.prime_ring(), dim, dim, |r, c| cols[c][r].clone());
        Ok(AdditiveMap { ring: ring.clone(), n, carrier, action })
    }

    /// Number of distinct maps on this carrier when the prime ring is finite
    /// and the count fits `u64`.
    pub fn space_size(ring: &Ring, n: usize, carrier: Carrier) -> Option<u64> {
        let p = ring.prime_ring().cardinality()?;
        let dim = carrier.basis_len(n) * ring.extension_degree();
        let mut total: u64 = 1;
        for _ in 0..dim * dim {
            total = total.checked_mul(p)?;
        }
        Some(total)
    }

    /// The map whose action entries (row-major) are the base-`|P|` digits of
    /// `index`, least significant first, over a finite prime ring `P`.
    pub fn from_index(ring: &Ring, n: usize, carrier: Carrier, index: u64) -> AdditiveMap {
        let prime = ring.prime_ring();
        let p = prime.cardinality().expect("finite prime ring");
        let dim = carrier.basis_len(n) * ring.extension_degree();
        let mut idx = index;
        let action = Matrix::from_fn(&prime, dim, dim, |_, _| {
            let v = prime.element(idx % p);
            idx /= p;
            v
        });
        AdditiveMap { ring: ring.clone(), n, carrier, action }
    }

    /// Inverse of [`AdditiveMap::from_index`].
    pub fn index(&self) -> u64 {
        let prime = self.action.ring();
        let p = prime.cardinality().expect("finite prime ring");
        self.action.entries().iter().rev().fold(0, |acc, v| acc * p + prime.index_of(v))
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn carrier(&self) -> Carrier {
        self.carrier
    }

    pub fn action(&self) -> &Matrix {
        &self.action
    }

    pub fn dim(&self) -> usize {
        self.action.rows()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.ring() != &self.ring {
            return Err(Error::RingMismatch(x.ring().name(), self.ring.name()));
        }
        if !x.is_square() || x.n() != self.n {
            return Err(Error::ShapeMismatch(format!("{:?} for n = {}", x.shape(), self.n)));
        }
        if !self.carrier.contains(x) {
            return Err(Error::NotSymmetric);
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &Matrix) -> Matrix {
        let coords = carrier_coords(self.carrier, x);
        self.apply_coords(&coords)
    }

    pub(crate) fn apply_coords(&self, coords: &[Scalar]) -> Matrix {
        let prime = self.action.ring();
        let dim = self.dim();
        let mut out = vec![prime.zero(); dim];
        for (c, x) in coords.iter().enumerate() {
            if prime.is_zero(x) {
                continue;
            }
            for (r, slot) in out.iter_mut().enumerate() {
                let a = self.action.at(r, c);
                if !prime.is_zero(a) {
                    *slot = prime.add(slot, &prime.mul(a, x));
                }
            }
        }
        debug_assert_eq!(out.len(), dim);
        matrix_from_coords(&self.ring, self.n, self.carrier, &out)
    }

    /// Images of the module basis, in basis order.
    pub fn module_images(&self) -> Vec<Matrix> {
        let dim = self.dim();
        (0..dim)
            .map(|c| {
                let col: Vec<Scalar> = (0..dim).map(|r| self.action.at(r, c).clone()).collect();
                matrix_from_coords(&self.ring, self.n, self.carrier, &col)
            })
            .collect()
    }

    /// `f(w^t b) = w^t f(b)` on every carrier basis element; always true
    /// unless the ring is a proper extension field.
    pub fn is_homogeneous(&self) -> bool {
        let basis = self.carrier.positions(self.n);
        let scalars = self.ring.prime_basis();
        basis.into_iter().all(|pos| {
            let b = self.carrier.basis_element(&self.ring, self.n, pos);
            let fb = self.apply_unchecked(&b);
            scalars.iter().all(|w| self.apply_unchecked(&b.scale(w)) == fb.scale(w))
        })
    }

    pub fn to_json(&self) -> Value {
        let images: Vec<Value> = self.module_images().iter().map(Matrix::to_json).collect();
        json!({
            "ring": self.ring.spec(),
            "n": self.n,
            "carrier": self.carrier.name(),
            "basis_images": images,
        })
    }

    pub fn from_json(v: &Value) -> Result<AdditiveMap> {
        let spec: RingSpec = serde_json::from_value(v.get("ring").cloned().ok_or_else(|| Error::Parse("map: missing ring".into()))?)?;
        let ring = Ring::new(&spec)?;
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("map: missing n".into()))? as usize;
        let carrier = match v.get("carrier").and_then(Value::as_str).unwrap_or("full") {
            "full" => Carrier::Full,
            "jordan" => Carrier::Jordan,
            other => return Err(Error::Parse(format!("map: unknown carrier `{other}`"))),
        };
        let images = v
            .get("basis_images")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("map: missing basis_images".into()))?;
        let images: Vec<Matrix> = images.iter().map(|m| Matrix::from_json(&ring, m)).collect::<Result<_>>()?;
        AdditiveMap::from_basis_images(&ring, n, carrier, &images)
    }
}

/// `w^t b` for every carrier basis element `b` and `t < k`, in module order.
pub fn module_basis(ring: &Ring, n: usize, carrier: Carrier) -> Vec<Matrix> {
    let scalars = ring.prime_basis();
    carrier
        .positions(n)
        .into_iter()
        .flat_map(|pos| {
            let b = carrier.basis_element(ring, n, pos);
            scalars.iter().map(move |w| b.scale(w)).collect::<Vec<_>>()
        })
        .collect()
}

/// `x -> ax - xa` as an additive map of `M_n(R)`.
pub fn map_from_inner(a: &Matrix) -> AdditiveMap {
    AdditiveMap::from_fn(a.ring(), a.n(), Carrier::Full, |x| inner_apply(a, x).unwrap())
}

pub fn map_from_basis_images(ring: &Ring, n: usize, images: &[Matrix]) -> Result<AdditiveMap> {
    AdditiveMap::from_basis_images(ring, n, Carrier::Full, images)
}

pub fn apply_map(f: &AdditiveMap, x: &Matrix) -> Result<Matrix> {
    f.apply(x)
}

/// `e_{i,j} -> a_{i,j} e_{i,j} - e_{i,j} a_{i,j}` with one implementer per
/// unit (row-major), extended linearly.
pub fn gen_basis_patched(ring: &Ring, n: usize, implementers: &[Matrix]) -> Result<AdditiveMap> {
    if implementers.len() != n * n {
        return Err(Error::WrongImageCount { expected: n * n, got: implementers.len() });
    }
    let images: Vec<Matrix> = Carrier::Full
        .positions(n)
        .into_iter()
        .zip(implementers)
        .map(|((i, j), a)| inner_apply(a, &Matrix::unit(ring, n, i, j)?))
        .collect::<Result<_>>()?;
    map_from_basis_images(ring, n, &images)
}

/// A basis-patched map with independently random implementers.
pub fn random_basis_patched(ring: &Ring, n: usize, seed: u64) -> AdditiveMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let implementers: Vec<Matrix> = (0..n * n)
        .map(|_| Matrix::from_fn(ring, n, n, |_, _| ring.random(&mut rng)))
        .collect();
    gen_basis_patched(ring, n, &implementers).unwrap()
}

/// Leibniz rule on all pairs of module basis elements; by biadditivity this
/// decides it on the whole algebra.
pub fn is_derivation(f: &AdditiveMap) -> bool {
    assert_eq!(f.carrier(), Carrier::Full, "use jordan::jordan_is_derivation for H_n");
    let basis = module_basis(f.ring(), f.n(), Carrier::Full);
    let images: Vec<Matrix> = basis.iter().map(|b| f.apply_unchecked(b)).collect();
    basis.iter().zip(&images).all(|(u, fu)| {
        basis.iter().zip(&images).all(|(v, fv)| {
            let lhs = f.apply_unchecked(&u.mul_unchecked(v));
            let rhs = fu.mul_unchecked(v).add(&u.mul_unchecked(fv)).unwrap();
            lhs == rhs
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
    #[serde(skip)]
    Explicit(Vec<Matrix>),
}

/// Which points a checker interrogates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    pub mode: PointMode,
}

impl PointSet {
    pub fn exhaustive() -> PointSet {
        PointSet { mode: PointMode::Exhaustive }
    }

    pub fn sampled(count: usize, seed: u64) -> PointSet {
        PointSet { mode: PointMode::Sampled { count, seed } }
    }

    pub fn explicit(points: Vec<Matrix>) -> PointSet {
        PointSet { mode: PointMode::Explicit(points) }
    }

    /// Exhaustive when the budget allows, otherwise sampled.
    pub fn auto(ring: &Ring, n: usize, carrier: Carrier, count: usize, seed: u64) -> PointSet {
        match exhaustive_size(ring, n, carrier) {
            Some(_) => PointSet::exhaustive(),
            None => PointSet::sampled(count, seed),
        }
    }

    pub fn resolve(&self, ring: &Ring, n: usize, carrier: Carrier) -> Result<Points> {
        match &self.mode {
            PointMode::Exhaustive => {
                let total = exhaustive_size(ring, n, carrier).ok_or_else(|| {
                    if ring.is_finite() {
                        Error::BudgetExceeded(format!(
                            "{} points of {} over {} exceed {EXHAUSTIVE_BUDGET}",
                            carrier.name(),
                            n,
                            ring.name()
                        ))
                    } else {
                        Error::InfiniteRing(ring.name())
                    }
                })?;
                Ok(Points::Exhaustive { ring: ring.clone(), n, carrier, total })
            }
            PointMode::Sampled { count, seed } => Ok(Points::List {
                points: sample_points(ring, n, carrier, *count, *seed),
                certified: false,
            }),
            PointMode::Explicit(points) => {
                for x in points {
                    if x.ring() != ring {
                        return Err(Error::RingMismatch(x.ring().name(), ring.name()));
                    }
                    if x.shape() != (n, n) {
                        return Err(Error::ShapeMismatch(format!("point of shape {:?}", x.shape())));
                    }
                    if !carrier.contains(x) {
                        return Err(Error::NotSymmetric);
                    }
                }
                Ok(Points::List { points: points.clone(), certified: false })
            }
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.mode {
            PointMode::Sampled { seed, .. } => Some(seed),
            _ => None,
        }
    }
}

/// Size of the whole carrier when it fits the exhaustive budget.
pub fn exhaustive_size(ring: &Ring, n: usize, carrier: Carrier) -> Option<u64> {
    let card = ring.cardinality()?;
    let mut total: u64 = 1;
    for _ in 0..carrier.basis_len(n) {
        total = total.checked_mul(card).filter(|&t| t <= EXHAUSTIVE_BUDGET)?;
    }
    Some(total)
}

/// A resolved, indexable point sequence.
pub enum Points {
    Exhaustive { ring: Ring, n: usize, carrier: Carrier, total: u64 },
    List { points: Vec<Matrix>, certified: bool },
}

impl Points {
    pub fn len(&self) -> usize {
        match self {
            Points::Exhaustive { total, .. } => *total as usize,
            Points::List { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether the points are the entire (finite) carrier.
    pub fn is_certified(&self) -> bool {
        matches!(self, Points::Exhaustive { .. } | Points::List { certified: true, .. })
    }

    pub fn get(&self, index: usize) -> Matrix {
        match self {
            Points::Exhaustive { ring, n, carrier, .. } => {
                let card = ring.cardinality().unwrap();
                let mut idx = index as u64;
                let mut m = Matrix::zeros(ring, *n, *n);
                for (i, j) in carrier.positions(*n) {
                    let v = ring.element(idx % card);
                    idx /= card;
                    if i != j && *carrier == Carrier::Jordan {
                        m.set(j, i, v.clone());
                    }
                    m.set(i, j, v);
                }
                m
            }
            Points::List { points, .. } => points[index].clone(),
        }
    }
}

/// Structured points (carrier basis elements, their scalings, all pairwise
/// sums of scaled basis elements, the superdiagonal sum) followed by
/// `count` uniformly random points.
pub fn sample_points(ring: &Ring, n: usize, carrier: Carrier, count: usize, seed: u64) -> Vec<Matrix> {
    let probes = ring.probe_scalars();
    let basis: Vec<Matrix> = carrier
        .positions(n)
        .into_iter()
        .map(|pos| carrier.basis_element(ring, n, pos))
        .collect();
    let mut out: Vec<Matrix> = Vec::new();
    for b in &basis {
        for s in &probes {
            out.push(b.scale(s));
        }
    }
    for (i, a) in basis.iter().enumerate() {
        for b in &basis[i + 1..] {
            for s in &probes {
                for t in &probes {
                    out.push(a.scale(s).add(&b.scale(t)).unwrap());
                }
            }
        }
    }
    if n > 1 {
        let mut sup = Matrix::zeros(ring, n, n);
        for k in 0..n - 1 {
            sup = sup.add(&carrier.basis_element(ring, n, (k, k + 1))).unwrap();
        }
        out.push(sup);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = carrier.positions(n);
    for _ in 0..count {
        let mut m = Matrix::zeros(ring, n, n);
        for &(i, j) in &positions {
            let v = ring.random(&mut rng);
            if i != j && carrier == Carrier::Jordan {
                m.set(j, i, v.clone());
            }
            m.set(i, j, v);
        }
        out.push(m);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    CertifiedAccept,
    ProbabilisticAccept { sample_size: usize },
    Reject,
}

impl Outcome {
    pub fn is_accept(&self) -> bool {
        !matches!(self, Outcome::Reject)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Outcome::CertifiedAccept => "certified-accept",
            Outcome::ProbabilisticAccept { .. } => "probabilistic-accept",
            Outcome::Reject => "reject",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    /// First failing point in point order.
    pub witness: Option<Matrix>,
    pub witness_index: Option<usize>,
    /// Points examined: all of them on accept, up to and including the witness on reject.
    pub checked_points: usize,
    pub seed: Option<u64>,
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        self.outcome.is_accept()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "outcome": self.outcome.name(),
            "checked_points": self.checked_points,
        });
        if let Outcome::ProbabilisticAccept { sample_size } = self.outcome {
            v["sample_size"] = json!(sample_size);
        }
        if let Some(w) = &self.witness {
            v["witness"] = w.to_json();
        }
        if let Some(seed) = self.seed {
            v["seed"] = json!(seed);
        }
        v
    }
}

/// A per-point oracle: whether `y` is the value of some admissible inner
/// derivation at the point it was built for.
pub(crate) trait PointOracle: Send {
    fn admits(&self, y: &Matrix) -> bool;
}

impl PointOracle for SylvesterSystem {
    fn admits(&self, y: &Matrix) -> bool {
        SylvesterSystem::admits(self, y)
    }
}

const CHUNK: usize = 64;

/// First failing point index per map, or `None` when every point is admitted.
///
/// Points are processed in parallel chunks; each point's system is factored
/// once and shared by all maps. A map is skipped at a point only once a
/// failure at an earlier index is known, so the reported index is the first
/// failure in point order regardless of scheduling.
pub(crate) fn first_failures<O, F>(maps: &[&AdditiveMap], points: &Points, oracle: F) -> Vec<Option<usize>>
where
    O: PointOracle,
    F: Fn(&Matrix) -> O + Sync,
{
    let first: Vec<AtomicUsize> = maps.iter().map(|_| AtomicUsize::new(usize::MAX)).collect();
    let len = points.len();
    let chunks = len.div_ceil(CHUNK);
    (0..chunks).into_par_iter().for_each(|chunk| {
        let start = chunk * CHUNK;
        if first.iter().all(|f| f.load(Ordering::Relaxed) < start) {
            return;
        }
        for idx in start..(start + CHUNK).min(len) {
            let x = points.get(idx);
            let mut system: Option<O> = None;
            let coords = maps.first().map(|f| carrier_coords(f.carrier(), &x));
            for (m, f) in maps.iter().enumerate() {
                if first[m].load(Ordering::Relaxed) < idx {
                    continue;
                }
                let y = f.apply_coords(coords.as_ref().unwrap());
                let sys = system.get_or_insert_with(|| oracle(&x));
                if !sys.admits(&y) {
                    first[m].fetch_min(idx, Ordering::Relaxed);
                }
            }
        }
    });
    first
        .into_iter()
        .map(|f| Some(f.into_inner()).filter(|&i| i != usize::MAX))
        .collect()
}

pub(crate) fn build_verdict(
    first_fail: Option<usize>,
    points: &Points,
    seed: Option<u64>,
    recheck: impl Fn(&Matrix) -> bool,
) -> Verdict {
    match first_fail {
        None => Verdict {
            outcome: if points.is_certified() {
                Outcome::CertifiedAccept
            } else {
                Outcome::ProbabilisticAccept { sample_size: points.len() }
            },
            witness: None,
            witness_index: None,
            checked_points: points.len(),
            seed,
        },
        Some(idx) => {
            let x = points.get(idx);
            assert!(recheck(&x), "reject witness failed re-verification");
            Verdict {
                outcome: Outcome::Reject,
                witness: Some(x),
                witness_index: Some(idx),
                checked_points: idx + 1,
                seed,
            }
        }
    }
}

fn check_full_inputs(f: &AdditiveMap) -> Result<()> {
    if f.carrier() != Carrier::Full {
        return Err(Error::CarrierMismatch("check_local_inner needs the full matrix algebra".into()));
    }
    Ok(())
}

/// Decides, point by point, whether each value `f(x)` is `ax - xa` for some `a`.
pub fn check_local_inner(f: &AdditiveMap, pts: &PointSet) -> Result<Verdict> {
    Ok(check_local_inner_batch(&[f], pts)?.pop().unwrap())
}

/// [`check_local_inner`] for many maps on the same ring and dimension; each
/// point's system is factored once.
pub fn check_local_inner_batch(maps: &[&AdditiveMap], pts: &PointSet) -> Result<Vec<Verdict>> {
    let Some(first) = maps.first() else { return Ok(Vec::new()) };
    for f in maps {
        check_full_inputs(f)?;
        if f.ring() != first.ring() || f.n() != first.n() {
            return Err(Error::ShapeMismatch("batch maps must share ring and dimension".into()));
        }
    }
    let points = pts.resolve(first.ring(), first.n(), Carrier::Full)?;
    let fails = first_failures(maps, &points, SylvesterSystem::new);
    Ok(maps
        .iter()
        .zip(fails)
        .map(|(f, fail)| {
            build_verdict(fail, &points, pts.seed(), |x| {
                !sylvester_solve(x, &f.apply_unchecked(x)).unwrap().is_solvable()
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivations::inner_equal;

    fn e(ring: &Ring, n: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(ring, n, i, j).unwrap()
    }

    fn all_matrices(ring: &Ring, n: usize) -> Vec<Matrix> {
        let pts = PointSet::exhaustive().resolve(ring, n, Carrier::Full).unwrap();
        (0..pts.len()).map(|i| pts.get(i)).collect()
    }

    /// Brute-force local inner verdict: for every point, search all implementers.
    fn brute_local_inner(f: &AdditiveMap) -> bool {
        let all = all_matrices(f.ring(), f.n());
        all.iter().all(|x| {
            let y = f.apply(x).unwrap();
            all.iter().any(|a| inner_apply(a, x).unwrap() == y)
        })
    }

    fn patched_reject_example() -> AdditiveMap {
        let q = Ring::rationals();
        let images = vec![Matrix::zeros(&q, 2, 2), e(&q, 2, 0, 1), e(&q, 2, 1, 0), Matrix::zeros(&q, 2, 2)];
        map_from_basis_images(&q, 2, &images).unwrap()
    }

    #[test]
    fn map_from_inner_examples() {
        let f3 = Ring::prime_field(3).unwrap();
        assert_eq!(map_from_inner(&Matrix::zeros(&f3, 2, 2)), AdditiveMap::zero(&f3, 2, Carrier::Full));
        let e11 = e(&f3, 2, 0, 0);
        let f = map_from_inner(&e11);
        let images = f.module_images();
        let expected = [Matrix::zeros(&f3, 2, 2), e(&f3, 2, 0, 1), e(&f3, 2, 1, 0).neg(), Matrix::zeros(&f3, 2, 2)];
        assert_eq!(images, expected);
        let shifted = e11.add(&Matrix::identity(&f3, 2)).unwrap();
        assert_eq!(map_from_inner(&shifted), f);
    }

    #[test]
    fn basis_image_examples() {
        let f5 = Ring::prime_field(5).unwrap();
        let zeros = vec![Matrix::zeros(&f5, 2, 2); 4];
        assert_eq!(map_from_basis_images(&f5, 2, &zeros).unwrap(), AdditiveMap::zero(&f5, 2, Carrier::Full));
        let units: Vec<Matrix> = Carrier::Full.positions(2).into_iter().map(|(i, j)| e(&f5, 2, i, j)).collect();
        let id = map_from_basis_images(&f5, 2, &units).unwrap();
        assert_eq!(id, AdditiveMap::identity(&f5, 2, Carrier::Full));
        assert!(!is_derivation(&id));
        let a = Matrix::from_i64(&f5, &[&[1, 2], &[3, 4]]);
        let imgs: Vec<Matrix> = units.iter().map(|u| inner_apply(&a, u).unwrap()).collect();
        assert_eq!(map_from_basis_images(&f5, 2, &imgs).unwrap(), map_from_inner(&a));
        assert!(matches!(
            map_from_basis_images(&f5, 2, &imgs[..3]),
            Err(Error::WrongImageCount { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn apply_examples() {
        let q = Ring::rationals();
        let x = Matrix::from_i64(&q, &[&[1, 2], &[3, 4]]);
        assert!(AdditiveMap::zero(&q, 2, Carrier::Full).apply(&x).unwrap().is_zero());
        let f = map_from_inner(&e(&q, 2, 0, 0));
        let s = Matrix::sym_unit(&q, 2, 0, 1).unwrap();
        assert_eq!(f.apply(&s).unwrap(), e(&q, 2, 0, 1).sub(&e(&q, 2, 1, 0)).unwrap());
        assert!(f.apply(&Matrix::zeros(&q, 2, 2)).unwrap().is_zero());
        let jordan = AdditiveMap::zero(&q, 2, Carrier::Jordan);
        assert!(matches!(jordan.apply(&e(&q, 2, 0, 1)), Err(Error::NotSymmetric)));
        assert!(f.apply(&Matrix::zeros(&q, 3, 3)).is_err());
    }

    #[test]
    fn check_inner_map_exhaustive_gf2() {
        let f2 = Ring::prime_field(2).unwrap();
        let f = map_from_inner(&Matrix::from_i64(&f2, &[&[1, 1], &[0, 1]]));
        let v = check_local_inner(&f, &PointSet::exhaustive()).unwrap();
        assert_eq!(v.outcome, Outcome::CertifiedAccept);
        assert_eq!(v.checked_points, 16);
    }

    #[test]
    fn check_rejects_patched_example_with_sum_witness() {
        let f = patched_reject_example();
        let q = f.ring().clone();
        let s = Matrix::sym_unit(&q, 2, 0, 1).unwrap();
        let pts = PointSet::explicit(vec![e(&q, 2, 0, 1), e(&q, 2, 1, 0), s.clone()]);
        let v = check_local_inner(&f, &pts).unwrap();
        assert_eq!(v.outcome, Outcome::Reject);
        assert_eq!(v.witness, Some(s.clone()));
        assert_eq!(v.witness_index, Some(2));
        assert!(!sylvester_solve(&s, &f.apply(&s).unwrap()).unwrap().is_solvable());
        // Sampled mode includes the pairwise sums, so it also rejects.
        assert_eq!(check_local_inner(&f, &PointSet::sampled(10, 1)).unwrap().outcome, Outcome::Reject);
        assert!(matches!(check_local_inner(&f, &PointSet::exhaustive()), Err(Error::InfiniteRing(_))));
    }

    #[test]
    fn check_rejects_transpose_gf3() {
        let f3 = Ring::prime_field(3).unwrap();
        let t = AdditiveMap::from_fn(&f3, 2, Carrier::Full, Matrix::transpose);
        let e12 = e(&f3, 2, 0, 1);
        let v = check_local_inner(&t, &PointSet::explicit(vec![e12.clone()])).unwrap();
        assert_eq!(v.outcome, Outcome::Reject);
        let all = all_matrices(&f3, 2);
        assert_eq!(all.len(), 81);
        assert!(!all.iter().any(|a| inner_apply(a, &e12).unwrap() == e(&f3, 2, 1, 0)));
    }

    #[test]
    fn derivation_examples() {
        let f2 = Ring::prime_field(2).unwrap();
        let q = Ring::rationals();
        for ring in [f2.clone(), q.clone(), Ring::extension_field(2, 2).unwrap(), Ring::integers_mod(6).unwrap()] {
            let a = Matrix::from_i64(&ring, &[&[1, 2], &[3, 4]]);
            assert!(is_derivation(&map_from_inner(&a)));
            assert!(is_derivation(&AdditiveMap::zero(&ring, 2, Carrier::Full)));
            assert!(!is_derivation(&AdditiveMap::identity(&ring, 2, Carrier::Full)));
        }
        // Over Q the identity fails already on e11 * e11.
        let e11 = e(&q, 2, 0, 0);
        let twice = e11.add(&e11).unwrap();
        assert_ne!(e11.mul(&e11).unwrap(), twice);
        // Over GF(2) e11 * e11 passes, e11 * e12 fails.
        let (g11, g12) = (e(&f2, 2, 0, 0), e(&f2, 2, 0, 1));
        assert_eq!(g11.mul(&g11).unwrap(), g11.add(&g11).unwrap().add(&g11).unwrap());
        assert_ne!(g11.mul(&g12).unwrap(), g12.add(&g12).unwrap());
    }

    #[test]
    fn basis_patched_examples() {
        let f3 = Ring::prime_field(3).unwrap();
        let a = Matrix::from_i64(&f3, &[&[1, 2], &[0, 1]]);
        assert_eq!(gen_basis_patched(&f3, 2, &vec![a.clone(); 4]).unwrap(), map_from_inner(&a));
        let q = Ring::rationals();
        let z = Matrix::zeros(&q, 2, 2);
        let e11 = e(&q, 2, 0, 0);
        let f = gen_basis_patched(&q, 2, &[z.clone(), e11.clone(), e11.neg(), z]).unwrap();
        assert_eq!(f, patched_reject_example());
        assert!(gen_basis_patched(&q, 2, &[e11]).is_err());
    }

    #[test]
    fn random_patched_verdicts_match_brute_force() {
        let f2 = Ring::prime_field(2).unwrap();
        let mut accepted = 0;
        for seed in 0..40 {
            let f = random_basis_patched(&f2, 2, seed);
            let v = check_local_inner(&f, &PointSet::exhaustive()).unwrap();
            assert_eq!(v.is_accept(), brute_local_inner(&f), "seed {seed}");
            accepted += v.is_accept() as usize;
            if let Some(w) = &v.witness {
                let all = all_matrices(&f2, 2);
                let y = f.apply(w).unwrap();
                assert!(!all.iter().any(|a| inner_apply(a, w).unwrap() == y));
            }
        }
        assert!(accepted > 0 && accepted < 40);
    }

    #[test]
    fn batch_matches_single_and_sampled_is_probabilistic() {
        let f3 = Ring::prime_field(3).unwrap();
        let maps: Vec<AdditiveMap> = (0..12).map(|s| random_basis_patched(&f3, 2, s)).collect();
        let refs: Vec<&AdditiveMap> = maps.iter().collect();
        let batch = check_local_inner_batch(&refs, &PointSet::exhaustive()).unwrap();
        for (f, v) in maps.iter().zip(&batch) {
            assert_eq!(&check_local_inner(f, &PointSet::exhaustive()).unwrap(), v);
        }
        let q = Ring::rationals();
        let f = map_from_inner(&Matrix::from_i64(&q, &[&[1, 2, 0], &[0, 3, 1], &[5, 0, 0]]));
        let v = check_local_inner(&f, &PointSet::sampled(50, 3)).unwrap();
        assert!(matches!(v.outcome, Outcome::ProbabilisticAccept { sample_size } if sample_size >= 50));
        assert_eq!(v.seed, Some(3));
    }

    #[test]
    fn sample_points_cover_structured_shapes() {
        let f5 = Ring::prime_field(5).unwrap();
        let pts = sample_points(&f5, 3, Carrier::Full, 10, 0);
        let e12 = e(&f5, 3, 0, 1);
        let two = f5.from_i64(2);
        assert!(pts.contains(&e12));
        assert!(pts.contains(&e12.scale(&two)));
        assert!(pts.contains(&e(&f5, 3, 0, 0).scale(&two).add(&e12).unwrap()));
        let sup = e12.add(&e(&f5, 3, 1, 2)).unwrap();
        assert!(pts.contains(&sup));
        assert_eq!(pts, sample_points(&f5, 3, Carrier::Full, 10, 0));
    }

    #[test]
    fn extension_field_maps_can_be_non_homogeneous() {
        let f4 = Ring::extension_field(2, 2).unwrap();
        // Entrywise Frobenius is additive but not GF(4)-linear.
        let frob = AdditiveMap::from_fn(&f4, 2, Carrier::Full, |x| x.map(|v| f4.mul(v, v)));
        assert!(!frob.is_homogeneous());
        assert_eq!(frob.dim(), 8);
        let w = f4.prime_basis()[1].clone();
        let x = e(&f4, 2, 0, 1).scale(&w);
        assert_eq!(frob.apply(&x).unwrap(), e(&f4, 2, 0, 1).scale(&f4.mul(&w, &w)));
        let a = Matrix::from_fn(&f4, 2, 2, |r, c| f4.element((r * 2 + c) as u64));
        let inner = map_from_inner(&a);
        assert!(inner.is_homogeneous());
        let round = AdditiveMap::from_json(&inner.to_json()).unwrap();
        assert_eq!(round, inner);
        assert!(inner_equal(&a, &a).unwrap());
    }

    #[test]
    fn map_json_round_trip() {
        let q = Ring::rationals();
        let f = patched_reject_example();
        let v = f.to_json();
        assert_eq!(v["carrier"], "full");
        assert_eq!(v["basis_images"].as_array().unwrap().len(), 4);
        assert_eq!(AdditiveMap::from_json(&v).unwrap(), f);
        let bad = json!({"ring": {"kind": "rationals"}, "n": 2, "carrier": "full",
            "basis_images": [{"n": 2, "rows": [["0", "1", "0"], ["0", "0"]]}]});
        assert!(AdditiveMap::from_json(&bad).is_err());
        let _ = q;
    }
}
