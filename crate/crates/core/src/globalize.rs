//! Reconstruction of a single implementer `a` with `f(x) = ax - xa` for
//! every `x`, from the values of `f` on matrix units.
//!
//! Two independent routes:
//! * [`globalize_direct`] solves every unit constraint at once;
//! * [`globalize_stitch`] pins the superdiagonal units `e_{k,k+1}` one at a
//!   time, patching the implementer entrywise from witnesses of adjacent
//!   pairs, then fixes the corner `(1,n)` from `e_{n,1}` and verifies.
//!
//! The unit constraint `[b, e_{k,k+1}] = y` pins column `k` of `b` off the
//! diagonal, row `k+1` off the diagonal, and `b^{k,k} - b^{k+1,k+1}`. Taken
//! over all superdiagonal units this leaves `b^{1,n}` free besides the
//! center, which is why the corner step exists.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::derivations::{canonicalize, inner_apply, inner_equal, joint_solve, WitnessSystem};
use crate::error::Error;
use crate::localcheck::{is_derivation, module_basis, AdditiveMap, Carrier, PointSet};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum GlobalizeError {
    /// The input is not something this route accepts.
    Input(Error),
    /// `f` admits no global implementer; `stage` names the step that failed.
    Failed { stage: String, violation: Value },
}

impl GlobalizeError {
    pub fn stage(&self) -> &str {
        match self {
            GlobalizeError::Input(_) => "input",
            GlobalizeError::Failed { stage, .. } => stage,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            GlobalizeError::Input(e) => json!({"status": "failure", "stage": "input", "violation": {"error": e.to_string()}}),
            GlobalizeError::Failed { stage, violation } => {
                json!({"status": "failure", "stage": stage, "violation": violation})
            }
        }
    }
}

impl fmt::Display for GlobalizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalizeError::Input(e) => write!(f, "{e}"),
            GlobalizeError::Failed { stage, violation } => write!(f, "failed at {stage}: {violation}"),
        }
    }
}

impl From<Error> for GlobalizeError {
    fn from(e: Error) -> Self {
        GlobalizeError::Input(e)
    }
}

type Globalized<T> = std::result::Result<T, GlobalizeError>;

fn failed(stage: impl Into<String>, violation: Value) -> GlobalizeError {
    GlobalizeError::Failed { stage: stage.into(), violation }
}

fn require_full(f: &AdditiveMap) -> Globalized<()> {
    if f.carrier() != Carrier::Full {
        return Err(Error::CarrierMismatch("globalize needs the full matrix algebra".into()).into());
    }
    Ok(())
}

/// 1-based `[i, j]` for reports.
fn unit_label((i, j): (usize, usize)) -> Value {
    json!([i + 1, j + 1])
}

fn unit(f: &AdditiveMap, i: usize, j: usize) -> Matrix {
    Matrix::unit(f.ring(), f.n(), i, j).unwrap()
}

/// Joint witness for the given units, or a failure naming them.
fn solve_units(f: &AdditiveMap, units: &[(usize, usize)], stage: &str) -> Globalized<Matrix> {
    let constraints: Vec<(Matrix, Matrix)> = units
        .iter()
        .map(|&(i, j)| {
            let x = unit(f, i, j);
            let y = f.apply_unchecked(&x);
            (x, y)
        })
        .collect();
    let sys = WitnessSystem::new(constraints)?;
    joint_solve(&sys).particular_matrix(f.ring(), f.n()).ok_or_else(|| {
        failed(
            stage,
            json!({
                "reason": "no common implementer",
                "units": units.iter().copied().map(unit_label).collect::<Vec<_>>(),
            }),
        )
    })
}

/// Joint solve over every module basis element (every unit, and over
/// `GF(p^k)` its field-basis multiples). Returns the canonical implementer.
pub fn globalize_direct(f: &AdditiveMap) -> Globalized<Matrix> {
    require_full(f)?;
    let constraints: Vec<(Matrix, Matrix)> = module_basis(f.ring(), f.n(), Carrier::Full)
        .into_iter()
        .map(|x| {
            let y = f.apply_unchecked(&x);
            (x, y)
        })
        .collect();
    let sys = WitnessSystem::new(constraints)?;
    let a = joint_solve(&sys)
        .particular_matrix(f.ring(), f.n())
        .ok_or_else(|| failed("direct", json!({"reason": "unit constraints are jointly unsolvable"})))?;
    Ok(canonicalize(&a))
}

/// Progress of the superdiagonal induction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StitchState {
    /// `current` agrees with `f` on `e_{i,i+1}` for `1 <= i <= k`.
    pub k: usize,
    pub current: Matrix,
    /// Joint witnesses of adjacent superdiagonal units, keyed by the 1-based
    /// index of the lower unit.
    pub pair_witnesses: BTreeMap<usize, Matrix>,
}

impl StitchState {
    /// First superdiagonal unit (0-based position) where the invariant breaks.
    fn first_violation(&self, f: &AdditiveMap) -> Option<(usize, Matrix, Matrix)> {
        (0..self.k).find_map(|i| {
            let x = unit(f, i, i + 1);
            let want = f.apply_unchecked(&x);
            let got = inner_apply(&self.current, &x).unwrap();
            (want != got).then_some((i, want, got))
        })
    }
}

fn check_invariant(f: &AdditiveMap, state: &StitchState, stage: &str) -> Globalized<()> {
    match state.first_violation(f) {
        None => Ok(()),
        Some((i, want, got)) => Err(failed(
            stage,
            json!({"unit": unit_label((i, i + 1)), "expected": want.to_json(), "got": got.to_json()}),
        )),
    }
}

/// One induction step: `a` agrees with `f` on `e_{i,i+1}` for `i < k`
/// (0-based), `c` agrees on `e_{k-1,k}` and `e_{k,k+1}`. The result agrees
/// on all of them.
fn patch(a: &Matrix, c: &Matrix, k: usize) -> Matrix {
    let ring = a.ring();
    let n = a.n();
    let mut b = a.clone();
    for r in 0..n {
        if r != k {
            b.set(r, k, c.at(r, k).clone());
        }
    }
    for i in k + 1..n {
        for j in k + 1..n {
            b.set(i, j, c.at(i, j).clone());
        }
    }
    // Keep b^{k,k} - b^{k+1,k+1} as in c, with b^{k,k} inherited from a.
    let d = ring.add(&ring.sub(c.at(k + 1, k + 1), c.at(k, k)), b.at(k, k));
    b.set(k + 1, k + 1, d);
    // Diagonal entries beyond k+1 keep the same offset from b^{k+1,k+1} as in c.
    let shift = ring.sub(b.at(k + 1, k + 1), c.at(k + 1, k + 1));
    for i in k + 2..n {
        b.set(i, i, ring.add(c.at(i, i), &shift));
    }
    b
}

/// The stitching construction, recording every induction state.
pub fn globalize_stitch_traced(f: &AdditiveMap) -> (Vec<StitchState>, Globalized<Matrix>) {
    let mut states = Vec::new();
    let result = stitch(f, &mut states);
    (states, result)
}

pub fn globalize_stitch(f: &AdditiveMap) -> Globalized<Matrix> {
    stitch(f, &mut Vec::new())
}

fn stitch(f: &AdditiveMap, states: &mut Vec<StitchState>) -> Globalized<Matrix> {
    require_full(f)?;
    let n = f.n();
    let ring = f.ring();
    let mut b = Matrix::zeros(ring, n, n);
    if n >= 2 {
        let base: Vec<(usize, usize)> = (0..(n - 1).min(2)).map(|i| (i, i + 1)).collect();
        let a = solve_units(f, &base, "stitch:base")?;
        let mut state = StitchState { k: base.len(), current: a, pair_witnesses: BTreeMap::new() };
        check_invariant(f, &state, "stitch:base")?;
        states.push(state.clone());
        for k in 2..n - 1 {
            let stage = format!("stitch:k={}", k + 1);
            let c = solve_units(f, &[(k - 1, k), (k, k + 1)], &stage)?;
            state.current = patch(&state.current, &c, k);
            state.pair_witnesses.insert(k, c);
            state.k = k + 1;
            check_invariant(f, &state, &stage)?;
            states.push(state.clone());
        }
        b = state.current;
        // Every superdiagonal constraint leaves b^{1,n} free; e_{n,1} pins it.
        let d = solve_units(f, &[(n - 1, 0)], "stitch:corner")?;
        b.set(0, n - 1, d.at(0, n - 1).clone());
    }
    verify_units(f, &b)?;
    Ok(canonicalize(&b))
}

/// Checks `[b, x] = f(x)` on every module basis element.
fn verify_units(f: &AdditiveMap, b: &Matrix) -> Globalized<()> {
    let n = f.n();
    let scalars = f.ring().prime_basis();
    for i in 0..n {
        for j in 0..n {
            for (t, w) in scalars.iter().enumerate() {
                let x = unit(f, i, j).scale(w);
                let want = f.apply_unchecked(&x);
                let got = inner_apply(b, &x).unwrap();
                if want != got {
                    let mut v = json!({"unit": unit_label((i, j)), "expected": want.to_json(), "got": got.to_json()});
                    if scalars.len() > 1 {
                        v["scale"] = f.ring().format_scalar(&scalars[t]);
                    }
                    return Err(failed("verify", v));
                }
            }
        }
    }
    Ok(())
}

/// Outcome of [`reconstruct_and_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub implementer: Matrix,
    pub paths_agree: bool,
    pub points_verified: usize,
}

impl Reconstruction {
    pub fn to_json(&self) -> Value {
        json!({
            "status": "success",
            "implementer": self.implementer.to_json(),
            "paths_agree": self.paths_agree,
            "points_verified": self.points_verified,
        })
    }
}

/// Runs both routes, requires them to agree up to the center, checks the
/// implementer on every point of `pts`, and checks the Leibniz rule.
pub fn reconstruct_and_verify(f: &AdditiveMap, pts: &PointSet) -> Globalized<Reconstruction> {
    let direct = globalize_direct(f)?;
    let stitched = globalize_stitch(f)?;
    if !inner_equal(&direct, &stitched)? {
        return Err(failed(
            "consistency",
            json!({"direct": direct.to_json(), "stitch": stitched.to_json()}),
        ));
    }
    let points = pts.resolve(f.ring(), f.n(), Carrier::Full)?;
    let bad = (0..points.len()).into_par_iter().find_first(|&i| {
        let x = points.get(i);
        f.apply_unchecked(&x) != inner_apply(&direct, &x).unwrap()
    });
    if let Some(i) = bad {
        let x = points.get(i);
        return Err(failed(
            "points",
            json!({"point": x.to_json(), "expected": f.apply_unchecked(&x).to_json(),
                   "got": inner_apply(&direct, &x).unwrap().to_json()}),
        ));
    }
    if !is_derivation(f) {
        return Err(failed("derivation", json!({"reason": "Leibniz rule fails on a basis pair"})));
    }
    Ok(Reconstruction { implementer: direct, paths_agree: true, points_verified: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localcheck::{check_local_inner, gen_basis_patched, map_from_basis_images, map_from_inner, random_basis_patched};
    use crate::scalars::Ring;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(ring: &Ring, n: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(ring, n, i, j).unwrap()
    }

    fn reject_example() -> AdditiveMap {
        let q = Ring::rationals();
        let z = Matrix::zeros(&q, 2, 2);
        map_from_basis_images(&q, 2, &[z.clone(), e(&q, 2, 0, 1), e(&q, 2, 1, 0), z]).unwrap()
    }

    fn random(ring: &Ring, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(ring, n, n, |_, _| ring.random_bounded(rng, 9))
    }

    #[test]
    fn direct_examples() {
        let f5 = Ring::prime_field(5).unwrap();
        let e12 = e(&f5, 2, 0, 1);
        assert_eq!(globalize_direct(&map_from_inner(&e12)).unwrap(), e12);
        let a = Matrix::from_i64(&f5, &[&[2, 1], &[0, 3]]);
        assert_eq!(globalize_direct(&map_from_inner(&a)).unwrap(), Matrix::from_i64(&f5, &[&[0, 1], &[0, 1]]));
        let err = globalize_direct(&reject_example()).unwrap_err();
        assert_eq!(err.stage(), "direct");
    }

    #[test]
    fn stitch_rejects_patched_example_on_e21() {
        let err = globalize_stitch(&reject_example()).unwrap_err();
        assert_eq!(err.stage(), "verify");
        match err {
            GlobalizeError::Failed { violation, .. } => assert_eq!(violation["unit"], json!([2, 1])),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stitch_round_trip_gf3_n4() {
        let f3 = Ring::prime_field(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = random(&f3, 4, &mut rng);
            let f = map_from_inner(&a);
            let (states, got) = globalize_stitch_traced(&f);
            let got = got.unwrap();
            assert!(inner_equal(&got, &a).unwrap());
            assert_eq!(states.len(), 2);
            for s in &states {
                assert!(s.first_violation(&f).is_none());
            }
            assert!(inner_equal(&globalize_direct(&f).unwrap(), &got).unwrap());
        }
    }

    #[test]
    fn both_paths_round_trip_every_ring() {
        let rings = [
            Ring::prime_field(2).unwrap(),
            Ring::prime_field(7).unwrap(),
            Ring::rationals(),
            Ring::integers(),
            Ring::integers_mod(4).unwrap(),
            Ring::integers_mod(6).unwrap(),
            Ring::extension_field(2, 2).unwrap(),
            Ring::extension_field(3, 2).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for ring in &rings {
            for n in 1..=4 {
                for _ in 0..5 {
                    let a = random(ring, n, &mut rng);
                    let f = map_from_inner(&a);
                    let d = globalize_direct(&f).unwrap();
                    let s = globalize_stitch(&f).unwrap();
                    assert!(inner_equal(&d, &a).unwrap(), "{} n={n}", ring.name());
                    assert_eq!(d, s, "{} n={n}", ring.name());
                }
            }
        }
    }

    #[test]
    fn corner_entry_is_needed() {
        // a = e_{1,n} is invisible to every superdiagonal unit.
        let q = Ring::rationals();
        for n in 2..=4 {
            let a = e(&q, n, 0, n - 1);
            let f = map_from_inner(&a);
            let (states, got) = globalize_stitch_traced(&f);
            assert!(states.last().unwrap().current.at(0, n - 1) == &q.zero());
            assert_eq!(got.unwrap(), a);
        }
    }

    #[test]
    fn n1_only_zero_map() {
        let q = Ring::rationals();
        let zero = AdditiveMap::zero(&q, 1, Carrier::Full);
        assert!(globalize_direct(&zero).unwrap().is_zero());
        assert!(globalize_stitch(&zero).unwrap().is_zero());
        let id = AdditiveMap::identity(&q, 1, Carrier::Full);
        assert!(globalize_direct(&id).is_err());
        assert_eq!(globalize_stitch(&id).unwrap_err().stage(), "verify");
    }

    #[test]
    fn reconstruct_examples() {
        let f2 = Ring::prime_field(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(&f2, 2, &mut rng);
        let r = reconstruct_and_verify(&map_from_inner(&a), &PointSet::exhaustive()).unwrap();
        assert_eq!(r.implementer, canonicalize(&a));
        assert_eq!(r.points_verified, 16);
        let r = reconstruct_and_verify(&AdditiveMap::zero(&f2, 3, Carrier::Full), &PointSet::sampled(20, 0)).unwrap();
        assert!(r.implementer.is_zero());
        let z4 = Ring::integers_mod(4).unwrap();
        let a = Matrix::from_i64(&z4, &[&[0, 1], &[2, 3]]);
        let r = reconstruct_and_verify(&map_from_inner(&a), &PointSet::exhaustive()).unwrap();
        assert_eq!(r.implementer, a);
        assert_eq!(r.to_json()["status"], "success");
        assert_eq!(reconstruct_and_verify(&reject_example(), &PointSet::sampled(5, 0)).unwrap_err().stage(), "direct");
    }

    #[test]
    fn accepted_patched_maps_globalize() {
        for (ring, seeds) in [(Ring::prime_field(2).unwrap(), 0..60u64), (Ring::prime_field(3).unwrap(), 0..60)] {
            for seed in seeds {
                let f = random_basis_patched(&ring, 2, seed);
                let accepted = check_local_inner(&f, &PointSet::exhaustive()).unwrap().is_accept();
                let direct = globalize_direct(&f);
                let stitched = globalize_stitch(&f);
                assert_eq!(accepted, direct.is_ok());
                assert_eq!(accepted, stitched.is_ok());
                if accepted {
                    assert_eq!(map_from_inner(&direct.unwrap()), f);
                }
            }
        }
    }

    #[test]
    fn non_homogeneous_map_fails_on_scaled_unit() {
        let f4 = Ring::extension_field(2, 2).unwrap();
        let a = e(&f4, 2, 0, 1);
        let inner = map_from_inner(&a);
        // Frobenius after an inner derivation: agrees on units, not on w*units.
        let twisted = AdditiveMap::from_fn(&f4, 2, Carrier::Full, |x| {
            inner.apply(x).unwrap().map(|v| f4.mul(v, v))
        });
        assert_eq!(globalize_direct(&twisted).unwrap_err().stage(), "direct");
        let err = globalize_stitch(&twisted).unwrap_err();
        assert_eq!(err.stage(), "verify");
        let implementers = vec![a.clone(); 4];
        assert_eq!(gen_basis_patched(&f4, 2, &implementers).unwrap(), inner);
    }
}
