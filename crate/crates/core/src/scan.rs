//! Total enumeration of the additive self-maps of `M_n(R)` or `H_n(R)` over
//! a small finite ring: classify every map and compare the local inner maps
//! with the maps induced by implementers.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::derivations::inner_equal;
use crate::error::{Error, Result};
use crate::globalize::{globalize_direct, globalize_stitch};
use crate::jordan::{
    globalize_jordan, jordan_is_derivation, map_from_skew, skew_positions, uses_doubled_product, SkewImplementer,
    SkewSystem,
};
use crate::localcheck::{
    first_failures, is_derivation, map_from_inner, AdditiveMap, Carrier, PointSet, EXHAUSTIVE_BUDGET,
};
use crate::derivations::SylvesterSystem;
use crate::matrix::Matrix;
use crate::scalars::{Ring, Scalar};

const MAP_CHUNK: u64 = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalInnerMap {
    pub index: u64,
    /// Canonical implementer (full algebra) or skew implementer (Jordan).
    pub implementer: Matrix,
    /// The implementer reproduces the map exactly.
    pub reconstructs: bool,
    pub is_derivation: bool,
    /// Direct and stitched reconstruction agree up to the center (full algebra only).
    pub paths_agree: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub ring: Ring,
    pub n: usize,
    pub carrier: Carrier,
    pub maps_scanned: u64,
    pub points_per_map: usize,
    pub local_inner: Vec<LocalInnerMap>,
    /// Distinct maps induced by some implementer (all of `M_n(R)`, or all
    /// skew matrices for `H_n(R)`).
    pub implemented: BTreeSet<u64>,
    pub derivations: u64,
}

impl ScanReport {
    pub fn local_inner_indices(&self) -> BTreeSet<u64> {
        self.local_inner.iter().map(|m| m.index).collect()
    }

    /// `{local inner} = {implemented}`, and every local inner map is
    /// reconstructed, passes the Leibniz test, and both routes agree.
    pub fn theorem_holds(&self) -> bool {
        self.local_inner_indices() == self.implemented
            && self.local_inner.iter().all(|m| m.reconstructs && m.is_derivation && m.paths_agree)
    }

    pub fn to_json(&self) -> Value {
        let implemented_key = match self.carrier {
            Carrier::Full => "inner",
            Carrier::Jordan => "skew_implemented",
        };
        let mut v = json!({
            "ring": self.ring.spec(),
            "n": self.n,
            "algebra": self.carrier.name(),
            "maps_scanned": self.maps_scanned,
            "points_per_map": self.points_per_map,
            "local_inner": self.local_inner.len(),
            implemented_key: self.implemented.len(),
            "derivations": self.derivations,
            "sets_equal": self.local_inner_indices() == self.implemented,
            "theorem_holds": self.theorem_holds(),
            "local_inner_maps": self.local_inner.iter().map(|m| json!({
                "index": m.index,
                "implementer": m.implementer.to_json(),
                "reconstructs": m.reconstructs,
                "is_derivation": m.is_derivation,
                "paths_agree": m.paths_agree,
            })).collect::<Vec<_>>(),
        });
        if self.carrier == Carrier::Jordan && uses_doubled_product(&self.ring) {
            v["doubled_product"] = json!(true);
        }
        v
    }
}

/// Every matrix (or skew matrix) over a finite ring, as implementers.
fn all_implementers(ring: &Ring, n: usize, carrier: Carrier) -> Result<Vec<Matrix>> {
    let card = ring.cardinality().ok_or_else(|| Error::InfiniteRing(ring.name()))?;
    let slots = match carrier {
        Carrier::Full => n * n,
        Carrier::Jordan => skew_positions(n).len(),
    };
    let total = (0..slots).try_fold(1u64, |acc, _| acc.checked_mul(card).filter(|&t| t <= EXHAUSTIVE_BUDGET));
    let total = total.ok_or_else(|| Error::BudgetExceeded(format!("implementers over {}", ring.name())))?;
    Ok((0..total)
        .map(|mut idx| {
            let digits: Vec<Scalar> = (0..slots)
                .map(|_| {
                    let v = ring.element(idx % card);
                    idx /= card;
                    v
                })
                .collect();
            match carrier {
                Carrier::Full => Matrix::from_vec(ring, n, &digits),
                Carrier::Jordan => SkewImplementer::from_upper(ring, n, &digits).into_matrix(),
            }
        })
        .collect())
}

fn classify(f: &AdditiveMap) -> LocalInnerMap {
    match f.carrier() {
        Carrier::Full => {
            let direct = globalize_direct(f);
            let stitched = globalize_stitch(f);
            let (implementer, reconstructs) = match &direct {
                Ok(a) => (a.clone(), &map_from_inner(a) == f),
                Err(_) => (Matrix::zeros(f.ring(), f.n(), f.n()), false),
            };
            let paths_agree = match (&direct, &stitched) {
                (Ok(a), Ok(b)) => inner_equal(a, b).unwrap(),
                _ => false,
            };
            LocalInnerMap { index: f.index(), implementer, reconstructs, is_derivation: is_derivation(f), paths_agree }
        }
        Carrier::Jordan => {
            let (implementer, reconstructs) = match globalize_jordan(f) {
                Ok(c) => (c.matrix().clone(), &map_from_skew(&c) == f),
                Err(_) => (Matrix::zeros(f.ring(), f.n(), f.n()), false),
            };
            LocalInnerMap {
                index: f.index(),
                implementer,
                reconstructs,
                is_derivation: jordan_is_derivation(f),
                paths_agree: true,
            }
        }
    }
}

/// Enumerates every prime-ring-linear self-map of the carrier (at most
/// [`EXHAUSTIVE_BUDGET`] of them) and classifies each one on the whole
/// (exhaustively enumerated) algebra.
pub fn exhaustive_scan(ring: &Ring, n: usize, carrier: Carrier) -> Result<ScanReport> {
    if !ring.is_finite() {
        return Err(Error::InfiniteRing(ring.name()));
    }
    let total = AdditiveMap::space_size(ring, n, carrier)
        .filter(|&t| t <= EXHAUSTIVE_BUDGET)
        .ok_or_else(|| {
            Error::BudgetExceeded(format!(
                "the {} map space over {} for n = {n} exceeds {EXHAUSTIVE_BUDGET} maps; use sampled checks",
                carrier.name(),
                ring.name()
            ))
        })?;
    let points = PointSet::exhaustive().resolve(ring, n, carrier)?;
    let chunks = total.div_ceil(MAP_CHUNK);
    let per_chunk: Vec<(Vec<LocalInnerMap>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let maps: Vec<AdditiveMap> = (chunk * MAP_CHUNK..((chunk + 1) * MAP_CHUNK).min(total))
                .map(|i| AdditiveMap::from_index(ring, n, carrier, i))
                .collect();
            let refs: Vec<&AdditiveMap> = maps.iter().collect();
            let fails = match carrier {
                Carrier::Full => first_failures(&refs, &points, SylvesterSystem::new),
                Carrier::Jordan => first_failures(&refs, &points, SkewSystem::new),
            };
            let derivations = maps
                .iter()
                .filter(|f| match carrier {
                    Carrier::Full => is_derivation(f),
                    Carrier::Jordan => jordan_is_derivation(f),
                })
                .count() as u64;
            let local: Vec<LocalInnerMap> =
                maps.iter().zip(fails).filter(|(_, fail)| fail.is_none()).map(|(f, _)| classify(f)).collect();
            (local, derivations)
        })
        .collect();
    let mut local_inner = Vec::new();
    let mut derivations = 0;
    for (local, d) in per_chunk {
        local_inner.extend(local);
        derivations += d;
    }
    let implemented: BTreeSet<u64> = all_implementers(ring, n, carrier)?
        .par_iter()
        .map(|a| match carrier {
            Carrier::Full => map_from_inner(a).index(),
            Carrier::Jordan => map_from_skew(&SkewImplementer::new(a.clone()).unwrap()).index(),
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    Ok(ScanReport {
        ring: ring.clone(),
        n,
        carrier,
        maps_scanned: total,
        points_per_map: points.len(),
        local_inner,
        implemented,
        derivations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_index_round_trip() {
        let f3 = Ring::prime_field(3).unwrap();
        for i in [0u64, 1, 2, 5, 19682] {
            assert_eq!(AdditiveMap::from_index(&f3, 2, Carrier::Jordan, i).index(), i);
        }
        assert_eq!(AdditiveMap::space_size(&f3, 2, Carrier::Jordan), Some(19683));
        assert_eq!(AdditiveMap::space_size(&Ring::prime_field(2).unwrap(), 2, Carrier::Full), Some(65536));
        assert_eq!(AdditiveMap::space_size(&Ring::extension_field(2, 2).unwrap(), 2, Carrier::Full), None);
    }

    #[test]
    fn small_scans() {
        // M_1(GF(3)): 3 maps, only the zero map is local inner.
        let f3 = Ring::prime_field(3).unwrap();
        let r = exhaustive_scan(&f3, 1, Carrier::Full).unwrap();
        assert_eq!(r.maps_scanned, 3);
        assert_eq!(r.local_inner.len(), 1);
        assert!(r.theorem_holds());
        // H_2(GF(2)): 2^9 maps; the checker runs without an invertible 2.
        let f2 = Ring::prime_field(2).unwrap();
        let r = exhaustive_scan(&f2, 2, Carrier::Jordan).unwrap();
        assert_eq!(r.maps_scanned, 512);
        assert_eq!(r.implemented.len(), 2);
        assert!(r.theorem_holds());
        assert_eq!(r.to_json()["doubled_product"], true);
    }

    #[test]
    fn scan_rejects_infinite_and_oversized() {
        assert!(matches!(exhaustive_scan(&Ring::rationals(), 2, Carrier::Full), Err(Error::InfiniteRing(_))));
        let f3 = Ring::prime_field(3).unwrap();
        assert!(matches!(exhaustive_scan(&f3, 2, Carrier::Full), Err(Error::BudgetExceeded(_))));
    }
}
