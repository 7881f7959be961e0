//! Seeded batch runs: generate maps, check and globalize each, aggregate.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::derivations::inner_equal;
use crate::error::{Error, Result};
use crate::globalize::reconstruct_and_verify;
use crate::jordan::{
    check_local_inner_jordan, gen_jordan_patched, globalize_jordan, map_from_skew, uses_doubled_product,
    SkewImplementer,
};
use crate::localcheck::{
    check_local_inner, exhaustive_size, gen_basis_patched, map_from_inner, AdditiveMap, Carrier, PointSet,
};
use crate::matrix::Matrix;
use crate::scalars::{Ring, RingSpec};

/// Entries of random implementers over `Z` and `Q` are drawn from `[-9, 9]`.
pub const RANDOM_ENTRY_BOUND: i64 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CampaignMode {
    Exhaustive,
    Sampled { count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    InnerRandom { count: usize },
    BasisPatchedRandom { count: usize },
    ExplicitFiles { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub ring: RingSpec,
    pub n: usize,
    #[serde(default = "default_algebra")]
    pub algebra: Carrier,
    pub mode: CampaignMode,
    pub seed: u64,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_algebra() -> Carrier {
    Carrier::Full
}

impl CampaignConfig {
    pub fn from_json(v: &Value) -> Result<CampaignConfig> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Config(e.to_string()))
    }

    fn point_set(&self, ring: &Ring) -> Result<PointSet> {
        match self.mode {
            CampaignMode::Exhaustive => {
                if exhaustive_size(ring, self.n, self.algebra).is_none() {
                    return Err(Error::Config(format!(
                        "exhaustive mode needs a finite ring within the point budget; {} with n = {} is not",
                        ring.name(),
                        self.n
                    )));
                }
                Ok(PointSet::exhaustive())
            }
            CampaignMode::Sampled { count } => Ok(PointSet::sampled(count, self.seed)),
        }
    }
}

/// A generated map together with where it came from.
struct Job {
    generator: &'static str,
    map: AdditiveMap,
    /// The implementer it was built from, for inner maps.
    source: Option<Matrix>,
    file: Option<PathBuf>,
}

fn random_matrix(ring: &Ring, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(ring, n, n, |_, _| ring.random_bounded(rng, RANDOM_ENTRY_BOUND))
}

/// Maps in generator order. Generator `g` draws from its own stream of the
/// campaign seed, so adding a generator never changes the others' maps.
fn generate(config: &CampaignConfig, ring: &Ring, base: &Path) -> Result<Vec<Job>> {
    let n = config.n;
    let mut jobs = Vec::new();
    for (g, generator) in config.generators.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(g as u64);
        match generator {
            Generator::InnerRandom { count } => {
                for _ in 0..*count {
                    let (map, source) = match config.algebra {
                        Carrier::Full => {
                            let a = random_matrix(ring, n, &mut rng);
                            (map_from_inner(&a), a)
                        }
                        Carrier::Jordan => {
                            let c = SkewImplementer::random(ring, n, &mut rng, RANDOM_ENTRY_BOUND);
                            (map_from_skew(&c), c.into_matrix())
                        }
                    };
                    jobs.push(Job { generator: "inner-random", map, source: Some(source), file: None });
                }
            }
            Generator::BasisPatchedRandom { count } => {
                for _ in 0..*count {
                    let map = match config.algebra {
                        Carrier::Full => {
                            let imps: Vec<Matrix> = (0..n * n).map(|_| random_matrix(ring, n, &mut rng)).collect();
                            gen_basis_patched(ring, n, &imps)?
                        }
                        Carrier::Jordan => {
                            let imps: Vec<SkewImplementer> = (0..Carrier::Jordan.basis_len(n))
                                .map(|_| SkewImplementer::random(ring, n, &mut rng, RANDOM_ENTRY_BOUND))
                                .collect();
                            gen_jordan_patched(ring, n, &imps)?
                        }
                    };
                    jobs.push(Job { generator: "basis-patched-random", map, source: None, file: None });
                }
            }
            Generator::ExplicitFiles { paths } => {
                for path in paths {
                    let full = base.join(path);
                    let text = std::fs::read_to_string(&full)
                        .map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
                    let v: Value = serde_json::from_str(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", full.display())))?;
                    let map = AdditiveMap::from_json(&v)?;
                    if map.ring() != ring || map.n() != n || map.carrier() != config.algebra {
                        return Err(Error::Config(format!(
                            "{} does not match the campaign ring, dimension and algebra",
                            full.display()
                        )));
                    }
                    jobs.push(Job { generator: "explicit-files", map, source: None, file: Some(path.clone()) });
                }
            }
        }
    }
    Ok(jobs)
}

fn run_job(job: &Job, pts: &PointSet) -> Result<(Value, f64)> {
    let start = Instant::now();
    let (verdict, globalized, implementer) = match job.map.carrier() {
        Carrier::Full => {
            let verdict = check_local_inner(&job.map, pts)?;
            match reconstruct_and_verify(&job.map, pts) {
                Ok(r) => (verdict, r.to_json(), Some(r.implementer)),
                Err(e) => (verdict, e.to_json(), None),
            }
        }
        Carrier::Jordan => {
            let verdict = check_local_inner_jordan(&job.map, pts)?;
            match globalize_jordan(&job.map) {
                Ok(c) => {
                    let g = json!({"status": "success", "implementer": c.matrix().to_json()});
                    (verdict, g, Some(c.into_matrix()))
                }
                Err(e) => (verdict, e.to_json(), None),
            }
        }
    };
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let mut v = json!({
        "generator": job.generator,
        "verdict": verdict.to_json(),
        "globalize": globalized,
        "basis_images": job.map.to_json()["basis_images"].take(),
    });
    if let Some(file) = &job.file {
        v["file"] = json!(file.display().to_string());
    }
    if let Some(source) = &job.source {
        let ok = match (&implementer, job.map.carrier()) {
            (Some(a), Carrier::Full) => inner_equal(a, source)?,
            (Some(c), Carrier::Jordan) => c == source,
            (None, _) => false,
        };
        v["round_trip"] = json!(ok);
    }
    Ok((v, elapsed))
}

/// Runs the campaign; relative `explicit-files` paths resolve against `base`.
///
/// The report is deterministic apart from the `timings` section.
pub fn run_campaign(config: &CampaignConfig, base: &Path) -> Result<Value> {
    let ring = Ring::new(&config.ring)?;
    if config.n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    let pts = config.point_set(&ring)?;
    let jobs = generate(config, &ring, base)?;
    let start = Instant::now();
    let results: Vec<(Value, f64)> = jobs.par_iter().map(|job| run_job(job, &pts)).collect::<Result<_>>()?;
    let total_ms = start.elapsed().as_secs_f64() * 1e3;

    let count = |pred: &dyn Fn(&Value) -> bool| results.iter().filter(|(v, _)| pred(v)).count();
    let accepted = count(&|v| v["verdict"]["outcome"] != "reject");
    let globalized = count(&|v| v["globalize"]["status"] == "success");
    let round_trips = count(&|v| v.get("round_trip").is_some());
    let round_trip_ok = count(&|v| v["round_trip"] == true);
    let mut maps = Vec::with_capacity(results.len());
    let mut per_map_ms = Vec::with_capacity(results.len());
    for (i, (mut v, ms)) in results.into_iter().enumerate() {
        v["index"] = json!(i);
        maps.push(v);
        per_map_ms.push(json!(ms));
    }
    let mut report = json!({
        "tool": "derivlab",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "config": serde_json::to_value(config)?,
        "ring": ring.name(),
        "maps": maps,
        "aggregate": {
            "total": per_map_ms.len(),
            "accepted": accepted,
            "rejected": per_map_ms.len() - accepted,
            "globalized": globalized,
            "round_trips": round_trips,
            "round_trip_ok": round_trip_ok,
        },
        "timings": {"total_ms": total_ms, "per_map_ms": per_map_ms},
    });
    if config.algebra == Carrier::Jordan && uses_doubled_product(&ring) {
        report["doubled_product"] = json!(true);
    }
    Ok(report)
}

/// The report with its `timings` section removed, for reproducibility checks.
pub fn without_timings(report: &Value) -> Value {
    let mut r = report.clone();
    if let Some(obj) = r.as_object_mut() {
        obj.remove("timings");
    }
    r
}
