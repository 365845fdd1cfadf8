//! From Bell values to class verdicts.
//!
//! A state of type (n_1,...,n_L) with entanglement index E satisfies
//! ⟨F⟩² + ⟨F'⟩² <= 2^(E+1), so an observed value above 2^(e+1) excludes
//! every class with index <= e. The report therefore carries a certified
//! lower bound on the index: the smallest E whose bound the value does not
//! violate. Separability has its own linear test, max(|⟨F⟩|, |⟨F'⟩|) <= 2.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mk::{build_mk, evaluate_ensemble};
use crate::optimizer::{maximize, maximize_linear, OptimizerConfig};
use crate::partition::{partitions_iter, Partition};
use crate::runner;
use crate::state::{
    canonical_block_state, random_pure_with, block_product, Settings, State,
};

/// Widest system accepted by the sampling surface.
pub const MAX_ACC_QUBITS: usize = 10;
/// Sample caps: random settings are cheap, optimized ones are not.
pub const MAX_RANDOM_SAMPLES: usize = 1_000_000;
pub const MAX_OPTIMIZED_SAMPLES: usize = 1_000;

/// The linear bound satisfied by every totally separable state.
pub const SEPARABLE_LINEAR_BOUND: f64 = 2.0;

/// Quadratic class bound 2^(E+1).
pub fn class_bound(e: usize) -> Result<f64> {
    if e < 2 {
        return Err(Error::invalid(format!(
            "entanglement index starts at 2, got {e}"
        )));
    }
    if e > 62 {
        return Err(Error::invalid(format!("index {e} out of range")));
    }
    Ok((2.0f64).powi(e as i32 + 1))
}

/// Radius of the class circle in the (⟨F⟩, ⟨F'⟩) plane: 2^((E+1)/2).
pub fn acc_radius(e: usize) -> Result<f64> {
    Ok(class_bound(e)?.sqrt())
}

/// One row of the bound hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub entanglement_index: usize,
    pub quadratic_bound: f64,
    pub acc_radius: f64,
}

/// The full bound hierarchy for n qubits: one circle per class plus the
/// separable linear bound. Rows are strictly increasing in the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub n: usize,
    pub linear_separable_bound: f64,
    pub rows: Vec<BoundRow>,
}

pub fn bound_table(n: usize) -> Result<BoundTable> {
    if n < 2 {
        return Err(Error::invalid(format!("bound table needs n >= 2, got {n}")));
    }
    let rows = (2..=n)
        .map(|e| {
            Ok(BoundRow {
                entanglement_index: e,
                quadratic_bound: class_bound(e)?,
                acc_radius: acc_radius(e)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundTable {
        n,
        linear_separable_bound: SEPARABLE_LINEAR_BOUND,
        rows,
    })
}

/// Smallest index E in 2..=n whose bound the value does not exceed. A value
/// above even the full-entanglement bound cannot come from an n-qubit state
/// and flags a numerical bug upstream.
pub fn witness_class(value: f64, n: usize, tol: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::invalid(format!("witness needs n >= 2, got {n}")));
    }
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(format!("Bell value {value} is not usable")));
    }
    for e in 2..=n {
        if value <= class_bound(e)? + tol {
            return Ok(e);
        }
    }
    Err(Error::InconsistentValue(format!(
        "quadratic value {value} exceeds the full-entanglement bound {} for n={n}",
        class_bound(n)?
    )))
}

/// The classification verdict for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub best_quadratic: f64,
    pub best_linear: f64,
    /// Smallest index consistent with the observed value: the state is
    /// provably not in any class below this.
    pub certified_e_at_least: usize,
    /// True when the linear bound 2 was violated.
    pub separable_excluded: bool,
    /// Settings achieving `best_quadratic` (or the supplied ones in
    /// evaluation-only mode).
    pub settings: Settings,
    /// Every partition whose entanglement index lies below the certified
    /// lower bound.
    pub partitions_excluded: Vec<Partition>,
}

fn assemble_report(
    n: usize,
    best_quadratic: f64,
    best_linear: f64,
    settings: Settings,
    tol: f64,
) -> Result<ClassificationReport> {
    let certified = witness_class(best_quadratic, n, tol)?;
    let partitions_excluded = partitions_iter(n)?
        .filter(|p| p.stats().entanglement_index < certified)
        .collect();
    Ok(ClassificationReport {
        n,
        best_quadratic,
        best_linear,
        certified_e_at_least: certified,
        separable_excluded: best_linear > SEPARABLE_LINEAR_BOUND + tol,
        settings,
        partitions_excluded,
    })
}

/// Optimizes both Bell objectives for the state and assembles the verdict.
pub fn classify(
    state: &State,
    config: &OptimizerConfig,
    tol: f64,
) -> Result<ClassificationReport> {
    let n = state.n();
    let quadratic = maximize(state, config)?;
    let linear = maximize_linear(state, config)?;
    assemble_report(
        n,
        quadratic.best_value,
        linear.best_value,
        quadratic.best_settings,
        tol,
    )
}

/// Evaluation-only verdict at fixed settings; nothing is optimized.
pub fn classify_at(state: &State, settings: &Settings, tol: f64) -> Result<ClassificationReport> {
    let n = state.n();
    let (f_map, fp_map) = build_mk(n)?;
    let f = evaluate_ensemble(&f_map, settings, state)?;
    let fp = evaluate_ensemble(&fp_map, settings, state)?;
    assemble_report(
        n,
        f * f + fp * fp,
        f.abs().max(fp.abs()),
        settings.clone(),
        tol,
    )
}

/// What family of states to sample for a diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeSpec {
    /// Fully product states, i.e. the (1,1,...,1) type.
    Separable,
    /// Haar-random pure states of the full width.
    Haar,
    /// Block products of Haar-random factors shaped by the partition, with
    /// the canonical GHZ/Bell-block state as sample zero.
    Partition(Partition),
}

impl TypeSpec {
    /// CLI grammar: `separable` | `haar` | comma-separated parts like `3,1`.
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "separable" => Ok(TypeSpec::Separable),
            "haar" => Ok(TypeSpec::Haar),
            other => Ok(TypeSpec::Partition(Partition::parse(other)?)),
        }
    }
}

impl fmt::Display for TypeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeSpec::Separable => write!(f, "separable"),
            TypeSpec::Haar => write!(f, "haar"),
            TypeSpec::Partition(p) => {
                let parts: Vec<String> = p.parts().iter().map(|k| k.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Whether diagram points use freshly random settings or optimized ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingsPolicy {
    Random,
    Optimized,
}

impl SettingsPolicy {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "random" => Ok(SettingsPolicy::Random),
            "optimized" => Ok(SettingsPolicy::Optimized),
            other => Err(Error::invalid(format!(
                "policy must be random or optimized, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for SettingsPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingsPolicy::Random => write!(f, "random"),
            SettingsPolicy::Optimized => write!(f, "optimized"),
        }
    }
}

/// One diagram point: the pair of MK averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccPoint {
    pub f: f64,
    pub fprime: f64,
}

impl AccPoint {
    pub fn radius(&self) -> f64 {
        (self.f * self.f + self.fprime * self.fprime).sqrt()
    }
}

/// Point cloud for one state family plus the bound overlay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccData {
    pub n: usize,
    pub type_label: String,
    pub policy: SettingsPolicy,
    pub points: Vec<AccPoint>,
    /// Class circle radii keyed by entanglement index.
    pub radii: BTreeMap<usize, f64>,
    pub linear_separable_bound: f64,
}

fn sample_state(spec: &TypeSpec, n: usize, index: usize, rng: &mut ChaCha8Rng) -> Result<State> {
    match spec {
        TypeSpec::Haar => Ok(State::Pure(random_pure_with(n, rng)?)),
        TypeSpec::Separable => {
            let p = Partition::new(vec![1; n])?;
            if index == 0 {
                return Ok(State::Product(canonical_block_state(&p)?));
            }
            let blocks = (0..n)
                .map(|_| random_pure_with(1, rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(State::Product(block_product(&p, blocks)?))
        }
        TypeSpec::Partition(p) => {
            if index == 0 {
                return Ok(State::Product(canonical_block_state(p)?));
            }
            let blocks = p
                .parts()
                .iter()
                .map(|&k| random_pure_with(k, rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(State::Product(block_product(p, blocks)?))
        }
    }
}

/// Samples (⟨F⟩, ⟨F'⟩) pairs for a state family. Deterministic per seed:
/// sample i draws from stream i, and under the optimized policy the
/// optimizer seed is derived from (seed, i).
pub fn acc_points(
    n: usize,
    spec: &TypeSpec,
    samples: usize,
    seed: u64,
    policy: SettingsPolicy,
    config: &OptimizerConfig,
) -> Result<AccData> {
    if !(2..=MAX_ACC_QUBITS).contains(&n) {
        return Err(Error::capacity(format!(
            "diagram sampling covers 2..={MAX_ACC_QUBITS} qubits, got {n}"
        )));
    }
    let cap = match policy {
        SettingsPolicy::Random => MAX_RANDOM_SAMPLES,
        SettingsPolicy::Optimized => MAX_OPTIMIZED_SAMPLES,
    };
    if samples == 0 || samples > cap {
        return Err(Error::invalid(format!(
            "sample count {samples} outside 1..={cap} for the {policy} policy"
        )));
    }
    if let TypeSpec::Partition(p) = spec {
        if p.n() != n {
            return Err(Error::invalid(format!(
                "partition {p} sums to {}, expected {n}",
                p.n()
            )));
        }
    }
    let (f_map, fp_map) = build_mk(n)?;

    let results = runner::indexed_map(samples, |i| -> Result<AccPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let state = sample_state(spec, n, i, &mut rng)?;
        let settings = match policy {
            SettingsPolicy::Random => Settings::random_unit(n, &mut rng),
            SettingsPolicy::Optimized => {
                let sample_config = OptimizerConfig {
                    seed: seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                    ..config.clone()
                };
                maximize(&state, &sample_config)?.best_settings
            }
        };
        let f = evaluate_ensemble(&f_map, &settings, &state)?;
        let fp = evaluate_ensemble(&fp_map, &settings, &state)?;
        Ok(AccPoint { f, fprime: fp })
    });
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;

    let table = bound_table(n)?;
    let radii = table
        .rows
        .iter()
        .map(|r| (r.entanglement_index, r.acc_radius))
        .collect();
    Ok(AccData {
        n,
        type_label: spec.to_string(),
        policy,
        points,
        radii,
        linear_separable_bound: SEPARABLE_LINEAR_BOUND,
    })
}
