//! Multi-start gradient ascent over measurement settings.
//!
//! Directions are pinned to the unit sphere through spherical angles: the
//! Bell averages are linear in each direction vector, so on the ball
//! ‖v‖ <= 1 the maximum of the (convex) squared objective sits on the
//! boundary and optimizing angles loses nothing. Each qubit carries four
//! parameters (θ, φ) and (θ', φ'); the objective gradient is assembled
//! analytically from per-qubit Pauli expectations and chained through the
//! spherical map. Restarts are independent, seeded from (seed, restart
//! index), and reduced in index order so parallel and serial runs agree to
//! the last bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mk::{build_mk, evaluate_ensemble, TermMap};
use crate::runner;
use crate::state::{
    apply_direction, inner, pauli_inner, Direction, QubitSettings, Settings, State,
};

/// Optimization is offered up to this width; beyond it a single evaluation
/// is already too slow to iterate on.
pub const MAX_OPT_QUBITS: usize = 12;

/// How the ascent obtains its gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GradientMode {
    /// Exact per-direction gradients from Pauli expectations.
    Analytic,
    /// Central finite differences, step 1e-6. Cross-check mode.
    CentralDifference,
}

/// Knobs for [`maximize`] and [`maximize_linear`].
#[derive(Debug, Clone, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Ascent stops once the accepted step norm falls below this.
    pub step_tolerance: f64,
    /// Ascent stops after five successive improvements smaller than this.
    pub value_tolerance: f64,
    pub seed: u64,
    pub gradient: GradientMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 32,
            max_iterations: 2000,
            step_tolerance: 1e-10,
            value_tolerance: 1e-9,
            seed: 0,
            gradient: GradientMode::Analytic,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(Error::invalid("restarts and max_iterations must be positive"));
        }
        if self.step_tolerance <= 0.0 || self.value_tolerance <= 0.0 {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Spherical parameterization of settings: per qubit, in order,
/// (θ, φ, θ', φ').
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleParam {
    angles: Vec<f64>,
}

impl AngleParam {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() || !angles.len().is_multiple_of(4) {
            return Err(Error::invalid(format!(
                "angle vector length {} is not a positive multiple of 4",
                angles.len()
            )));
        }
        Ok(AngleParam { angles })
    }

    pub fn n(&self) -> usize {
        self.angles.len() / 4
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

/// Unit-norm settings from spherical angles.
pub fn angles_to_settings(params: &AngleParam) -> Settings {
    settings_from_angles(&params.angles)
}

fn settings_from_angles(angles: &[f64]) -> Settings {
    let qubits = angles
        .chunks_exact(4)
        .map(|q| QubitSettings {
            unprimed: Direction::from_polar(q[0], q[1]),
            primed: Direction::from_polar(q[2], q[3]),
        })
        .collect();
    Settings::new(qubits).expect("chunks_exact(4) is nonempty")
}

/// Outcome of a full multi-start run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizerResult {
    pub best_value: f64,
    pub best_settings: Settings,
    /// Restarts that hit a convergence criterion before the iteration cap.
    pub restarts_converged: usize,
    /// Final value of each restart, in restart order.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    /// ⟨F⟩² + ⟨F'⟩².
    Quadratic,
    /// |⟨F⟩|.
    LinearAbs,
}

/// Value of ⟨map⟩ plus its gradient with respect to every direction vector,
/// routed per prime pattern to the unprimed or primed slot of each qubit.
struct MapGradient {
    value: f64,
    unprimed: Vec<[f64; 3]>,
    primed: Vec<[f64; 3]>,
}

/// Reusable buffers for the gradient sweep.
struct Workspace {
    prefix: Vec<Vec<num_complex::Complex64>>,
    suffix: Vec<Vec<num_complex::Complex64>>,
    /// Per-term, per-factor expectation values (term-major).
    factor_values: Vec<f64>,
    /// Per-term, per-qubit raw direction gradients (term-major).
    raw_grads: Vec<[f64; 3]>,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            prefix: Vec::new(),
            suffix: Vec::new(),
            factor_values: Vec::new(),
            raw_grads: Vec::new(),
        }
    }
}

/// Value and per-direction gradient of one term map on one state.
///
/// For each (term, factor) pair a prefix/suffix sweep over the factor's
/// qubits yields the factor expectation and, through [`pauli_inner`], the
/// derivative with respect to each local direction in one pass. The
/// derivative across factors is the exclusion product of the other factor
/// expectations.
fn eval_with_grad(
    map: &TermMap,
    settings: &Settings,
    state: &State,
    ws: &mut Workspace,
) -> MapGradient {
    let n = map.n();
    let term_count = map.len();
    let mut out = MapGradient {
        value: 0.0,
        unprimed: vec![[0.0; 3]; n],
        primed: vec![[0.0; 3]; n],
    };

    for (weight, factors) in state.ensemble() {
        let block_count = factors.len();
        ws.factor_values.clear();
        ws.factor_values.resize(term_count * block_count, 1.0);
        ws.raw_grads.clear();
        ws.raw_grads.resize(term_count * n, [0.0; 3]);

        let mut offset = 0;
        for (b, factor) in factors.iter().enumerate() {
            let k = factor.n();
            let dim = factor.amplitudes().len();
            if ws.prefix.len() < k {
                ws.prefix.resize_with(k, Vec::new);
            }
            if ws.suffix.len() < k + 1 {
                ws.suffix.resize_with(k + 1, Vec::new);
            }
            for (ti, (pattern, _)) in map.terms().enumerate() {
                // suffix[j] = (O_j ... O_{k-1}) ψ, built downward.
                ws.suffix[k].clear();
                ws.suffix[k].extend_from_slice(factor.amplitudes());
                for j in (0..k).rev() {
                    let global = offset + j;
                    let dir = settings.select(global, pattern & (1 << global) != 0);
                    let (head, tail) = ws.suffix.split_at_mut(j + 1);
                    let dst = &mut head[j];
                    dst.clear();
                    dst.extend_from_slice(&tail[0]);
                    apply_direction(dst, k, j, dir);
                }
                // prefix[j] = (O_0 ... O_{j-1}) ψ, built upward.
                ws.prefix[0].clear();
                ws.prefix[0].extend_from_slice(factor.amplitudes());
                for j in 1..k {
                    let global = offset + j - 1;
                    let dir = settings.select(global, pattern & (1 << global) != 0);
                    let (head, tail) = ws.prefix.split_at_mut(j);
                    let dst = &mut tail[0];
                    dst.clear();
                    dst.extend_from_slice(&head[j - 1]);
                    apply_direction(dst, k, j - 1, dir);
                }
                debug_assert_eq!(ws.suffix[0].len(), dim);
                ws.factor_values[ti * block_count + b] =
                    inner(factor.amplitudes(), &ws.suffix[0]).re;
                for j in 0..k {
                    ws.raw_grads[ti * n + offset + j] =
                        pauli_inner(&ws.prefix[j], &ws.suffix[j + 1], k, j);
                }
            }
            offset += k;
        }

        // Fold per-factor values into the total and scale raw gradients by
        // the exclusion products.
        for (ti, (pattern, coeff)) in map.terms().enumerate() {
            let values = &ws.factor_values[ti * block_count..(ti + 1) * block_count];
            let c = weight * coeff.to_f64();
            let product: f64 = values.iter().product();
            out.value += c * product;

            let mut offset = 0;
            let mut before = 1.0;
            for (b, factor) in factors.iter().enumerate() {
                let after: f64 = values[b + 1..].iter().product();
                let exclusion = before * after;
                for j in 0..factor.n() {
                    let q = offset + j;
                    let raw = ws.raw_grads[ti * n + q];
                    let slot = if pattern & (1 << q) != 0 {
                        &mut out.primed[q]
                    } else {
                        &mut out.unprimed[q]
                    };
                    for c_idx in 0..3 {
                        slot[c_idx] += c * exclusion * raw[c_idx];
                    }
                }
                before *= values[b];
                offset += factor.n();
            }
        }
    }
    out
}

struct Engine<'a> {
    f_map: &'a TermMap,
    fp_map: &'a TermMap,
    state: &'a State,
    objective: Objective,
}

impl Engine<'_> {
    fn value(&self, angles: &[f64]) -> f64 {
        let settings = settings_from_angles(angles);
        let f = evaluate_ensemble(self.f_map, &settings, self.state)
            .expect("dimensions checked at entry");
        match self.objective {
            Objective::Quadratic => {
                let fp = evaluate_ensemble(self.fp_map, &settings, self.state)
                    .expect("dimensions checked at entry");
                f * f + fp * fp
            }
            Objective::LinearAbs => f.abs(),
        }
    }

    /// Analytic objective gradient in angle space, with the value.
    fn value_and_grad(&self, angles: &[f64], ws: &mut Workspace) -> (f64, Vec<f64>) {
        let settings = settings_from_angles(angles);
        let n = settings.n();
        let gf = eval_with_grad(self.f_map, &settings, self.state, ws);
        // d(objective)/d(direction vector) per qubit and prime slot.
        let (value, du, dp): (f64, Vec<[f64; 3]>, Vec<[f64; 3]>) = match self.objective {
            Objective::Quadratic => {
                let gfp = eval_with_grad(self.fp_map, &settings, self.state, ws);
                let value = gf.value * gf.value + gfp.value * gfp.value;
                let mut du = vec![[0.0; 3]; n];
                let mut dp = vec![[0.0; 3]; n];
                for q in 0..n {
                    for c in 0..3 {
                        du[q][c] = 2.0 * gf.value * gf.unprimed[q][c]
                            + 2.0 * gfp.value * gfp.unprimed[q][c];
                        dp[q][c] = 2.0 * gf.value * gf.primed[q][c]
                            + 2.0 * gfp.value * gfp.primed[q][c];
                    }
                }
                (value, du, dp)
            }
            Objective::LinearAbs => {
                let sign = if gf.value >= 0.0 { 1.0 } else { -1.0 };
                let scale = |g: Vec<[f64; 3]>| {
                    g.into_iter()
                        .map(|v| [sign * v[0], sign * v[1], sign * v[2]])
                        .collect::<Vec<_>>()
                };
                (gf.value.abs(), scale(gf.unprimed), scale(gf.primed))
            }
        };
        // Chain through the spherical map.
        let mut grad = vec![0.0; angles.len()];
        for q in 0..n {
            let a = &angles[q * 4..q * 4 + 4];
            let chain = |dv: &[f64; 3], theta: f64, phi: f64| -> (f64, f64) {
                let dtheta = dv[0] * theta.cos() * phi.cos() + dv[1] * theta.cos() * phi.sin()
                    - dv[2] * theta.sin();
                let dphi = -dv[0] * theta.sin() * phi.sin() + dv[1] * theta.sin() * phi.cos();
                (dtheta, dphi)
            };
            let (dt, df) = chain(&du[q], a[0], a[1]);
            let (dtp, dfp) = chain(&dp[q], a[2], a[3]);
            grad[q * 4] = dt;
            grad[q * 4 + 1] = df;
            grad[q * 4 + 2] = dtp;
            grad[q * 4 + 3] = dfp;
        }
        (value, grad)
    }

    /// Central finite differences, step 1e-6.
    fn value_and_grad_fd(&self, angles: &[f64]) -> (f64, Vec<f64>) {
        const H: f64 = 1e-6;
        let value = self.value(angles);
        let mut work = angles.to_vec();
        let mut grad = vec![0.0; angles.len()];
        for i in 0..angles.len() {
            let orig = work[i];
            work[i] = orig + H;
            let up = self.value(&work);
            work[i] = orig - H;
            let down = self.value(&work);
            work[i] = orig;
            grad[i] = (up - down) / (2.0 * H);
        }
        (value, grad)
    }

    fn gradient(&self, angles: &[f64], mode: GradientMode, ws: &mut Workspace) -> (f64, Vec<f64>) {
        match mode {
            GradientMode::Analytic => self.value_and_grad(angles, ws),
            GradientMode::CentralDifference => self.value_and_grad_fd(angles),
        }
    }
}

pub(crate) struct RestartOutcome {
    pub(crate) value: f64,
    pub(crate) angles: Vec<f64>,
    pub(crate) converged: bool,
    /// Accepted objective values, one per accepted iteration.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One ascent from random angles: Polak-Ribière conjugate directions with a
/// backtracking Armijo line search, step warm-started from the previous
/// acceptance. Plain steepest ascent zigzags on these landscapes and stalls
/// three digits short of the class bounds within the iteration budget; the
/// conjugate update fixes the conditioning while keeping the ascent
/// monotone and derivative-exact.
fn ascend(engine: &Engine<'_>, config: &OptimizerConfig, restart: usize) -> RestartOutcome {
    let n = engine.f_map.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let mut angles: Vec<f64> = (0..4 * n)
        .map(|i| {
            if i % 2 == 0 {
                rng.gen_range(0.0..std::f64::consts::PI)
            } else {
                rng.gen_range(0.0..std::f64::consts::TAU)
            }
        })
        .collect();

    let mut ws = Workspace::new();
    let (mut value, mut grad) = engine.gradient(&angles, config.gradient, &mut ws);
    let mut dir = grad.clone();
    let mut trace = vec![value];
    let mut step = 0.25;
    let mut small_streak = 0;
    let mut converged = false;

    for _ in 0..config.max_iterations {
        let gnorm_sq = dot(&grad, &grad);
        if gnorm_sq.sqrt() < 1e-14 {
            converged = true;
            break;
        }
        let mut slope = dot(&dir, &grad);
        if slope <= 0.0 {
            // Conjugate direction stopped being an ascent direction.
            dir.copy_from_slice(&grad);
            slope = gnorm_sq;
        }
        let dir_norm = dot(&dir, &dir).sqrt();

        let probe = |t: f64| -> (Vec<f64>, f64) {
            let candidate: Vec<f64> = angles
                .iter()
                .zip(&dir)
                .map(|(a, d)| a + t * d)
                .collect();
            let cval = engine.value(&candidate);
            (candidate, cval)
        };

        // Backtrack until the Armijo test holds, then expand while the
        // value keeps climbing; crude but enough line accuracy to keep the
        // conjugate directions useful in curved valleys.
        let mut t = step;
        let mut accepted = None;
        while t * dir_norm >= config.step_tolerance {
            let (candidate, cval) = probe(t);
            if cval > value + 1e-4 * t * slope {
                accepted = Some((candidate, cval, t));
                break;
            }
            t *= 0.5;
        }
        let Some((mut candidate, mut cval, mut t)) = accepted else {
            // Step norm collapsed below tolerance.
            converged = true;
            break;
        };
        for _ in 0..20 {
            let wider = 2.0 * t;
            let (next, nval) = probe(wider);
            if nval <= cval {
                break;
            }
            candidate = next;
            cval = nval;
            t = wider;
        }

        let delta = cval - value;
        angles = candidate;
        value = cval;
        trace.push(value);
        step = t;

        let (v_next, g_next) = engine.gradient(&angles, config.gradient, &mut ws);
        debug_assert!((v_next - value).abs() <= 1e-9 * (1.0 + value.abs()));
        // Polak-Ribière+ (the max(0,..) drops downhill memory) with a
        // Powell restart once successive gradients stop being orthogonal.
        let overlap = dot(&g_next, &grad);
        let beta = if overlap.abs() > 0.2 * dot(&g_next, &g_next) {
            0.0
        } else {
            ((dot(&g_next, &g_next) - overlap) / gnorm_sq).max(0.0)
        };
        for (d, g) in dir.iter_mut().zip(&g_next) {
            *d = g + beta * *d;
        }
        grad = g_next;

        if delta < config.value_tolerance {
            small_streak += 1;
            if small_streak >= 5 {
                converged = true;
                break;
            }
        } else {
            small_streak = 0;
        }
    }

    RestartOutcome {
        value,
        angles,
        converged,
        trace,
    }
}

fn run(state: &State, config: &OptimizerConfig, objective: Objective) -> Result<OptimizerResult> {
    config.validate()?;
    let n = state.n();
    if n > MAX_OPT_QUBITS {
        return Err(Error::capacity(format!(
            "optimizer handles up to {MAX_OPT_QUBITS} qubits, got {n}"
        )));
    }
    let (f_map, fp_map) = build_mk(n)?;
    let engine = Engine {
        f_map: &f_map,
        fp_map: &fp_map,
        state,
        objective,
    };

    let outcomes = runner::indexed_map(config.restarts, |r| ascend(&engine, config, r));

    let mut best = 0usize;
    for (i, outcome) in outcomes.iter().enumerate() {
        // Strict comparison keeps the first-found restart on ties.
        if outcome.value > outcomes[best].value {
            best = i;
        }
    }
    let restarts_converged = outcomes.iter().filter(|o| o.converged).count();
    let history = outcomes.iter().map(|o| o.value).collect();
    let best_settings = settings_from_angles(&outcomes[best].angles);
    Ok(OptimizerResult {
        best_value: outcomes[best].value,
        best_settings,
        restarts_converged,
        history,
    })
}

/// Maximizes the quadratic Bell value ⟨F⟩² + ⟨F'⟩² over settings.
pub fn maximize(state: &State, config: &OptimizerConfig) -> Result<OptimizerResult> {
    run(state, config, Objective::Quadratic)
}

/// Maximizes |⟨F⟩| over settings, the separability side of the test. By the
/// prime-complement symmetry the same maximum bounds |⟨F'⟩|.
pub fn maximize_linear(state: &State, config: &OptimizerConfig) -> Result<OptimizerResult> {
    run(state, config, Objective::LinearAbs)
}
