//! Dense statevector engine: pure states, block products, mixtures, and
//! expectation values of tensor products of direction observables v·σ.
//!
//! Conventions, fixed once: qubit 0 is the most significant bit of the basis
//! index, and a `Direction` is a real 3-vector of norm at most 1 acting as
//! the observable v·σ = [[z, x-iy], [x+iy, -z]].

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Hard cap on dense statevector width (2^14 amplitudes).
pub const MAX_QUBITS: usize = 14;

/// Norm slack accepted on directions and state normalization checks.
pub const NORM_TOL: f64 = 1e-12;

/// A measurement direction: real 3-vector with ‖v‖ <= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Direction {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let d = Direction { x, y, z };
        if !d.norm().is_finite() || d.norm() > 1.0 + NORM_TOL {
            return Err(Error::invalid(format!(
                "direction norm {} exceeds 1",
                d.norm()
            )));
        }
        Ok(d)
    }

    /// Unit vector from spherical angles: (sinθcosφ, sinθsinφ, cosθ).
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        Direction {
            x: theta.sin() * phi.cos(),
            y: theta.sin() * phi.sin(),
            z: theta.cos(),
        }
    }

    /// Unit vector in the xy-plane at angle `alpha`: (cos α, sin α, 0).
    pub fn in_plane(alpha: f64) -> Self {
        Direction {
            x: alpha.cos(),
            y: alpha.sin(),
            z: 0.0,
        }
    }

    pub fn x_axis() -> Self {
        Direction { x: 1.0, y: 0.0, z: 0.0 }
    }

    pub fn y_axis() -> Self {
        Direction { x: 0.0, y: 1.0, z: 0.0 }
    }

    pub fn z_axis() -> Self {
        Direction { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn zero() -> Self {
        Direction { x: 0.0, y: 0.0, z: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn scaled(&self, t: f64) -> Self {
        Direction {
            x: self.x * t,
            y: self.y * t,
            z: self.z * t,
        }
    }
}

/// The two measurement directions of one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSettings {
    pub unprimed: Direction,
    pub primed: Direction,
}

/// Per-qubit pairs of measurement directions for an n-qubit experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    qubits: Vec<QubitSettings>,
}

impl Settings {
    pub fn new(qubits: Vec<QubitSettings>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::invalid("settings need at least one qubit"));
        }
        Ok(Settings { qubits })
    }

    pub fn n(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, i: usize) -> &QubitSettings {
        &self.qubits[i]
    }

    pub fn qubits(&self) -> &[QubitSettings] {
        &self.qubits
    }

    /// The direction the pattern selects on qubit `i`: primed if the bit is
    /// set, unprimed otherwise.
    pub fn select(&self, i: usize, primed: bool) -> &Direction {
        if primed {
            &self.qubits[i].primed
        } else {
            &self.qubits[i].unprimed
        }
    }

    /// Settings with primed and unprimed directions swapped on every qubit.
    pub fn swapped(&self) -> Self {
        Settings {
            qubits: self
                .qubits
                .iter()
                .map(|q| QubitSettings {
                    unprimed: q.primed,
                    primed: q.unprimed,
                })
                .collect(),
        }
    }

    /// Uniformly random unit directions on every qubit, for sampling sweeps.
    pub fn random_unit<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        let mut draw = || {
            // Uniform on the sphere: z uniform in [-1,1], azimuth uniform.
            let z: f64 = Uniform::new_inclusive(-1.0, 1.0).sample(rng);
            let phi: f64 = Uniform::new(0.0, std::f64::consts::TAU).sample(rng);
            let r = (1.0 - z * z).max(0.0).sqrt();
            Direction {
                x: r * phi.cos(),
                y: r * phi.sin(),
                z,
            }
        };
        Settings {
            qubits: (0..n)
                .map(|_| QubitSettings {
                    unprimed: draw(),
                    primed: draw(),
                })
                .collect(),
        }
    }
}

/// Normalized pure state of `n` qubits as 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Expectation of ⊗(v·σ) over the listed qubits, identity elsewhere.
    pub fn expectation(&self, ops: &[(usize, Direction)]) -> Result<f64> {
        expectation(&State::Pure(self.clone()), ops)
    }
}

fn check_qubit_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Builds a normalized pure state from raw amplitudes.
pub fn make_pure(n: usize, amps: Vec<Complex64>) -> Result<PureState> {
    check_qubit_count(n)?;
    if amps.len() != 1 << n {
        return Err(Error::invalid(format!(
            "amplitude vector has length {}, expected {}",
            amps.len(),
            1usize << n
        )));
    }
    let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(norm_sq.is_finite() && norm_sq > 0.0) {
        return Err(Error::DegenerateState(
            "amplitude vector has zero norm".into(),
        ));
    }
    let scale = 1.0 / norm_sq.sqrt();
    let amps = amps.into_iter().map(|a| a * scale).collect();
    Ok(PureState { n, amps })
}

/// The basis state |index⟩ on n qubits.
pub fn basis(n: usize, index: usize) -> Result<PureState> {
    check_qubit_count(n)?;
    if index >= 1 << n {
        return Err(Error::invalid(format!(
            "basis index {index} out of range for {n} qubits"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[index] = Complex64::new(1.0, 0.0);
    Ok(PureState { n, amps })
}

/// (|0...0⟩ + |1...1⟩)/√2 on k >= 2 qubits.
pub fn ghz(k: usize) -> Result<PureState> {
    if k < 2 {
        return Err(Error::invalid(format!("ghz needs k >= 2, got {k}")));
    }
    check_qubit_count(k)?;
    let dim = 1usize << k;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[0] = w;
    amps[dim - 1] = w;
    Ok(PureState { n: k, amps })
}

/// The Bell state Φ+ = ghz(2).
pub fn bell_phi_plus() -> PureState {
    ghz(2).expect("2 qubits always valid")
}

/// Kronecker product of pure states; qubit indices concatenate left to
/// right, so the first factor holds the most significant bits.
pub fn tensor(states: &[PureState]) -> Result<PureState> {
    if states.is_empty() {
        return Err(Error::invalid("tensor of an empty list"));
    }
    let n: usize = states.iter().map(|s| s.n).sum();
    if n > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "tensor of {n} qubits exceeds the cap {MAX_QUBITS}"
        )));
    }
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for s in states {
        let mut next = Vec::with_capacity(amps.len() << s.n);
        for &a in &amps {
            for &b in &s.amps {
                next.push(a * b);
            }
        }
        amps = next;
    }
    Ok(PureState { n, amps })
}

/// Haar-random pure state on k qubits, deterministic per seed: i.i.d.
/// standard complex Gaussian amplitudes, normalized.
pub fn random_pure(k: usize, seed: u64) -> Result<PureState> {
    check_qubit_count(k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_with(k, &mut rng)
}

/// As [`random_pure`] but drawing from a caller-owned generator.
pub fn random_pure_with<R: rand::Rng>(k: usize, rng: &mut R) -> Result<PureState> {
    check_qubit_count(k)?;
    let amps: Vec<Complex64> = (0..1usize << k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        })
        .collect();
    make_pure(k, amps)
}

/// A pure state kept in factorized form: the tensor product of its factors,
/// in order. Evaluation can then work block by block on short vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    factors: Vec<PureState>,
}

impl ProductState {
    pub fn single(state: PureState) -> Self {
        ProductState {
            factors: vec![state],
        }
    }

    pub fn factors(&self) -> &[PureState] {
        &self.factors
    }

    pub fn n(&self) -> usize {
        self.factors.iter().map(|f| f.n()).sum()
    }

    /// Block sizes in order, as a partition-shaped list (not sorted).
    pub fn block_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.n()).collect()
    }

    /// Materializes the full 2^n statevector.
    pub fn flatten(&self) -> Result<PureState> {
        tensor(&self.factors)
    }
}

/// Assembles the product state for a partition: `blocks[i]` must span
/// exactly `p.parts()[i]` qubits. Block boundaries stay recorded so that
/// evaluation can use the per-block fast path.
pub fn block_product(p: &Partition, blocks: Vec<PureState>) -> Result<ProductState> {
    if blocks.len() != p.parts().len() {
        return Err(Error::invalid(format!(
            "partition {p} has {} parts but {} blocks were supplied",
            p.parts().len(),
            blocks.len()
        )));
    }
    for (i, (block, &part)) in blocks.iter().zip(p.parts()).enumerate() {
        if block.n() != part {
            return Err(Error::invalid(format!(
                "block {i} has {} qubits, partition part wants {part}",
                block.n()
            )));
        }
    }
    if p.n() > MAX_QUBITS {
        return Err(Error::capacity(format!(
            "product of {} qubits exceeds the cap {MAX_QUBITS}",
            p.n()
        )));
    }
    Ok(ProductState { factors: blocks })
}

/// The canonical bound-attaining state of a partition: a GHZ state on every
/// part of size >= 2 (Φ+ when the part is 2) and |0⟩ on singletons.
pub fn canonical_block_state(p: &Partition) -> Result<ProductState> {
    let blocks = p
        .parts()
        .iter()
        .map(|&k| if k >= 2 { ghz(k) } else { basis(1, 0) })
        .collect::<Result<Vec<_>>>()?;
    block_product(p, blocks)
}

/// Probability-weighted ensemble of product-form pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    n: usize,
    components: Vec<(f64, ProductState)>,
}

impl MixedState {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[(f64, ProductState)] {
        &self.components
    }
}

/// Mixes pure states with the given weights; weights are renormalized to
/// sum exactly to 1.
pub fn mix(components: Vec<(f64, PureState)>) -> Result<MixedState> {
    mix_products(
        components
            .into_iter()
            .map(|(w, s)| (w, ProductState::single(s)))
            .collect(),
    )
}

/// Mixes product-form states, keeping each component factorized.
pub fn mix_products(components: Vec<(f64, ProductState)>) -> Result<MixedState> {
    if components.is_empty() {
        return Err(Error::invalid("mixture needs at least one component"));
    }
    let n = components[0].1.n();
    let mut total = 0.0;
    for (w, s) in &components {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::invalid(format!("negative mixture weight {w}")));
        }
        if s.n() != n {
            return Err(Error::invalid(
                "mixture components must share the qubit count",
            ));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::invalid("mixture weights sum to zero"));
    }
    let components = components
        .into_iter()
        .map(|(w, s)| (w / total, s))
        .collect();
    Ok(MixedState { n, components })
}

/// Any state the evaluators accept: dense pure, factorized pure, or mixed.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Product(ProductState),
    Mixed(MixedState),
}

impl State {
    pub fn n(&self) -> usize {
        match self {
            State::Pure(s) => s.n(),
            State::Product(s) => s.n(),
            State::Mixed(s) => s.n(),
        }
    }

    /// Ensemble view: weighted factor lists covering all three variants.
    pub(crate) fn ensemble(&self) -> Vec<(f64, &[PureState])> {
        match self {
            State::Pure(s) => vec![(1.0, std::slice::from_ref(s))],
            State::Product(s) => vec![(1.0, s.factors())],
            State::Mixed(m) => m
                .components()
                .iter()
                .map(|(w, s)| (*w, s.factors()))
                .collect(),
        }
    }
}

impl From<PureState> for State {
    fn from(s: PureState) -> State {
        State::Pure(s)
    }
}

impl From<ProductState> for State {
    fn from(s: ProductState) -> State {
        State::Product(s)
    }
}

impl From<MixedState> for State {
    fn from(s: MixedState) -> State {
        State::Mixed(s)
    }
}

/// Applies v·σ on `qubit` to the amplitude vector in place. Qubit 0 is the
/// most significant bit, so the pair stride is 2^(n-1-qubit).
pub(crate) fn apply_direction(amps: &mut [Complex64], n: usize, qubit: usize, d: &Direction) {
    debug_assert!(qubit < n);
    debug_assert_eq!(amps.len(), 1 << n);
    let stride = 1usize << (n - 1 - qubit);
    let z = Complex64::new(d.z, 0.0);
    let xm = Complex64::new(d.x, -d.y); // row 0, col 1
    let xp = Complex64::new(d.x, d.y); // row 1, col 0
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = z * a0 + xm * a1;
            amps[i + stride] = xp * a0 - z * a1;
        }
        base += stride << 1;
    }
}

/// Re⟨bra|σ_c on `qubit`|ket⟩ for c = x, y, z in one pass.
pub(crate) fn pauli_inner(bra: &[Complex64], ket: &[Complex64], n: usize, qubit: usize) -> [f64; 3] {
    debug_assert_eq!(bra.len(), ket.len());
    let stride = 1usize << (n - 1 - qubit);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sz = 0.0;
    let mut base = 0;
    while base < bra.len() {
        for i in base..base + stride {
            let b0 = bra[i].conj();
            let b1 = bra[i + stride].conj();
            let k0 = ket[i];
            let k1 = ket[i + stride];
            // σ_x: |0⟩⟨1| + |1⟩⟨0|; σ_y: -i|0⟩⟨1| + i|1⟩⟨0|; σ_z: diag(1,-1).
            // Re⟨σ_y⟩ = Re(i(c10 - c01)) = Im(c01 - c10).
            let c01 = b0 * k1;
            let c10 = b1 * k0;
            sx += (c01 + c10).re;
            sy += (c01 - c10).im;
            sz += (b0 * k0 - b1 * k1).re;
        }
        base += stride << 1;
    }
    [sx, sy, sz]
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// ⟨⊗ v·σ⟩ on one dense factor for the listed local (qubit, direction)
/// pairs; identity on unlisted qubits.
fn factor_expectation(factor: &PureState, ops: &[(usize, Direction)], scratch: &mut Vec<Complex64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(&factor.amps);
    for (q, d) in ops {
        apply_direction(scratch, factor.n, *q, d);
    }
    let value = inner(&factor.amps, scratch);
    // Hermitian observable: the average is real up to rounding; clamp.
    debug_assert!(value.im.abs() <= 1e-10, "imaginary residue {}", value.im);
    value.re
}

/// Expectation of ⊗(v_i·σ_i) over the listed qubits (identity elsewhere)
/// for any state form. Duplicate or out-of-range qubit indices are
/// rejected.
pub fn expectation(state: &State, ops: &[(usize, Direction)]) -> Result<f64> {
    let n = state.n();
    let mut seen = 0u64;
    for (q, _) in ops {
        if *q >= n {
            return Err(Error::invalid(format!("qubit index {q} out of range")));
        }
        if seen & (1 << q) != 0 {
            return Err(Error::invalid(format!("duplicate qubit index {q}")));
        }
        seen |= 1 << q;
    }
    let mut total = 0.0;
    let mut scratch = Vec::new();
    let mut local: Vec<(usize, Direction)> = Vec::with_capacity(ops.len());
    for (weight, factors) in state.ensemble() {
        let mut value = 1.0;
        let mut offset = 0;
        for factor in factors {
            local.clear();
            local.extend(
                ops.iter()
                    .filter(|(q, _)| *q >= offset && *q < offset + factor.n())
                    .map(|(q, d)| (*q - offset, *d)),
            );
            if !local.is_empty() {
                value *= factor_expectation(factor, &local, &mut scratch);
            }
            offset += factor.n();
        }
        total += weight * value;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn make_pure_normalizes_and_validates() {
        let s = make_pure(1, vec![c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_close(s.amplitudes()[0].re, 1.0, 1e-15);
        let b = make_pure(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        for (got, want) in b.amplitudes().iter().zip(bell_phi_plus().amplitudes()) {
            assert_close(got.re, want.re, 1e-15);
            assert_close(got.im, want.im, 1e-15);
        }

        assert!(matches!(
            make_pure(2, vec![c(1.0, 0.0)]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_pure(1, vec![c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn ghz_amplitudes() {
        let g = ghz(3).unwrap();
        for (i, a) in g.amplitudes().iter().enumerate() {
            let want = if i == 0 || i == 7 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                0.0
            };
            assert_close(a.re, want, 1e-15);
            assert_close(a.im, 0.0, 1e-15);
        }
        assert!(ghz(1).is_err());
    }

    #[test]
    fn tensor_basis_and_norm() {
        let zero = basis(1, 0).unwrap();
        let one = basis(1, 1).unwrap();
        let s = tensor(&[zero, one]).unwrap();
        // |01⟩ with qubit 0 as MSB is index 1.
        assert_close(s.amplitudes()[1].re, 1.0, 1e-15);

        let t = tensor(&[bell_phi_plus(), bell_phi_plus()]).unwrap();
        assert_eq!(t.n(), 4);
        let norm: f64 = t.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert_close(norm, 1.0, 1e-12);
    }

    #[test]
    fn eigenstate_expectation() {
        let zero = basis(1, 0).unwrap();
        let v = zero.expectation(&[(0, Direction::z_axis())]).unwrap();
        assert_close(v, 1.0, 1e-15);
        let one = basis(1, 1).unwrap();
        let v = one.expectation(&[(0, Direction::z_axis())]).unwrap();
        assert_close(v, -1.0, 1e-15);
    }

    #[test]
    fn bell_correlations() {
        let phi = bell_phi_plus();
        let xx = phi
            .expectation(&[(0, Direction::x_axis()), (1, Direction::x_axis())])
            .unwrap();
        let yy = phi
            .expectation(&[(0, Direction::y_axis()), (1, Direction::y_axis())])
            .unwrap();
        assert_close(xx, 1.0, 1e-12);
        assert_close(yy, -1.0, 1e-12);
    }

    #[test]
    fn ghz_in_plane_cosine_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 2..=8 {
            let g = ghz(k).unwrap();
            for _ in 0..8 {
                let alphas: Vec<f64> = (0..k)
                    .map(|_| Uniform::new(-PI, PI).sample(&mut rng))
                    .collect();
                let ops: Vec<(usize, Direction)> = alphas
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (i, Direction::in_plane(a)))
                    .collect();
                let got = g.expectation(&ops).unwrap();
                let want = alphas.iter().sum::<f64>().cos();
                assert_close(got, want, 1e-10);
            }
        }
        // ghz(3) along y on every qubit: cos(3π/2) = 0.
        let g = ghz(3).unwrap();
        let v = g
            .expectation(&[
                (0, Direction::y_axis()),
                (1, Direction::y_axis()),
                (2, Direction::y_axis()),
            ])
            .unwrap();
        assert_close(v, 0.0, 1e-12);
    }

    #[test]
    fn expectation_scales_linearly_in_direction() {
        let s = random_pure(3, 5).unwrap();
        let d = Direction::from_polar(0.7, 2.1);
        let full = s.expectation(&[(1, d)]).unwrap();
        let half = s.expectation(&[(1, d.scaled(0.5))]).unwrap();
        assert_close(half, 0.5 * full, 1e-12);
    }

    #[test]
    fn product_state_expectation_factorizes() {
        let a = random_pure(2, 40).unwrap();
        let b = random_pure(1, 41).unwrap();
        let joined = tensor(&[a.clone(), b.clone()]).unwrap();
        let d0 = Direction::from_polar(1.0, 0.3);
        let d1 = Direction::from_polar(2.0, -0.4);
        let d2 = Direction::from_polar(0.4, 1.8);
        let joint = joined
            .expectation(&[(0, d0), (1, d1), (2, d2)])
            .unwrap();
        let split = a.expectation(&[(0, d0), (1, d1)]).unwrap()
            * b.expectation(&[(0, d2)]).unwrap();
        assert_close(joint, split, 1e-12);

        // The factorized form computes the same number without flattening.
        let p = block_product(
            &Partition::new(vec![2, 1]).unwrap(),
            vec![a, b],
        )
        .unwrap();
        let fast = expectation(&State::Product(p), &[(0, d0), (1, d1), (2, d2)]).unwrap();
        assert_close(fast, joint, 1e-12);
    }

    #[test]
    fn expectation_rejects_bad_indices() {
        let s = random_pure(2, 1).unwrap();
        let d = Direction::z_axis();
        assert!(s.expectation(&[(0, d), (0, d)]).is_err());
        assert!(s.expectation(&[(2, d)]).is_err());
    }

    #[test]
    fn mixture_expectation_is_convex() {
        let s1 = random_pure(2, 21).unwrap();
        let s2 = random_pure(2, 22).unwrap();
        let ops = [(0, Direction::x_axis()), (1, Direction::from_polar(1.1, 0.2))];
        let e1 = s1.expectation(&ops).unwrap();
        let e2 = s2.expectation(&ops).unwrap();

        let m = mix(vec![(0.5, s1.clone()), (0.5, s2.clone())]).unwrap();
        let got = expectation(&State::Mixed(m), &ops).unwrap();
        assert_close(got, 0.5 * e1 + 0.5 * e2, 1e-12);

        // Singleton and degenerate mixtures collapse to the pure value.
        let single = mix(vec![(1.0, s1.clone())]).unwrap();
        assert_close(expectation(&State::Mixed(single), &ops).unwrap(), e1, 1e-12);
        let degenerate = mix(vec![(0.3, s1.clone()), (0.7, s1.clone())]).unwrap();
        assert_close(
            expectation(&State::Mixed(degenerate), &ops).unwrap(),
            e1,
            1e-12,
        );
    }

    #[test]
    fn mix_validates_weights() {
        let s = basis(1, 0).unwrap();
        assert!(mix(vec![(-0.1, s.clone()), (1.1, s.clone())]).is_err());
        assert!(mix(vec![(0.0, s.clone())]).is_err());
        // Weights renormalize exactly.
        let m = mix(vec![(2.0, s.clone()), (6.0, s)]).unwrap();
        let total: f64 = m.components().iter().map(|(w, _)| w).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn random_pure_is_deterministic_and_normalized() {
        let a = random_pure(3, 7).unwrap();
        let b = random_pure(3, 7).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.amplitudes().iter().map(|x| x.norm_sqr()).sum();
        assert_close(norm, 1.0, 1e-12);
        assert_ne!(a, random_pure(3, 8).unwrap());
    }

    #[test]
    fn random_pure_first_amplitude_haar_moment() {
        // E|a_0|^2 = 1/2^k with variance (1/4^k)(1 - 1/2^k)... bounded above
        // by 1/4^k; 5 standard errors over 10^4 samples.
        let k = 3;
        let samples = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut acc = 0.0;
        for _ in 0..samples {
            let s = random_pure_with(k, &mut rng).unwrap();
            acc += s.amplitudes()[0].norm_sqr();
        }
        let mean = acc / samples as f64;
        let expected = 1.0 / (1 << k) as f64;
        let se = expected / (samples as f64).sqrt();
        assert!(
            (mean - expected).abs() < 5.0 * se,
            "mean {mean} vs {expected} (se {se})"
        );
    }

    #[test]
    fn block_product_validates_shapes() {
        let p = Partition::new(vec![3, 1]).unwrap();
        let good = block_product(&p, vec![ghz(3).unwrap(), basis(1, 0).unwrap()]);
        assert!(good.is_ok());
        assert_eq!(good.unwrap().n(), 4);
        let bad = block_product(&p, vec![ghz(2).unwrap(), basis(1, 0).unwrap()]);
        assert!(bad.is_err());
        let wrong_count = block_product(&p, vec![ghz(3).unwrap()]);
        assert!(wrong_count.is_err());
    }

    #[test]
    fn direction_norm_cap() {
        assert!(Direction::new(1.0, 0.0, 0.0).is_ok());
        assert!(Direction::new(0.3, 0.2, 0.1).is_ok());
        assert!(Direction::new(1.0, 0.5, 0.0).is_err());
        let u = Direction::from_polar(0.123, 4.56);
        assert_close(u.norm(), 1.0, 1e-15);
    }
}
