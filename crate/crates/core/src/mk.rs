//! Mermin-Klyshko operators as exact sparse coefficient maps.
//!
//! An n-qubit MK operator is a signed sum of tensor products in which every
//! qubit contributes either its unprimed or primed observable. We store it
//! as a map from the prime-pattern bitstring (bit i set = qubit i primed) to
//! a dyadic-rational coefficient. The recursion only ever adds terms and
//! halves them, so dyadic arithmetic is exact and operator identities can be
//! checked by literal map equality.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{
    apply_direction, inner, tensor, Direction, ProductState, PureState, Settings, State,
};

/// MK operators are defined from two qubits up.
pub const MIN_MK_QUBITS: usize = 2;
/// Matches the statevector cap; term maps stay tiny either way.
pub const MAX_MK_QUBITS: usize = 14;
/// Widest system for which the dense test oracle will materialize 2^n x 2^n.
pub const MAX_DENSE_QUBITS: usize = 8;

/// Exact dyadic rational: `num / 2^exp`, kept with odd numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: i64,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: i64, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        if d.num == 0 {
            d.exp = 0;
        } else {
            while d.num % 2 == 0 && d.exp > 0 {
                d.num /= 2;
                d.exp -= 1;
            }
        }
        d
    }

    pub fn zero() -> Self {
        Dyadic { num: 0, exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: 1, exp: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn halved(self) -> Self {
        Dyadic::new(self.num, self.exp + 1)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (2.0f64).powi(-(self.exp as i32))
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;

    fn add(self, other: Dyadic) -> Dyadic {
        let exp = self.exp.max(other.exp);
        let a = self.num << (exp - self.exp);
        let b = other.num << (exp - other.exp);
        Dyadic::new(a + b, exp)
    }
}

impl std::ops::Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num, exp: self.exp }
    }
}

impl std::ops::Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, other: Dyadic) -> Dyadic {
        Dyadic::new(self.num * other.num, self.exp + other.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

/// Sparse MK operator: prime patterns to nonzero dyadic coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermMap {
    n: usize,
    terms: BTreeMap<u32, Dyadic>,
}

impl TermMap {
    fn empty(n: usize) -> Self {
        TermMap { n, terms: BTreeMap::new() }
    }

    /// Builds a map from raw (pattern, coefficient) pairs; coefficients on
    /// the same pattern accumulate and zeros are dropped.
    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = (u32, Dyadic)>,
    ) -> Result<TermMap> {
        check_mk_n(n)?;
        let mut map = TermMap::empty(n);
        for (pattern, coeff) in terms {
            if u64::from(pattern) >= (1u64 << n) {
                return Err(Error::invalid(format!(
                    "pattern {pattern:#b} out of range for {n} qubits"
                )));
            }
            map.insert_add(pattern, coeff);
        }
        Ok(map)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of one prime pattern; zero when absent.
    pub fn coefficient(&self, pattern: u32) -> Dyadic {
        self.terms.get(&pattern).copied().unwrap_or_else(Dyadic::zero)
    }

    /// Terms in ascending pattern-value order.
    pub fn terms(&self) -> impl Iterator<Item = (u32, Dyadic)> + '_ {
        self.terms.iter().map(|(&p, &c)| (p, c))
    }

    fn insert_add(&mut self, pattern: u32, coeff: Dyadic) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(pattern).or_insert_with(Dyadic::zero);
        *slot = *slot + coeff;
        if slot.is_zero() {
            self.terms.remove(&pattern);
        }
    }

    /// The primed partner: every pattern complemented. Swapping primed and
    /// unprimed observables is exactly this relabeling.
    pub fn complement(&self) -> TermMap {
        let mask = full_mask(self.n);
        let terms = self.terms.iter().map(|(&p, &c)| (p ^ mask, c)).collect();
        TermMap { n: self.n, terms }
    }

    /// Pattern rendered with qubit 0 as the leftmost character.
    pub fn pattern_string(n: usize, pattern: u32) -> String {
        (0..n)
            .map(|i| if pattern & (1 << i) != 0 { '1' } else { '0' })
            .collect()
    }

    /// Dump lines `<pattern> <numerator>/2^<exponent>`, sorted by pattern.
    pub fn dump_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .terms()
            .map(|(p, c)| format!("{} {}", Self::pattern_string(self.n, p), c))
            .collect();
        lines.sort();
        lines
    }
}

fn full_mask(n: usize) -> u32 {
    ((1u64 << n) - 1) as u32
}

fn check_mk_n(n: usize) -> Result<()> {
    if n < MIN_MK_QUBITS {
        return Err(Error::invalid(format!(
            "MK operators need at least {MIN_MK_QUBITS} qubits, got {n}"
        )));
    }
    if n > MAX_MK_QUBITS {
        return Err(Error::capacity(format!(
            "MK operator on {n} qubits exceeds the cap {MAX_MK_QUBITS}"
        )));
    }
    Ok(())
}

/// Base case: F_2 = AB + AB' + A'B - A'B' (i.e. X + Y).
fn base_f2() -> TermMap {
    let mut map = TermMap::empty(2);
    map.insert_add(0b00, Dyadic::one()); // A B
    map.insert_add(0b10, Dyadic::one()); // A B'
    map.insert_add(0b01, Dyadic::one()); // A'B
    map.insert_add(0b11, -Dyadic::one()); // A'B'
    map
}

/// Builds (F_n, F_n') by the half-sum recursion
/// F_m = (D_m + D_m')/2 * F_{m-1} + (D_m - D_m')/2 * F_{m-1}',
/// starting from F_2. The primed partner is the pattern complement.
pub fn build_mk(n: usize) -> Result<(TermMap, TermMap)> {
    check_mk_n(n)?;
    let mut f = base_f2();
    let mut fp = f.complement();
    for m in 3..=n {
        let bit = 1u32 << (m - 1);
        let mut next = TermMap::empty(m);
        for (pattern, coeff) in f.terms() {
            let half = coeff.halved();
            next.insert_add(pattern, half);
            next.insert_add(pattern | bit, half);
        }
        for (pattern, coeff) in fp.terms() {
            let half = coeff.halved();
            next.insert_add(pattern, half);
            next.insert_add(pattern | bit, -half);
        }
        f = next;
        fp = f.complement();
    }
    Ok((f, fp))
}

/// Term-wise tensor of two maps, the high map shifted onto the trailing
/// `high.n` pattern bits.
fn tensor_terms(low: &TermMap, high: &TermMap) -> TermMap {
    let shift = low.n;
    let mut out = TermMap::empty(low.n + high.n);
    for (pl, cl) in low.terms() {
        for (ph, ch) in high.terms() {
            out.insert_add(pl | (ph << shift), cl * ch);
        }
    }
    out
}

fn add_maps(a: &TermMap, b: &TermMap) -> TermMap {
    let mut out = a.clone();
    for (p, c) in b.terms() {
        out.insert_add(p, c);
    }
    out
}

fn negate_map(a: &TermMap) -> TermMap {
    let terms = a.terms.iter().map(|(&p, &c)| (p, -c)).collect();
    TermMap { n: a.n, terms }
}

fn scale_quarter(a: &TermMap) -> TermMap {
    let terms = a
        .terms
        .iter()
        .map(|(&p, &c)| (p, c.halved().halved()))
        .collect();
    TermMap { n: a.n, terms }
}

/// Assembles F_n from the block identity
/// F_n = (F_{n-k}(F_k + F_k') + F_{n-k}'(F_k - F_k'))/4,
/// with the k-block on the last k qubits (trailing pattern bits). This is an
/// exact rearrangement of the recursion: the result equals `build_mk(n).0`
/// as a coefficient map.
pub fn build_mk_split(n: usize, k: usize) -> Result<TermMap> {
    check_mk_n(n)?;
    if k < 2 || k + 2 > n {
        return Err(Error::invalid(format!(
            "split needs 2 <= k <= n-2, got k={k} for n={n}"
        )));
    }
    let (f_low, fp_low) = build_mk(n - k)?;
    let (f_high, fp_high) = build_mk(k)?;
    let sum_high = add_maps(&f_high, &fp_high);
    let diff_high = add_maps(&f_high, &negate_map(&fp_high));
    let combined = add_maps(
        &tensor_terms(&f_low, &sum_high),
        &tensor_terms(&fp_low, &diff_high),
    );
    Ok(scale_quarter(&combined))
}

fn check_dims(map: &TermMap, settings: &Settings, n_state: usize) -> Result<()> {
    if map.n != settings.n() || map.n != n_state {
        return Err(Error::invalid(format!(
            "dimension mismatch: operator n={}, settings n={}, state n={}",
            map.n,
            settings.n(),
            n_state
        )));
    }
    Ok(())
}

/// ⟨⊗ v·σ⟩ across a factor list for one prime pattern. Each factor is
/// handled on its own short vector; the full product is the product of the
/// per-factor expectations.
fn term_product(
    factors: &[PureState],
    settings: &Settings,
    pattern: u32,
    scratch: &mut Vec<Complex64>,
) -> f64 {
    let mut value = 1.0;
    let mut offset = 0;
    for factor in factors {
        scratch.clear();
        scratch.extend_from_slice(factor.amplitudes());
        for local in 0..factor.n() {
            let global = offset + local;
            let dir = settings.select(global, pattern & (1 << global) != 0);
            apply_direction(scratch, factor.n(), local, dir);
        }
        let expect = inner(factor.amplitudes(), scratch);
        debug_assert!(expect.im.abs() <= 1e-10, "imaginary residue {}", expect.im);
        value *= expect.re;
        offset += factor.n();
    }
    value
}

/// Sparse evaluation of ⟨F⟩ by the general route: every component is
/// materialized as one dense amplitude vector and each term applies its
/// single-qubit operators to a scratch copy. Coefficients go to float only
/// at the final multiply.
pub fn evaluate(map: &TermMap, settings: &Settings, state: &State) -> Result<f64> {
    check_dims(map, settings, state.n())?;
    let mut comps: Vec<(f64, PureState)> = Vec::new();
    for (weight, factors) in state.ensemble() {
        let dense = if factors.len() == 1 {
            factors[0].clone()
        } else {
            tensor(factors)?
        };
        comps.push((weight, dense));
    }
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for (pattern, coeff) in map.terms() {
        let mut expect = 0.0;
        for (weight, dense) in &comps {
            expect += weight
                * term_product(std::slice::from_ref(dense), settings, pattern, &mut scratch);
        }
        total += coeff.to_f64() * expect;
    }
    Ok(total)
}

/// Same value as [`evaluate`], computed block by block for a state supplied
/// in product form; no full-width vector is ever formed.
pub fn evaluate_product_fast(
    map: &TermMap,
    settings: &Settings,
    product: &ProductState,
) -> Result<f64> {
    check_dims(map, settings, product.n())?;
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for (pattern, coeff) in map.terms() {
        total += coeff.to_f64() * term_product(product.factors(), settings, pattern, &mut scratch);
    }
    Ok(total)
}

/// Internal evaluation over the ensemble view, using native factorization.
/// Agrees with [`evaluate`]; the hot paths (optimizer, sampling sweeps) call
/// this one.
pub(crate) fn evaluate_ensemble(map: &TermMap, settings: &Settings, state: &State) -> Result<f64> {
    check_dims(map, settings, state.n())?;
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for (pattern, coeff) in map.terms() {
        let mut expect = 0.0;
        for (weight, factors) in state.ensemble() {
            expect += weight * term_product(factors, settings, pattern, &mut scratch);
        }
        total += coeff.to_f64() * expect;
    }
    Ok(total)
}

/// ⟨F_n⟩² + ⟨F_n'⟩² at the given settings.
pub fn quadratic_bell(state: &State, settings: &Settings) -> Result<f64> {
    let (f_map, fp_map) = build_mk(state.n())?;
    let f = evaluate_ensemble(&f_map, settings, state)?;
    let fp = evaluate_ensemble(&fp_map, settings, state)?;
    Ok(f * f + fp * fp)
}

/// max(|⟨F_n⟩|, |⟨F_n'⟩|) at the given settings.
pub fn linear_bell_max(state: &State, settings: &Settings) -> Result<f64> {
    let (f_map, fp_map) = build_mk(state.n())?;
    let f = evaluate_ensemble(&f_map, settings, state)?;
    let fp = evaluate_ensemble(&fp_map, settings, state)?;
    Ok(f.abs().max(fp.abs()))
}

/// Dense 2^n x 2^n realization of a term map at fixed settings. Test oracle:
/// independent of the sparse evaluation path.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<Complex64>, // row-major
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    /// ⟨ψ|M|ψ⟩, clamped to its real part.
    pub fn expectation(&self, state: &PureState) -> f64 {
        let amps = state.amplitudes();
        assert_eq!(amps.len(), self.dim, "state and operator sizes differ");
        let mut acc = Complex64::new(0.0, 0.0);
        for (row, &a) in amps.iter().enumerate() {
            let mut m_psi = Complex64::new(0.0, 0.0);
            for (col, &b) in amps.iter().enumerate() {
                m_psi += self.entry(row, col) * b;
            }
            acc += a.conj() * m_psi;
        }
        acc.re
    }

    /// Largest deviation from Hermitian symmetry, max |M - M†|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let d = (self.entry(r, c) - self.entry(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest eigenvalue via shifted power iteration. The Gershgorin shift
    /// makes the matrix positive semidefinite so the dominant eigenvalue of
    /// the shifted matrix is the one we want.
    pub fn max_eigenvalue(&self) -> f64 {
        let shift = (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.entry(r, c).norm()).sum::<f64>())
            .fold(0.0f64, f64::max);
        if shift == 0.0 {
            return 0.0;
        }
        // Deterministic start with nonuniform phases to avoid landing in an
        // invariant subspace.
        let mut v: Vec<Complex64> = (0..self.dim)
            .map(|i| Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        normalize(&mut v);
        let mut lambda = 0.0;
        let mut stable = 0;
        for _ in 0..100_000 {
            let mut w = vec![Complex64::new(0.0, 0.0); self.dim];
            for r in 0..self.dim {
                let row = &self.data[r * self.dim..(r + 1) * self.dim];
                let acc: Complex64 = row.iter().zip(&v).map(|(m, x)| m * x).sum();
                w[r] = acc + Complex64::new(shift, 0.0) * v[r];
            }
            let norm = normalize(&mut w);
            let next = norm - shift;
            if (next - lambda).abs() < 1e-14 * (1.0 + next.abs()) {
                stable += 1;
                if stable >= 4 {
                    return next;
                }
            } else {
                stable = 0;
            }
            lambda = next;
            v = w;
        }
        lambda
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

fn direction_matrix(d: &Direction) -> [Complex64; 4] {
    [
        Complex64::new(d.z, 0.0),
        Complex64::new(d.x, -d.y),
        Complex64::new(d.x, d.y),
        Complex64::new(-d.z, 0.0),
    ]
}

/// Materializes Σ coeff × ⊗(v·σ) for the map at the given settings.
pub fn dense_operator(map: &TermMap, settings: &Settings) -> Result<DenseOperator> {
    if map.n > MAX_DENSE_QUBITS {
        return Err(Error::capacity(format!(
            "dense operator on {} qubits exceeds the cap {MAX_DENSE_QUBITS}",
            map.n
        )));
    }
    if map.n != settings.n() {
        return Err(Error::invalid("settings do not match operator size"));
    }
    let dim = 1usize << map.n;
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (pattern, coeff) in map.terms() {
        // Kronecker product, qubit 0 outermost (most significant).
        let mut kron = vec![Complex64::new(1.0, 0.0)];
        let mut kdim = 1usize;
        for qubit in 0..map.n {
            let m = direction_matrix(settings.select(qubit, pattern & (1 << qubit) != 0));
            let mut next = vec![Complex64::new(0.0, 0.0); (kdim * 2) * (kdim * 2)];
            for r in 0..kdim {
                for c in 0..kdim {
                    let base = kron[r * kdim + c];
                    for br in 0..2 {
                        for bc in 0..2 {
                            next[(r * 2 + br) * (kdim * 2) + (c * 2 + bc)] =
                                base * m[br * 2 + bc];
                        }
                    }
                }
            }
            kron = next;
            kdim *= 2;
        }
        let c = Complex64::new(coeff.to_f64(), 0.0);
        for (slot, value) in data.iter_mut().zip(kron.iter()) {
            *slot += c * value;
        }
    }
    Ok(DenseOperator { dim, data })
}
