//! Boundary traces and fluxes as eigen-coefficient sequences.
//!
//! With `ψ_k = ∫_D ψ φ_k`, the fractional trace norms are the weighted
//! sequence norms
//!
//! ```text
//! ‖ψ‖_{H½₀₀}  = (Σ λ_k^{ 1/2} ψ_k²)^{1/2}
//! ‖h‖_{H½₀₀*} = (Σ λ_k^{-1/2} h_k²)^{1/2}
//! ```
//!
//! and the duality pairing is the plain `L²` sum `Σ h_k ψ_k`.

use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::spectral::SpectralBasis;

/// Function space a coefficient sequence is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceSpace {
    /// `H½₀₀(D)`: Dirichlet traces.
    HalfZeroZero,
    /// `H½₀₀(D)*`: Neumann fluxes.
    HalfZeroZeroDual,
    L2,
}

impl TraceSpace {
    /// Exponent `e` of the weight `λ_k^e` in the squared norm.
    fn weight_exponent<T: Real>(self) -> T {
        match self {
            TraceSpace::HalfZeroZero => T::lit(0.5),
            TraceSpace::HalfZeroZeroDual => T::lit(-0.5),
            TraceSpace::L2 => T::zero(),
        }
    }

    /// Per-mode weights `λ_k^e` for this space.
    pub fn weights<T: Real>(self, basis: &SpectralBasis<T>) -> Vec<T> {
        let e = self.weight_exponent::<T>();
        basis.modes().iter().map(|m| m.eigenvalue.powf(e)).collect()
    }
}

/// Boundary function on `D`, stored as coefficients on a shared basis.
#[derive(Clone, Debug)]
pub struct TraceFunction<T> {
    basis: Arc<SpectralBasis<T>>,
    coefficients: Vec<T>,
    space: TraceSpace,
}

impl<T: Real> TraceFunction<T> {
    /// Coefficients beyond those supplied are zero.
    pub fn new(basis: Arc<SpectralBasis<T>>, coefficients: &[T], space: TraceSpace) -> Result<Self> {
        let n = basis.count();
        if coefficients.len() > n {
            return Err(Error::SizeMismatch { max: n, found: coefficients.len() });
        }
        let mut c = coefficients.to_vec();
        c.resize(n, T::zero());
        Ok(Self { basis, coefficients: c, space })
    }

    pub fn zeros(basis: Arc<SpectralBasis<T>>, space: TraceSpace) -> Self {
        let n = basis.count();
        Self { basis, coefficients: vec![T::zero(); n], space }
    }

    /// Unit coefficient on mode `k` (1-based).
    pub fn unit(basis: Arc<SpectralBasis<T>>, k: usize, space: TraceSpace) -> Result<Self> {
        basis.mode(k)?;
        let mut t = Self::zeros(basis, space);
        t.coefficients[k - 1] = T::one();
        Ok(t)
    }

    pub fn from_samples(basis: Arc<SpectralBasis<T>>, samples: &[T], space: TraceSpace) -> Result<Self> {
        let coefficients = basis.analyze(samples)?;
        Ok(Self { basis, coefficients, space })
    }

    pub fn basis(&self) -> &Arc<SpectralBasis<T>> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: usize) -> Result<T> {
        self.basis.mode(k)?;
        Ok(self.coefficients[k - 1])
    }

    pub fn space(&self) -> TraceSpace {
        self.space
    }

    /// Same coefficients tagged with another space.
    pub fn retagged(&self, space: TraceSpace) -> Self {
        Self { space, ..self.clone() }
    }

    pub fn samples(&self) -> Vec<T> {
        self.basis.synthesize(&self.coefficients).expect("coefficient count matches basis")
    }

    /// Weighted `ℓ²` norm for the tagged space.
    pub fn norm(&self) -> T {
        self.norm_in(self.space)
    }

    pub fn norm_in(&self, space: TraceSpace) -> T {
        space
            .weights(&self.basis)
            .iter()
            .zip(&self.coefficients)
            .map(|(&w, &c)| w * c * c)
            .sum::<T>()
            .sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            coefficients: self.coefficients.iter().map(|&c| c * s).collect(),
            ..self.clone()
        }
    }

    /// `self + other`, keeping the tag of `self`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self - other`, keeping the tag of `self`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_basis(other)?;
        Ok(Self {
            coefficients: self.coefficients.iter().zip(&other.coefficients).map(|(&a, &b)| op(a, b)).collect(),
            ..self.clone()
        })
    }

    pub fn map_coefficients(&self, space: TraceSpace, op: impl Fn(usize, T, T) -> T) -> Self {
        let coefficients = self
            .basis
            .modes()
            .iter()
            .zip(&self.coefficients)
            .map(|(m, &c)| op(m.index, m.eigenvalue, c))
            .collect();
        Self { basis: self.basis.clone(), coefficients, space }
    }

    pub fn check_same_basis(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn expect_space(&self, expected: TraceSpace) -> Result<()> {
        if self.space == expected {
            Ok(())
        } else {
            Err(Error::WrongSpace { expected, found: self.space })
        }
    }
}

/// `⟨h, ψ⟩ = Σ h_k ψ_k`, the `L²`-based pairing of `H½₀₀*` with `H½₀₀`.
pub fn dual_pair<T: Real>(h: &TraceFunction<T>, psi: &TraceFunction<T>) -> Result<T> {
    h.check_same_basis(psi)?;
    Ok(h.coefficients.iter().zip(&psi.coefficients).map(|(&a, &b)| a * b).sum())
}

/// Extension by zero from `Γ₂` to `∂Ω`. The sine basis already vanishes on
/// `∂D`, so the coefficient representation is unchanged.
pub fn extend_by_zero<T: Real>(t: &TraceFunction<T>) -> Result<TraceFunction<T>> {
    t.expect_space(TraceSpace::HalfZeroZero)?;
    Ok(t.clone())
}

/// Seeded perturbation of prescribed norm.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec<T> {
    pub eps: T,
    pub space: TraceSpace,
    pub seed: u64,
    /// Zero-based mode positions carrying noise; `None` means all modes.
    pub support: Option<Range<usize>>,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(eps: T, space: TraceSpace, seed: u64) -> Self {
        Self { eps, space, seed, support: None }
    }

    pub fn with_support(mut self, support: Range<usize>) -> Self {
        self.support = Some(support);
        self
    }
}

/// Returns `t + δ` where `δ` has independent uniform `[-1, 1]` coefficients
/// on the support, rescaled so that `‖δ‖` in `spec.space` equals `spec.eps`.
/// `eps = 0` returns `t` unchanged.
pub fn inject_noise<T: Real>(t: &TraceFunction<T>, spec: &NoiseSpec<T>) -> Result<TraceFunction<T>> {
    if !(spec.eps >= T::zero()) || !spec.eps.is_finite() {
        return Err(Error::InvalidInput(format!("noise level must be finite and ≥ 0, got {}", spec.eps)));
    }
    let n = t.basis.count();
    let support = spec.support.clone().unwrap_or(0..n);
    if support.end > n {
        return Err(Error::InvalidInput(format!(
            "noise support {support:?} exceeds the {n} retained modes"
        )));
    }
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if spec.eps == T::zero() {
        return Ok(t.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut delta = vec![T::zero(); n];
    for d in &mut delta[support] {
        *d = T::lit(rng.gen_range(-1.0..=1.0));
    }
    let weights = spec.space.weights(&t.basis);
    let raw: T = weights.iter().zip(&delta).map(|(&w, &d)| w * d * d).sum::<T>().sqrt();
    if raw == T::zero() {
        return Err(Error::EmptySupport);
    }
    let scale = spec.eps / raw;
    let coefficients = t.coefficients.iter().zip(&delta).map(|(&c, &d)| c + d * scale).collect();
    Ok(TraceFunction { basis: t.basis.clone(), coefficients, space: t.space })
}
