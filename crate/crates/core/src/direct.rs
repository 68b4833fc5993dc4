//! Direct corrosion problem on the cylinder:
//! `Δu = 0` in `Ω`, `∂u/∂ν = g` on `Γ₂`, `∂u/∂ν = f(u)` on `Γ₁`, `u = 0` on
//! `Γ_D`, solved by damped Picard iteration on the `Γ₁` flux.

use std::fmt;
use std::sync::Arc;

use log::debug;

use crate::cylinder::CylinderField;
use crate::error::{Error, Result};
use crate::real::{coth, Real};
use crate::spectral::SpectralBasis;
use crate::trace::{inject_noise, NoiseSpec, TraceFunction, TraceSpace};

/// Shape of a nonlinear boundary law.
#[derive(Clone)]
pub enum LawKind<T> {
    /// `f(u) = a u`.
    Linear { slope: T },
    /// `f(u) = a u / (1 + |u|)`.
    Saturating { scale: T },
    /// Linear interpolation through `knots`, constant beyond the ends,
    /// shifted by `offset` so that `f(0) = 0`.
    Piecewise { knots: Vec<(T, T)>, offset: T },
    /// User supplied function.
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: fmt::Debug> fmt::Debug for LawKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawKind::Linear { slope } => f.debug_struct("Linear").field("slope", slope).finish(),
            LawKind::Saturating { scale } => f.debug_struct("Saturating").field("scale", scale).finish(),
            LawKind::Piecewise { knots, offset } => {
                f.debug_struct("Piecewise").field("knots", knots).field("offset", offset).finish()
            }
            LawKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// Lipschitz nonlinearity `f` with `f(0) = 0` and declared constant `L`.
#[derive(Clone, Debug)]
pub struct NonlinearLaw<T> {
    kind: LawKind<T>,
    lipschitz: T,
}

impl<T: Real> NonlinearLaw<T> {
    pub fn linear(slope: T) -> Self {
        Self { kind: LawKind::Linear { slope }, lipschitz: slope.abs() }
    }

    pub fn saturating(scale: T) -> Self {
        Self { kind: LawKind::Saturating { scale }, lipschitz: scale.abs() }
    }

    /// Knots must have strictly increasing abscissae.
    pub fn piecewise(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidInput("piecewise law needs at least one knot".into()));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidInput("piecewise knots must be finite".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidInput("piecewise knots must have increasing abscissae".into()));
        }
        let lipschitz = knots
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(T::zero(), T::max);
        let offset = interpolate(&knots, T::zero());
        Ok(Self { kind: LawKind::Piecewise { knots, offset }, lipschitz })
    }

    pub fn custom(f: impl Fn(T) -> T + Send + Sync + 'static, lipschitz: T) -> Self {
        Self { kind: LawKind::Custom(Arc::new(f)), lipschitz }
    }

    pub fn kind(&self) -> &LawKind<T> {
        &self.kind
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn eval(&self, u: T) -> T {
        match &self.kind {
            LawKind::Linear { slope } => *slope * u,
            LawKind::Saturating { scale } => *scale * u / (T::one() + u.abs()),
            LawKind::Piecewise { knots, offset } => interpolate(knots, u) - *offset,
            LawKind::Custom(f) => f(u),
        }
    }

    /// Checks `f(0) = 0` and that difference quotients on `samples` evenly
    /// spaced points of `[lo, hi]` stay below `L` up to `1e-9` plus the
    /// rounding error of the quotient.
    pub fn validate(&self, lo: T, hi: T, samples: usize) -> Result<()> {
        let slack = T::lit(1e-9);
        let f0 = self.eval(T::zero());
        if f0.abs() > slack {
            return Err(Error::LipschitzViolation(format!("f(0) = {f0}, expected 0")));
        }
        if !(hi > lo) || samples < 2 {
            return Err(Error::InvalidInput("validation range must be nonempty with at least two samples".into()));
        }
        let mut ts: Vec<T> = (0..samples)
            .map(|i| lo + (hi - lo) * T::of_usize(i) / T::of_usize(samples - 1))
            .collect();
        if let LawKind::Piecewise { knots, .. } = &self.kind {
            ts.extend(knots.iter().map(|k| k.0).filter(|&t| t > lo && t < hi));
            ts.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        }
        let values: Vec<T> = ts.iter().map(|&t| self.eval(t)).collect();
        for i in 1..ts.len() {
            let dt = ts[i] - ts[i - 1];
            if dt <= T::zero() {
                continue;
            }
            let q = ((values[i] - values[i - 1]) / dt).abs();
            let rounding = T::lit(8.0) * T::epsilon() * (values[i].abs() + values[i - 1].abs()) / dt;
            if !q.is_finite() || q > self.lipschitz + slack + rounding {
                return Err(Error::LipschitzViolation(format!(
                    "difference quotient {q} exceeds L = {} near t = {}",
                    self.lipschitz,
                    ts[i]
                )));
            }
        }
        Ok(())
    }
}

fn interpolate<T: Real>(knots: &[(T, T)], u: T) -> T {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if u <= first.0 {
        return first.1;
    }
    if u >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= u);
    let (a, b) = (knots[i - 1], knots[i]);
    a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0)
}

/// Iteration controls for [`solve_direct`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Damping `θ ∈ (0, 1]`.
    pub damping: T,
    /// Optional a-priori bound `E` with `∫|∇u|² ≤ E²`.
    pub energy_bound: Option<T>,
    /// Interval on which the Lipschitz constant of `f` is checked.
    pub check_range: (T, T),
}

impl<T: Real> Default for DirectOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-12),
            max_iter: 200,
            damping: T::one(),
            energy_bound: None,
            check_range: (T::lit(-10.0), T::lit(10.0)),
        }
    }
}

/// Converged solution of the direct problem.
#[derive(Clone, Debug)]
pub struct DirectSolution<T> {
    pub field: CylinderField<T>,
    /// Prescribed flux on `Γ₂`.
    pub g: TraceFunction<T>,
    /// Flux on `Γ₁` at the last iterate.
    pub gamma1_flux: TraceFunction<T>,
    /// `‖q^{(m+1)} - q^{(m)}‖` in the dual norm, per step.
    pub residuals: Vec<T>,
    pub energy: T,
}

impl<T: Real> DirectSolution<T> {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    /// Observed ratios of successive Picard increments.
    pub fn contraction_ratios(&self) -> Vec<T> {
        self.residuals
            .windows(2)
            .filter(|w| w[0] > T::zero())
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Harmonic field with Neumann data `g` on `Γ₂` and `q` on `Γ₁`.
pub fn neumann_field<T: Real>(basis: &Arc<SpectralBasis<T>>, g: &[T], q: &[T]) -> Result<CylinderField<T>> {
    let (bottom, top): (Vec<T>, Vec<T>) = basis
        .modes()
        .iter()
        .zip(g.iter().zip(q))
        .map(|(m, (&gk, &qk))| {
            let s = m.eigenvalue.sqrt();
            let (c, cs) = (coth(s) / s, T::one() / (s * s.sinh()));
            (gk * c + qk * cs, gk * cs + qk * c)
        })
        .unzip();
    CylinderField::from_end_values(basis.clone(), bottom, top)
}

/// Requires at least four grid points per highest wavelength on each axis.
pub fn check_oversampling<T: Real>(basis: &SpectralBasis<T>) -> Result<()> {
    let res = basis.cross_section().resolution();
    for axis in 0..basis.cross_section().axes() {
        let top = basis.modes().iter().map(|m| m.wavenumbers[axis]).max().unwrap_or(0);
        if res[axis] < 4 * top {
            return Err(Error::InvalidInput(format!(
                "grid resolution {} on axis {axis} is below 4x the highest wavenumber {top}",
                res[axis]
            )));
        }
    }
    Ok(())
}

fn project_law<T: Real>(law: &NonlinearLaw<T>, basis: &SpectralBasis<T>, top: &[T]) -> Result<Vec<T>> {
    let values = basis.synthesize(top)?;
    let mapped: Vec<T> = values.into_iter().map(|u| law.eval(u)).collect();
    basis.analyze(&mapped)
}

/// Damped Picard iteration
/// `q ← (1-θ) q + θ Π f(u[q]|Γ₁)`, stopping once the dual norm of the update
/// is at most `tol`.
pub fn solve_direct<T: Real>(
    law: &NonlinearLaw<T>,
    g: &TraceFunction<T>,
    opts: &DirectOptions<T>,
) -> Result<DirectSolution<T>> {
    g.expect_space(TraceSpace::HalfZeroZeroDual)?;
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if !(opts.damping > T::zero() && opts.damping <= T::one()) {
        return Err(Error::InvalidInput("damping must lie in (0, 1]".into()));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be positive".into()));
    }
    let (lo, hi) = opts.check_range;
    law.validate(lo, hi, 2001)?;
    let basis = g.basis().clone();
    check_oversampling(&basis)?;

    let weights = TraceSpace::HalfZeroZeroDual.weights(&basis);
    let theta = opts.damping;
    let mut q = vec![T::zero(); basis.count()];
    let mut residuals = Vec::new();
    let mut converged = false;
    for it in 0..opts.max_iter {
        let field = neumann_field(&basis, g.coefficients(), &q)?;
        let fq = project_law(law, &basis, field.trace_top().coefficients())?;
        let mut step = T::zero();
        for ((qk, &fk), &w) in q.iter_mut().zip(&fq).zip(&weights) {
            let next = (T::one() - theta) * *qk + theta * fk;
            step += w * (next - *qk) * (next - *qk);
            *qk = next;
        }
        let step = step.sqrt();
        residuals.push(step);
        debug!("picard step {it}: residual {step:e}");
        if !step.is_finite() {
            break;
        }
        if step <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: residuals.len(),
            residual: residuals.last().map_or(f64::NAN, |r| r.as_f64()),
        });
    }
    let field = neumann_field(&basis, g.coefficients(), &q)?;
    let energy = field.energy();
    if let Some(e) = opts.energy_bound {
        if energy > e * e {
            return Err(Error::EnergyBoundExceeded { energy: energy.as_f64(), bound: (e * e).as_f64() });
        }
    }
    Ok(DirectSolution {
        gamma1_flux: TraceFunction::new(basis.clone(), &q, TraceSpace::HalfZeroZeroDual)?,
        field,
        g: g.clone(),
        residuals,
        energy,
    })
}

/// `∫_Ω |∇u|²`.
pub fn energy<T: Real>(sol: &DirectSolution<T>) -> T {
    sol.field.energy()
}

/// `‖q - Π f(u|Γ₁)‖` in the dual norm.
pub fn fixed_point_defect<T: Real>(law: &NonlinearLaw<T>, sol: &DirectSolution<T>) -> Result<T> {
    let basis = sol.field.basis();
    let fq = project_law(law, basis, sol.field.trace_top().coefficients())?;
    let projected = TraceFunction::new(basis.clone(), &fq, TraceSpace::HalfZeroZeroDual)?;
    Ok(sol.field.flux_top().sub(&projected)?.norm())
}

/// Measured Cauchy data on `Γ₂`.
#[derive(Clone, Debug)]
pub struct CauchyPair<T> {
    pub psi: TraceFunction<T>,
    pub g: TraceFunction<T>,
}

/// `(ψ, g) = (u|Γ₂, g)` perturbed by the two noise specifications.
pub fn measure<T: Real>(
    sol: &DirectSolution<T>,
    psi_noise: &NoiseSpec<T>,
    g_noise: &NoiseSpec<T>,
) -> Result<CauchyPair<T>> {
    Ok(CauchyPair {
        psi: inject_noise(&sol.field.trace_bottom(), psi_noise)?,
        g: inject_noise(&sol.g, g_noise)?,
    })
}

/// `max - min` of `u` over the `Γ₁` grid.
pub fn oscillation_gamma1<T: Real>(sol: &DirectSolution<T>) -> Result<T> {
    let values = sol.field.basis().synthesize(sol.field.trace_top().coefficients())?;
    let (lo, hi) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(if values.is_empty() { T::zero() } else { hi - lo })
}

/// `max |g|` over grid nodes of `Γ₂` at distance at least `2 r0` from `∂D`.
pub fn flux_lower_bound<T: Real>(g: &TraceFunction<T>, r0: T) -> Result<T> {
    let section = g.basis().cross_section();
    let values = g.samples();
    let margin = T::lit(2.0) * r0;
    let extents = section.extents();
    let mut best = T::zero();
    let mut any = false;
    for (p, v) in section.grid_points().iter().zip(values) {
        let inside = (0..section.axes()).all(|a| p[a] >= margin && extents[a] - p[a] >= margin);
        if inside {
            any = true;
            best = best.max(v.abs());
        }
    }
    if !any {
        return Err(Error::EmptySupport);
    }
    Ok(best)
}
