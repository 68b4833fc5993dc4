//! Identification of the boundary nonlinearity from `Γ₁` Cauchy data.
//!
//! Quadrature nodes of `Γ₁` are binned by the value of `u`; each bin gets the
//! weighted mean of the flux over its nodes. This is the exact minimizer of
//! the discretized functional `∫_{Γ₁} (f(u) - ∂u/∂ν)²` over bin-constant `f`.

use log::debug;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::trace::TraceFunction;

/// Trace values, fluxes, quadrature weights and tangential gradient
/// magnitudes at the nodes of a tensor grid on `Γ₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSamples<T> {
    values: Vec<T>,
    fluxes: Vec<T>,
    weights: Vec<T>,
    gradients: Vec<T>,
    shape: [usize; 2],
}

impl<T: Real> TraceSamples<T> {
    /// Nodes are row-major with the first axis fastest; `shape[1] = 1` for a
    /// one-dimensional grid.
    pub fn new(values: Vec<T>, fluxes: Vec<T>, weights: Vec<T>, gradients: Vec<T>, shape: [usize; 2]) -> Result<Self> {
        let n = shape[0] * shape[1];
        for len in [values.len(), fluxes.len(), weights.len(), gradients.len()] {
            if len != n {
                return Err(Error::GridMismatch { expected: n, found: len });
            }
        }
        if n == 0 {
            return Err(Error::EmptySupport);
        }
        if weights.iter().any(|&w| !(w >= T::zero())) {
            return Err(Error::InvalidInput("quadrature weights must be nonnegative".into()));
        }
        if values.iter().chain(&fluxes).chain(&gradients).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("trace samples must be finite".into()));
        }
        Ok(Self { values, fluxes, weights, gradients, shape })
    }

    /// Synthesizes `u|Γ₁`, `∂u/∂ν|Γ₁` and `|∇_{x'} u|` on the basis grid.
    pub fn from_traces(u_trace: &TraceFunction<T>, flux_trace: &TraceFunction<T>) -> Result<Self> {
        u_trace.check_same_basis(flux_trace)?;
        let basis = u_trace.basis();
        let section = basis.cross_section();
        let values = basis.synthesize(u_trace.coefficients())?;
        let fluxes = basis.synthesize(flux_trace.coefficients())?;
        let gradients = basis
            .synthesize_gradient(u_trace.coefficients())?
            .into_iter()
            .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
            .collect();
        let weights = vec![section.cell_measure(); values.len()];
        let res = section.resolution();
        let shape = [res[0], if section.axes() == 2 { res[1] } else { 1 }];
        Self::new(values, fluxes, weights, gradients, shape)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn fluxes(&self) -> &[T] {
        &self.fluxes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn gradients(&self) -> &[T] {
        &self.gradients
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ w_i`, the quadrature measure of `Γ₁`.
    pub fn measure(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// `(min u, max u)`.
    pub fn range(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Interior grid nodes that are discrete extrema of `u` against their
    /// axis neighbours (ties allowed, not all equal).
    fn critical_nodes(&self) -> Vec<bool> {
        let [nx, ny] = self.shape;
        let u = &self.values;
        let mut out = vec![false; u.len()];
        for j in 0..ny {
            for i in 0..nx {
                let idx = j * nx + i;
                let mut neighbours = Vec::with_capacity(4);
                if nx > 1 {
                    if i == 0 || i + 1 == nx {
                        continue;
                    }
                    neighbours.extend([u[idx - 1], u[idx + 1]]);
                }
                if ny > 1 {
                    if j == 0 || j + 1 == ny {
                        continue;
                    }
                    neighbours.extend([u[idx - nx], u[idx + nx]]);
                }
                let c = u[idx];
                let max = neighbours.iter().all(|&v| c >= v) && neighbours.iter().any(|&v| c > v);
                let min = neighbours.iter().all(|&v| c <= v) && neighbours.iter().any(|&v| c < v);
                out[idx] = max || min;
            }
        }
        out
    }
}

/// Binning controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentifyOptions<T> {
    pub bins: usize,
    /// Gradient floor; `None` selects `1e-3 · (range of u) / |Γ₁|`, `Some(0)`
    /// disables the regularity test.
    pub delta: Option<T>,
    /// Minimum total weight of a flagged bin.
    pub min_weight: T,
}

impl<T: Real> Default for IdentifyOptions<T> {
    fn default() -> Self {
        Self { bins: 32, delta: None, min_weight: T::zero() }
    }
}

impl<T: Real> IdentifyOptions<T> {
    pub fn with_bins(bins: usize) -> Self {
        Self { bins, ..Self::default() }
    }

    pub fn resolved_delta(&self, samples: &TraceSamples<T>) -> T {
        self.delta.unwrap_or_else(|| {
            let (lo, hi) = samples.range();
            T::lit(1e-3) * (hi - lo) / samples.measure()
        })
    }
}

/// Per-bin accumulation over `V = [lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetBinning<T> {
    pub lo: T,
    pub hi: T,
    pub delta: T,
    pub weight: Vec<T>,
    pub weighted_flux: Vec<T>,
    pub weighted_flux_sq: Vec<T>,
    pub min_gradient: Vec<T>,
    pub count: Vec<usize>,
    pub critical: Vec<usize>,
    pub flagged: Vec<bool>,
}

impl<T: Real> LevelSetBinning<T> {
    pub fn bins(&self) -> usize {
        self.weight.len()
    }

    pub fn width(&self) -> T {
        (self.hi - self.lo) / T::of_usize(self.bins())
    }

    pub fn center(&self, i: usize) -> T {
        self.lo + (T::of_usize(i) + T::lit(0.5)) * self.width()
    }

    /// Bin holding `t`; values outside `V` map to the end bins.
    pub fn index_of(&self, t: T) -> usize {
        let b = self.bins();
        let w = self.width();
        if !(w > T::zero()) {
            return 0;
        }
        let x = ((t - self.lo) / w).floor();
        if !(x > T::zero()) {
            0
        } else {
            x.to_usize().unwrap_or(b - 1).min(b - 1)
        }
    }

    fn accumulate(samples: &TraceSamples<T>, opts: &IdentifyOptions<T>) -> Result<Self> {
        if opts.bins < 2 {
            return Err(Error::InvalidInput(format!("at least two bins are required, got {}", opts.bins)));
        }
        let delta = opts.resolved_delta(samples);
        if !(delta >= T::zero()) {
            return Err(Error::InvalidInput(format!("gradient floor must be nonnegative, got {delta}")));
        }
        let (lo, hi) = samples.range();
        let bins = if hi > lo { opts.bins } else { 1 };
        let mut out = Self {
            lo,
            hi,
            delta,
            weight: vec![T::zero(); bins],
            weighted_flux: vec![T::zero(); bins],
            weighted_flux_sq: vec![T::zero(); bins],
            min_gradient: vec![T::infinity(); bins],
            count: vec![0; bins],
            critical: vec![0; bins],
            flagged: vec![false; bins],
        };
        let critical = samples.critical_nodes();
        for i in 0..samples.len() {
            let b = out.index_of(samples.values[i]);
            let (w, q) = (samples.weights[i], samples.fluxes[i]);
            out.weight[b] += w;
            out.weighted_flux[b] += w * q;
            out.weighted_flux_sq[b] += w * q * q;
            out.min_gradient[b] = out.min_gradient[b].min(samples.gradients[i]);
            out.count[b] += 1;
            out.critical[b] += critical[i] as usize;
        }
        for b in 0..bins {
            let regular = delta == T::zero() || (out.min_gradient[b] >= delta && out.critical[b] == 0);
            out.flagged[b] = out.count[b] > 0 && out.weight[b] > T::zero() && out.weight[b] >= opts.min_weight && regular;
        }
        Ok(out)
    }
}

/// Per-bin regularity diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct BinDiagnostic<T> {
    pub center: T,
    pub min_gradient: T,
    pub nodes: usize,
    pub critical_nodes: usize,
    pub flagged: bool,
}

/// Regularity of each level bin of `u|Γ₁`.
pub fn regular_value_report<T: Real>(
    samples: &TraceSamples<T>,
    opts: &IdentifyOptions<T>,
) -> Result<Vec<BinDiagnostic<T>>> {
    let binning = LevelSetBinning::accumulate(samples, opts)?;
    Ok((0..binning.bins())
        .map(|b| BinDiagnostic {
            center: binning.center(b),
            min_gradient: binning.min_gradient[b],
            nodes: binning.count[b],
            critical_nodes: binning.critical[b],
            flagged: binning.flagged[b],
        })
        .collect())
}

/// How a table is evaluated between bin centres.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableEval {
    /// Linear interpolation through flagged bin centres, clamped.
    Linear,
    /// Value of the bin holding `t` (every nonempty bin).
    BinConstant,
}

/// Reconstructed `f_ε` on the bins of `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearityTable<T> {
    pub binning: LevelSetBinning<T>,
    /// Bin means; zero on empty bins.
    pub values: Vec<T>,
    /// Weighted variance of the flux inside each bin.
    pub dispersion: Vec<T>,
    /// Shift subtracted so that `f(0) = 0`, if anchored.
    pub anchor_shift: Option<T>,
}

impl<T: Real> NonlinearityTable<T> {
    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.bins()).map(|b| self.binning.center(b)).collect()
    }

    pub fn bin_width(&self) -> T {
        self.binning.width()
    }

    pub fn flagged(&self) -> &[bool] {
        &self.binning.flagged
    }

    /// Flagged bins away from the two ends of `V`, or every flagged bin when
    /// none are interior.
    pub fn interior_flagged(&self) -> Vec<usize> {
        let b = self.bins();
        let interior: Vec<usize> = (1..b.saturating_sub(1)).filter(|&i| self.binning.flagged[i]).collect();
        if interior.is_empty() {
            (0..b).filter(|&i| self.binning.flagged[i]).collect()
        } else {
            interior
        }
    }

    pub fn eval(&self, t: T, mode: TableEval) -> T {
        match mode {
            TableEval::BinConstant => self.values[self.binning.index_of(t)],
            TableEval::Linear => {
                let knots: Vec<(T, T)> = (0..self.bins())
                    .filter(|&i| self.binning.flagged[i])
                    .map(|i| (self.binning.center(i), self.values[i]))
                    .collect();
                match knots.len() {
                    0 => self.values[self.binning.index_of(t)],
                    _ => interpolate_clamped(&knots, t),
                }
            }
        }
    }

    /// Copy shifted so that the linear interpolant vanishes at `0`, when
    /// `0 ∈ V`.
    pub fn anchored(&self) -> Self {
        if !(self.binning.lo <= T::zero() && self.binning.hi >= T::zero()) {
            return self.clone();
        }
        let shift = self.eval(T::zero(), TableEval::Linear);
        let mut out = self.clone();
        for (v, &w) in out.values.iter_mut().zip(&self.binning.weight) {
            if w > T::zero() {
                *v -= shift;
            }
        }
        out.anchor_shift = Some(shift);
        out
    }

    /// Copy with new bin values on the same binning.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.bins() {
            return Err(Error::SizeMismatch { max: self.bins(), found: values.len() });
        }
        Ok(Self { values, ..self.clone() })
    }

    /// `max |f_i - f(t_i)|` over [`interior_flagged`](Self::interior_flagged) bins.
    pub fn sup_error(&self, truth: impl Fn(T) -> T) -> Result<T> {
        let idx = self.interior_flagged();
        if idx.is_empty() {
            return Err(Error::EmptySupport);
        }
        Ok(idx
            .into_iter()
            .map(|i| (self.values[i] - truth(self.binning.center(i))).abs())
            .fold(T::zero(), T::max))
    }
}

fn interpolate_clamped<T: Real>(knots: &[(T, T)], t: T) -> T {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = knots.partition_point(|k| k.0 <= t);
    let (a, b) = (knots[i - 1], knots[i]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Bin-averaged flux table from sampled traces.
pub fn identify_samples<T: Real>(samples: &TraceSamples<T>, opts: &IdentifyOptions<T>) -> Result<NonlinearityTable<T>> {
    let binning = LevelSetBinning::accumulate(samples, opts)?;
    let mut values = vec![T::zero(); binning.bins()];
    let mut dispersion = vec![T::zero(); binning.bins()];
    for b in 0..binning.bins() {
        let w = binning.weight[b];
        if w > T::zero() {
            let mean = binning.weighted_flux[b] / w;
            values[b] = mean;
            dispersion[b] = (binning.weighted_flux_sq[b] / w - mean * mean).max(T::zero());
        }
    }
    debug!(
        "identified {} bins on [{}, {}], {} flagged",
        binning.bins(),
        binning.lo,
        binning.hi,
        binning.flagged.iter().filter(|&&f| f).count()
    );
    Ok(NonlinearityTable { binning, values, dispersion, anchor_shift: None })
}

/// Bin-averaged flux table from `Γ₁` traces.
pub fn identify<T: Real>(
    u_trace: &TraceFunction<T>,
    flux_trace: &TraceFunction<T>,
    opts: &IdentifyOptions<T>,
) -> Result<NonlinearityTable<T>> {
    identify_samples(&TraceSamples::from_traces(u_trace, flux_trace)?, opts)
}

/// `Σ w_i (f(u_i) - q_i)²`.
pub fn best_fit<T: Real>(table: &NonlinearityTable<T>, samples: &TraceSamples<T>, mode: TableEval) -> T {
    let (lo, hi) = (table.binning.lo, table.binning.hi);
    let mut outside = 0usize;
    let total = (0..samples.len())
        .map(|i| {
            let u = samples.values[i];
            if u < lo || u > hi {
                outside += 1;
            }
            let r = table.eval(u, mode) - samples.fluxes[i];
            samples.weights[i] * r * r
        })
        .sum();
    if outside > 0 {
        debug!("best_fit: {outside} nodes outside the table range evaluated by clamping");
    }
    total
}
