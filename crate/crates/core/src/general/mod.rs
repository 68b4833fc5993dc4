//! Cauchy problem for `div(σ∇u) = 0` on a rectangle with variable
//! conductivity, discretized by bilinear elements on a uniform grid.
//!
//! The sides are split into `Σ` (Cauchy data), `Γ` (unknown), grounded and
//! insulated parts. `T_ρ` maps a Neumann flux `h` on `Γ` to the flux on
//! `Σ_ρ` of the solution with `v = 0` on `Σ`; it is assembled densely in
//! weighted sine bases so that matrix norms realize `H½₀₀*` norms, inverted
//! by truncated SVD, and the final field solves the mixed problem with the
//! regularized flux on `Γ`.

mod assembly;
mod banded;
mod conductivity;
mod grid;
mod svd;

use std::collections::HashMap;
use std::sync::OnceLock;

use log::warn;
use rayon::prelude::*;

pub use assembly::{consistent_load, Stiffness};
pub use banded::BandedCholesky;
pub use conductivity::{ConductivityField, Tensor2};
pub use grid::{BoundaryPartition, RectGrid, Side, SideRole};
pub use svd::{jacobi_svd, DenseMatrix, Svd};

use crate::cylinder::{CutoffPolicy, RegularizationConfig};
use crate::error::{Error, Result};
use crate::real::Real;

/// Discretization controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralOptions<T> {
    /// Sine modes per unknown side.
    pub gamma_modes: usize,
    /// Sine modes per Cauchy side on `Σ_ρ`.
    pub sigma_modes: usize,
    /// Weight `θ` of the consistent bilinear form against the edge-lumped one.
    pub blend: T,
}

impl<T: Real> Default for GeneralOptions<T> {
    fn default() -> Self {
        Self { gamma_modes: 16, sigma_modes: 16, blend: T::lit(0.5) }
    }
}

/// Sine mode `k` on `(a, b)`, zero outside, sampled at `coords`, together
/// with its eigenvalue `(kπ / (b - a))²`.
fn sine_mode<T: Real>(coords: &[T], a: T, b: T, k: usize) -> (Vec<T>, T) {
    let len = b - a;
    let w = T::of_usize(k) * T::PI() / len;
    let amp = (T::lit(2.0) / len).sqrt();
    let samples = coords
        .iter()
        .map(|&s| if s >= a && s <= b { amp * (w * (s - a)).sin() } else { T::zero() })
        .collect();
    (samples, w * w)
}

/// Nodal field on the grid.
pub type GridField<T> = Vec<T>;

/// Degree of freedom of `T_ρ`: mode `k` (1-based) on a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SideMode {
    pub side: Side,
    pub k: usize,
}

/// Dense `T_ρ` with row and column labels.
#[derive(Clone, Debug)]
pub struct DiscreteOperator<T> {
    pub matrix: DenseMatrix<T>,
    pub rows: Vec<SideMode>,
    pub cols: Vec<SideMode>,
}

/// Verified numerical SVD of `T_ρ`.
#[derive(Clone, Debug)]
pub struct NumericSvd<T> {
    pub svd: Svd<T>,
    pub residual: T,
}

impl<T: Real> NumericSvd<T> {
    pub fn values(&self) -> &[T] {
        &self.svd.values
    }
}

/// Measured data on one Cauchy side at its nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SideData<T> {
    pub psi: Vec<T>,
    pub g: Vec<T>,
}

/// Reconstructed traces on one unknown side.
#[derive(Clone, Debug)]
pub struct SideTrace<T> {
    pub side: Side,
    /// `u_ε` at the side nodes.
    pub values: Vec<T>,
    /// `σ∇u_ε·ν` at the side nodes, synthesized from `flux_coefficients`.
    pub flux: Vec<T>,
    /// `∫ u_ε φ_j` for `j = 1..=gamma_modes`.
    pub u_coefficients: Vec<T>,
    /// `∫ σ∇u_ε·ν φ_j` for `j = 1..=gamma_modes`.
    pub flux_coefficients: Vec<T>,
}

/// Result of [`GeneralProblem::solve_regularized_cauchy`].
#[derive(Clone, Debug)]
pub struct GeneralReconstruction<T> {
    pub field: GridField<T>,
    pub traces: Vec<SideTrace<T>>,
    pub cutoff: usize,
    pub alpha: T,
}

struct Factored<T> {
    factor: BandedCholesky<T>,
    free: Vec<usize>,
}

type OperatorSvd<T> = (DiscreteOperator<T>, NumericSvd<T>);

/// Discretized domain with cached factorizations.
pub struct GeneralProblem<T> {
    grid: RectGrid<T>,
    sigma: ConductivityField<T>,
    partition: BoundaryPartition<T>,
    opts: GeneralOptions<T>,
    stiffness: Stiffness<T>,
    mixed: OnceLock<std::result::Result<Factored<T>, Error>>,
    lift: OnceLock<std::result::Result<Factored<T>, Error>>,
    svd: OnceLock<std::result::Result<OperatorSvd<T>, Error>>,
}

impl<T: Real> GeneralProblem<T> {
    pub fn new(
        grid: RectGrid<T>,
        sigma: ConductivityField<T>,
        partition: BoundaryPartition<T>,
        opts: GeneralOptions<T>,
    ) -> Result<Self> {
        sigma.ellipticity()?;
        if !(opts.blend >= T::zero() && opts.blend <= T::one()) {
            return Err(Error::InvalidInput(format!("blend must lie in [0, 1], got {}", opts.blend)));
        }
        if opts.gamma_modes == 0 || opts.sigma_modes == 0 {
            return Err(Error::InvalidInput("mode counts must be positive".into()));
        }
        partition.validate(&grid, opts.sigma_modes)?;
        for side in partition.sides_with(SideRole::Unknown) {
            let cells = grid.side_nodes(side).len() - 1;
            if cells < 2 * opts.gamma_modes {
                return Err(Error::InvalidInput(format!(
                    "the {} side has {cells} cells, need at least {} for {} modes",
                    side.name(),
                    2 * opts.gamma_modes,
                    opts.gamma_modes
                )));
            }
        }
        let stiffness = Stiffness::assemble(&grid, &sigma, opts.blend);
        Ok(Self {
            grid,
            sigma,
            partition,
            opts,
            stiffness,
            mixed: OnceLock::new(),
            lift: OnceLock::new(),
            svd: OnceLock::new(),
        })
    }

    pub fn grid(&self) -> &RectGrid<T> {
        &self.grid
    }

    pub fn conductivity(&self) -> &ConductivityField<T> {
        &self.sigma
    }

    pub fn partition(&self) -> &BoundaryPartition<T> {
        &self.partition
    }

    pub fn options(&self) -> &GeneralOptions<T> {
        &self.opts
    }

    pub fn stiffness(&self) -> &Stiffness<T> {
        &self.stiffness
    }

    fn factored(&self, dirichlet: impl Fn(usize) -> bool) -> Result<Factored<T>> {
        let n = self.grid.node_count();
        let mut slot = vec![None; n];
        let mut free = Vec::new();
        for node in 0..n {
            if !dirichlet(node) {
                slot[node] = Some(free.len());
                free.push(node);
            }
        }
        let mut entries = Vec::with_capacity(free.len() * 5);
        for (r, &node) in free.iter().enumerate() {
            for (col, v) in self.stiffness.row(node) {
                if let Some(c) = slot[col] {
                    if c <= r {
                        entries.push((r, c, v));
                    }
                }
            }
        }
        let factor = BandedCholesky::factor(free.len(), entries)?;
        Ok(Factored { factor, free })
    }

    fn mixed_factor(&self) -> Result<&Factored<T>> {
        self.mixed
            .get_or_init(|| self.factored(|node| self.partition.is_mixed_dirichlet(&self.grid, node)))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn lift_factor(&self) -> Result<&Factored<T>> {
        self.lift
            .get_or_init(|| self.factored(|node| self.partition.is_lift_dirichlet(&self.grid, node)))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Solves with prescribed values on Dirichlet nodes (`dirichlet`, zero
    /// elsewhere) and a nodal load on free nodes.
    fn solve_with(&self, f: &Factored<T>, dirichlet: &[T], load: &[T]) -> GridField<T> {
        let lifted = self.stiffness.apply(dirichlet);
        let rhs: Vec<T> = f.free.iter().map(|&node| load[node] - lifted[node]).collect();
        let x = f.factor.solve(&rhs);
        let mut out = dirichlet.to_vec();
        for (&node, v) in f.free.iter().zip(x) {
            out[node] = v;
        }
        out
    }

    fn neumann_load(&self, data: &[(Side, Vec<T>)]) -> Result<Vec<T>> {
        let mut load = vec![T::zero(); self.grid.node_count()];
        for (side, h) in data {
            let nodes = self.grid.side_nodes(*side);
            if h.len() != nodes.len() {
                return Err(Error::GridMismatch { expected: nodes.len(), found: h.len() });
            }
            for (&node, v) in nodes.iter().zip(consistent_load(h, self.grid.side_spacing(*side))) {
                load[node] += v;
            }
        }
        Ok(load)
    }

    /// `div(σ∇v) = 0`, `v = 0` on Cauchy and grounded sides, `σ∇v·ν = h` on
    /// the listed sides (nodal values), zero flux elsewhere.
    pub fn solve_mixed(&self, neumann: &[(Side, Vec<T>)]) -> Result<GridField<T>> {
        for (side, _) in neumann {
            if matches!(self.partition.role(*side), SideRole::Cauchy | SideRole::Grounded) {
                return Err(Error::InvalidInput(format!("the {} side carries a Dirichlet condition", side.name())));
            }
        }
        let f = self.mixed_factor()?;
        let load = self.neumann_load(neumann)?;
        Ok(self.solve_with(f, &vec![T::zero(); self.grid.node_count()], &load))
    }

    /// Harmonic lift `W = ψ` on Cauchy sides, zero on unknown and grounded
    /// sides, insulated elsewhere.
    pub fn dirichlet_lift(&self, psi: &[(Side, Vec<T>)]) -> Result<GridField<T>> {
        let f = self.lift_factor()?;
        let mut values = vec![T::zero(); self.grid.node_count()];
        for (side, p) in psi {
            if self.partition.role(*side) != SideRole::Cauchy {
                return Err(Error::InvalidInput(format!("the {} side is not a Cauchy side", side.name())));
            }
            let nodes = self.grid.side_nodes(*side);
            if p.len() != nodes.len() {
                return Err(Error::GridMismatch { expected: nodes.len(), found: p.len() });
            }
            for (&node, &v) in nodes.iter().zip(p) {
                // nodes shared with a grounded or unknown side keep zero
                let shared = self.grid.sides_of(node).iter().any(|&s| {
                    matches!(self.partition.role(s), SideRole::Grounded | SideRole::Unknown)
                });
                if !shared {
                    values[node] = v;
                }
            }
        }
        Ok(self.solve_with(f, &values, &vec![T::zero(); self.grid.node_count()]))
    }

    /// Weak boundary flux `∫ σ∇v·ν φ_i` at every node (zero at free nodes of
    /// a discrete solution).
    pub fn boundary_flux(&self, v: &[T]) -> Vec<T> {
        self.stiffness.apply(v)
    }

    fn gamma_basis(&self) -> Vec<(SideMode, Vec<T>, T)> {
        let mut out = Vec::new();
        for side in self.partition.sides_with(SideRole::Unknown) {
            let coords = self.grid.side_coords(side);
            let len = self.grid.side_length(side);
            for k in 1..=self.opts.gamma_modes {
                let (phi, lam) = sine_mode(&coords, T::zero(), len, k);
                out.push((SideMode { side, k }, phi, lam));
            }
        }
        out
    }

    fn sigma_basis(&self) -> Result<Vec<(SideMode, Vec<T>, T)>> {
        let mut out = Vec::new();
        for side in self.partition.sides_with(SideRole::Cauchy) {
            let coords = self.grid.side_coords(side);
            let (a, b) = self.partition.margin_interval(&self.grid, side)?;
            for k in 1..=self.opts.sigma_modes {
                let (phi, lam) = sine_mode(&coords, a, b, k);
                out.push((SideMode { side, k }, phi, lam));
            }
        }
        Ok(out)
    }

    /// `λ_k^{-1/4} Σ_i F_i φ_k(s_i)` for every `Σ_ρ` mode, where `F` is a
    /// nodal weak flux.
    fn sigma_coefficients(&self, basis: &[(SideMode, Vec<T>, T)], flux: &[T]) -> Vec<T> {
        basis
            .iter()
            .map(|(m, phi, lam)| {
                let nodes = self.grid.side_nodes(m.side);
                let s: T = nodes.iter().zip(phi).map(|(&n, &p)| flux[n] * p).sum();
                s / lam.powf(T::lit(0.25))
            })
            .collect()
    }

    /// Column `j` is the weighted `Σ_ρ` flux of the mixed solution driven by
    /// `λ_j^{1/4} φ_j` on its unknown side.
    pub fn assemble_t_rho(&self) -> Result<DiscreteOperator<T>> {
        let gamma = self.gamma_basis();
        let sigma = self.sigma_basis()?;
        self.mixed_factor()?;
        let columns: Vec<Vec<T>> = gamma
            .par_iter()
            .map(|(m, phi, lam)| {
                let h: Vec<T> = phi.iter().map(|&p| p * lam.powf(T::lit(0.25))).collect();
                let v = self.solve_mixed(&[(m.side, h)])?;
                Ok(self.sigma_coefficients(&sigma, &self.boundary_flux(&v)))
            })
            .collect::<Result<_>>()?;
        let matrix = DenseMatrix::from_columns(sigma.len(), &columns)?;
        if !matrix.is_finite() {
            return Err(Error::SvdFailure("operator has non-finite entries".into()));
        }
        Ok(DiscreteOperator {
            matrix,
            rows: sigma.into_iter().map(|b| b.0).collect(),
            cols: gamma.into_iter().map(|b| b.0).collect(),
        })
    }

    /// Cached `T_ρ` and its verified SVD.
    pub fn operator_svd(&self) -> Result<&(DiscreteOperator<T>, NumericSvd<T>)> {
        self.svd
            .get_or_init(|| {
                let op = self.assemble_t_rho()?;
                let svd = numeric_svd(&op)?;
                Ok((op, svd))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// `Γ` Neumann data `Σ_j c_j λ_j^{1/4} φ_j` at the nodes of each unknown
    /// side.
    pub fn gamma_flux_from_coefficients(&self, coeffs: &[T]) -> Result<Vec<(Side, Vec<T>)>> {
        let basis = self.gamma_basis();
        if coeffs.len() != basis.len() {
            return Err(Error::SizeMismatch { max: basis.len(), found: coeffs.len() });
        }
        let mut by_side: HashMap<Side, Vec<T>> = HashMap::new();
        for ((m, phi, lam), &c) in basis.iter().zip(coeffs) {
            let entry = by_side.entry(m.side).or_insert_with(|| vec![T::zero(); phi.len()]);
            let scale = c * lam.powf(T::lit(0.25));
            for (e, &p) in entry.iter_mut().zip(phi) {
                *e += scale * p;
            }
        }
        let mut out: Vec<(Side, Vec<T>)> = by_side.into_iter().collect();
        out.sort_by_key(|(s, _)| *s);
        Ok(out)
    }

    /// Weighted `Σ_ρ` coefficients of `g - σ∇W·ν` for the measured data.
    pub fn defect(&self, data: &[(Side, SideData<T>)]) -> Result<(Vec<T>, GridField<T>)> {
        let psi: Vec<(Side, Vec<T>)> = data.iter().map(|(s, d)| (*s, d.psi.clone())).collect();
        let w = self.dirichlet_lift(&psi)?;
        let mut flux = self.boundary_flux(&w).into_iter().map(|v| -v).collect::<Vec<_>>();
        for (side, d) in data {
            let nodes = self.grid.side_nodes(*side);
            if d.g.len() != nodes.len() {
                return Err(Error::GridMismatch { expected: nodes.len(), found: d.g.len() });
            }
            for (&node, v) in nodes.iter().zip(consistent_load(&d.g, self.grid.side_spacing(*side))) {
                flux[node] += v;
            }
        }
        Ok((self.sigma_coefficients(&self.sigma_basis()?, &flux), w))
    }

    /// Regularized solution from Cauchy data on every Cauchy side.
    pub fn solve_regularized_cauchy(
        &self,
        data: &[(Side, SideData<T>)],
        cfg: &RegularizationConfig<T>,
    ) -> Result<GeneralReconstruction<T>> {
        let cfg = cfg.validated()?;
        let cauchy = self.partition.sides_with(SideRole::Cauchy);
        let mut given: Vec<Side> = data.iter().map(|(s, _)| *s).collect();
        given.sort();
        if given != cauchy {
            return Err(Error::InvalidInput("data must be given on every Cauchy side exactly once".into()));
        }
        let (_, svd) = self.operator_svd()?;
        let (defect, w) = self.defect(data)?;
        let (coeffs, cutoff) = regularized_invert(svd, &defect, &cfg)?;
        let h = self.gamma_flux_from_coefficients(&coeffs)?;
        let u = self.solve_mixed(&h)?;
        let field: Vec<T> = u.iter().zip(&w).map(|(&a, &b)| a + b).collect();
        let w_flux = self.boundary_flux(&w);

        let mut traces = Vec::new();
        for side in self.partition.sides_with(SideRole::Unknown) {
            let nodes = self.grid.side_nodes(side);
            let coords = self.grid.side_coords(side);
            let len = self.grid.side_length(side);
            let step = self.grid.side_spacing(side);
            let values: Vec<T> = nodes.iter().map(|&n| field[n]).collect();
            let mass_u = consistent_load(&values, step);
            let gamma_h = h.iter().find(|(s, _)| *s == side).map(|(_, v)| v.clone()).unwrap_or_default();
            let mut u_coefficients = Vec::new();
            let mut flux_coefficients = Vec::new();
            let mut modes = Vec::new();
            for k in 1..=self.opts.gamma_modes {
                let (phi, _) = sine_mode(&coords, T::zero(), len, k);
                u_coefficients.push(mass_u.iter().zip(&phi).map(|(&a, &b)| a * b).sum());
                let from_h: T = consistent_load(&gamma_h, step).iter().zip(&phi).map(|(&a, &b)| a * b).sum();
                let from_w: T = nodes.iter().zip(&phi).map(|(&n, &p)| w_flux[n] * p).sum();
                flux_coefficients.push(from_h + from_w);
                modes.push(phi);
            }
            let flux = (0..nodes.len())
                .map(|i| modes.iter().zip(&flux_coefficients).map(|(phi, &c)| c * phi[i]).sum())
                .collect();
            traces.push(SideTrace { side, values, flux, u_coefficients, flux_coefficients });
        }
        Ok(GeneralReconstruction { field, traces, cutoff, alpha: cfg.alpha() })
    }
}

/// One-sided Jacobi SVD of `T_ρ`, verified to `1e-8`.
pub fn numeric_svd<T: Real>(op: &DiscreteOperator<T>) -> Result<NumericSvd<T>> {
    let svd = jacobi_svd(&op.matrix)?;
    let residual = svd.residual(&op.matrix);
    let scale = svd.values.first().copied().unwrap_or(T::zero()).max(T::one());
    if !(residual <= T::lit(1e-8) * scale) {
        return Err(Error::SvdFailure(format!("verification residual {residual:e} exceeds 1e-8")));
    }
    Ok(NumericSvd { svd, residual })
}

/// `Σ_{kept} s_k⁻¹ ⟨data, u_k⟩ v_k` and the number of kept triples.
pub fn regularized_invert<T: Real>(
    svd: &NumericSvd<T>,
    data: &[T],
    cfg: &RegularizationConfig<T>,
) -> Result<(Vec<T>, usize)> {
    let cfg = cfg.validated()?;
    let s = &svd.svd;
    let cols = s.right.first().map_or(0, Vec::len);
    if s.left.first().is_some_and(|u| u.len() != data.len()) {
        return Err(Error::SizeMismatch { max: s.left[0].len(), found: data.len() });
    }
    let alpha = cfg.alpha();
    let kept = match cfg.policy {
        CutoffPolicy::Literal => CutoffPolicy::literal_count(cfg.eps, cfg.gamma, 2).min(s.values.len()),
        policy => s.values.iter().take_while(|&&v| v > T::zero() && policy.keeps(v, alpha)).count(),
    };
    let mut out = vec![T::zero(); cols];
    if kept == 0 {
        warn!("no singular value passes the cutoff at alpha = {alpha:e}; returning zero flux");
        return Ok((out, 0));
    }
    for j in 0..kept {
        let coef = s.left[j].iter().zip(data).map(|(&a, &b)| a * b).sum::<T>() / s.values[j];
        for (o, &v) in out.iter_mut().zip(&s.right[j]) {
            *o += coef * v;
        }
    }
    Ok((out, kept))
}
