use std::path::{Path, PathBuf};
use std::sync::Arc;

use cauchy_core::{
    BoundaryPartition, ConductivityField, CrossSection, CutoffPolicy, DirectOptions, IdentifyOptions, NonlinearLaw,
    RectGrid, RegularizationConfig, SpectralBasis, TraceFunction, TraceSpace,
};
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

/// Experiment description. Every field has a default, and the resolved
/// values are copied into each report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub law: LawConfig,
    pub flux: FluxConfig,
    pub noise: NoiseConfig,
    pub regularization: RegularizationSection,
    pub direct: DirectSection,
    pub identify: IdentifySection,
    pub general: GeneralSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    /// `interval` or `rectangle`.
    pub cross_section: String,
    pub extents: Vec<f64>,
    pub resolution: Vec<usize>,
    pub modes: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { cross_section: "interval".into(), extents: vec![1.0], resolution: vec![512], modes: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawConfig {
    /// `linear`, `saturating` or `piecewise`.
    pub kind: String,
    /// Slope for `linear`, scale for `saturating`.
    pub a: f64,
    /// `[u, f(u)]` knots for `piecewise`.
    pub knots: Vec<[f64; 2]>,
}

impl Default for LawConfig {
    fn default() -> Self {
        Self { kind: "linear".into(), a: 0.2, knots: Vec::new() }
    }
}

/// Prescribed flux on `Γ₂` as mode coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluxConfig {
    pub coefficients: Vec<f64>,
}

impl Default for FluxConfig {
    fn default() -> Self {
        Self { coefficients: vec![1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub eps: Vec<f64>,
    /// Regularization level used when a point has `ε = 0`.
    pub zero_floor: f64,
    pub seed: u64,
    pub on_dirichlet: bool,
    pub on_flux: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { eps: vec![1e-1, 1e-2, 1e-3, 1e-4], zero_floor: 1e-12, seed: 42, on_dirichlet: true, on_flux: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationSection {
    pub gamma: f64,
    /// `mu-squared`, `mu-threshold` or `literal`.
    pub policy: String,
}

impl Default for RegularizationSection {
    fn default() -> Self {
        Self { gamma: 0.5, policy: CutoffPolicy::default().name().into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectSection {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub energy_bound: Option<f64>,
    pub check_range: [f64; 2],
    /// Margin `r₀` of the reported flux lower bound.
    pub margin: f64,
}

impl Default for DirectSection {
    fn default() -> Self {
        let d = DirectOptions::<f64>::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            damping: d.damping,
            energy_bound: d.energy_bound,
            check_range: [d.check_range.0, d.check_range.1],
            margin: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifySection {
    pub bins: usize,
    /// Gradient floor; absent selects `1e-3 · range / |Γ₁|`.
    pub delta: Option<f64>,
    pub min_weight: f64,
}

impl Default for IdentifySection {
    fn default() -> Self {
        let d = IdentifyOptions::<f64>::default();
        Self { bins: d.bins, delta: d.delta, min_weight: d.min_weight }
    }
}

/// Finite-element reconstruction on the rectangle `(0, L) × (0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralSection {
    pub enabled: bool,
    /// Cells across the cylinder axis; cells along `Γ` follow the domain
    /// resolution.
    pub axial_cells: usize,
    pub gamma_modes: usize,
    pub sigma_modes: usize,
    pub blend: f64,
    /// Margin of `Σ_ρ`; absent selects 10% of the side.
    pub rho: Option<f64>,
    /// Conductivity file; absent means `σ = I`.
    pub conductivity: Option<PathBuf>,
}

impl Default for GeneralSection {
    fn default() -> Self {
        Self {
            enabled: false,
            axial_cells: 128,
            gamma_modes: 16,
            sigma_modes: 16,
            blend: 0.5,
            rho: None,
            conductivity: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Source text kept for line diagnostics.
#[derive(Clone, Debug, Default)]
pub struct Source {
    text: String,
}

impl Source {
    /// One-based line of `key` inside table `section` (`section.key`).
    pub fn line_of(&self, field: &str) -> Option<usize> {
        let (section, key) = field.split_once('.')?;
        let key = key.split(['.', '[']).next()?;
        let mut current = String::new();
        for (n, raw) in self.text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = header.trim().to_string();
            } else if current == section {
                if let Some((k, _)) = line.split_once('=') {
                    if k.trim() == key {
                        return Some(n + 1);
                    }
                }
            }
        }
        None
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<(Self, Source), BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string().trim_end().to_string()))?;
        let source = Source { text: text.to_string() };
        cfg.validate().map_err(|e| with_line(e, &source))?;
        Ok((cfg, source))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let (mut cfg, _) = Self::parse(&text)?;
        if let Some(file) = cfg.general.conductivity.as_mut() {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
            cfg.conductivity()?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every module precondition reachable from the config.
    pub fn validate(&self) -> Result<(), BenchError> {
        let basis = self.basis()?;
        self.law()?;
        self.flux(&basis)?;
        if self.noise.eps.is_empty() {
            return Err(BenchError::field("noise.eps", "at least one noise level is required"));
        }
        for (i, &e) in self.noise.eps.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(BenchError::field(&format!("noise.eps[{i}]"), format!("must be finite and ≥ 0, got {e}")));
            }
        }
        if !(self.noise.zero_floor > 0.0 && self.noise.zero_floor.is_finite()) {
            return Err(BenchError::field("noise.zero_floor", "must be positive"));
        }
        for &e in &self.noise.eps {
            let cfg = self.regularization(e)?;
            cauchy_core::cutoff_index(&basis, &cfg).map_err(|err| BenchError::field("domain.modes", err.to_string()))?;
        }
        self.direct_options()?;
        let d = &self.direct;
        if !(d.margin >= 0.0 && d.margin.is_finite()) {
            return Err(BenchError::field("direct.margin", "must be finite and ≥ 0"));
        }
        self.identify_options()?;
        if self.general.enabled {
            self.check_general()?;
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(BenchError::field("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<Arc<SpectralBasis<f64>>, BenchError> {
        let d = &self.domain;
        let axes = match d.cross_section.as_str() {
            "interval" => 1,
            "rectangle" => 2,
            other => {
                return Err(BenchError::field(
                    "domain.cross_section",
                    format!("unknown cross-section `{other}`, expected `interval` or `rectangle`"),
                ))
            }
        };
        if d.extents.len() != axes {
            return Err(BenchError::field("domain.extents", format!("expected {axes} values, got {}", d.extents.len())));
        }
        if d.resolution.len() != axes {
            return Err(BenchError::field(
                "domain.resolution",
                format!("expected {axes} values, got {}", d.resolution.len()),
            ));
        }
        let section = if axes == 1 {
            CrossSection::interval(d.extents[0], d.resolution[0])
        } else {
            CrossSection::rectangle(d.extents[0], d.extents[1], d.resolution[0], d.resolution[1])
        }
        .map_err(|e| BenchError::field("domain.extents", e.to_string()))?;
        if d.modes == 0 {
            return Err(BenchError::field("domain.modes", "must be positive"));
        }
        let basis = SpectralBasis::build(section, d.modes).map_err(|e| BenchError::field("domain.modes", e.to_string()))?;
        cauchy_core::check_oversampling(&basis).map_err(|e| BenchError::field("domain.resolution", e.to_string()))?;
        Ok(Arc::new(basis))
    }

    pub fn law(&self) -> Result<NonlinearLaw<f64>, BenchError> {
        let l = &self.law;
        let law = match l.kind.as_str() {
            "linear" | "saturating" => {
                if !l.a.is_finite() {
                    return Err(BenchError::field("law.a", "must be finite"));
                }
                if l.kind == "linear" {
                    NonlinearLaw::linear(l.a)
                } else {
                    NonlinearLaw::saturating(l.a)
                }
            }
            "piecewise" => NonlinearLaw::piecewise(l.knots.iter().map(|k| (k[0], k[1])).collect())
                .map_err(|e| BenchError::field("law.knots", e.to_string()))?,
            other => {
                return Err(BenchError::field(
                    "law.kind",
                    format!("unknown law `{other}`, expected `linear`, `saturating` or `piecewise`"),
                ))
            }
        };
        let [lo, hi] = self.direct.check_range;
        law.validate(lo, hi, 2001).map_err(|e| BenchError::field("law", e.to_string()))?;
        Ok(law)
    }

    pub fn flux(&self, basis: &Arc<SpectralBasis<f64>>) -> Result<TraceFunction<f64>, BenchError> {
        let c = &self.flux.coefficients;
        if c.is_empty() {
            return Err(BenchError::field("flux.coefficients", "at least one coefficient is required"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(BenchError::field("flux.coefficients", "coefficients must be finite"));
        }
        TraceFunction::new(basis.clone(), c, TraceSpace::HalfZeroZeroDual)
            .map_err(|e| BenchError::field("flux.coefficients", e.to_string()))
    }

    pub fn policy(&self) -> Result<CutoffPolicy, BenchError> {
        CutoffPolicy::from_name(&self.regularization.policy).ok_or_else(|| {
            BenchError::field(
                "regularization.policy",
                format!(
                    "unknown policy `{}`, expected `mu-squared`, `mu-threshold` or `literal`",
                    self.regularization.policy
                ),
            )
        })
    }

    /// Regularization at noise level `eps`, using the floor when `eps = 0`.
    pub fn regularization(&self, eps: f64) -> Result<RegularizationConfig<f64>, BenchError> {
        let level = if eps > 0.0 { eps } else { self.noise.zero_floor };
        let policy = self.policy()?;
        RegularizationConfig::new(self.regularization.gamma, level)
            .map(|c| c.with_policy(policy))
            .map_err(|e| BenchError::field("regularization.gamma", e.to_string()))
    }

    pub fn direct_options(&self) -> Result<DirectOptions<f64>, BenchError> {
        let d = &self.direct;
        if !(d.tol > 0.0 && d.tol.is_finite()) {
            return Err(BenchError::field("direct.tol", "must be positive"));
        }
        if d.max_iter == 0 {
            return Err(BenchError::field("direct.max_iter", "must be positive"));
        }
        if !(d.damping > 0.0 && d.damping <= 1.0) {
            return Err(BenchError::field("direct.damping", "must lie in (0, 1]"));
        }
        if let Some(e) = d.energy_bound {
            if !(e > 0.0 && e.is_finite()) {
                return Err(BenchError::field("direct.energy_bound", "must be positive"));
            }
        }
        if d.check_range[0] >= d.check_range[1] || d.check_range.iter().any(|v| !v.is_finite()) {
            return Err(BenchError::field("direct.check_range", "must be a finite interval [lo, hi] with lo < hi"));
        }
        Ok(DirectOptions {
            tol: d.tol,
            max_iter: d.max_iter,
            damping: d.damping,
            energy_bound: d.energy_bound,
            check_range: (d.check_range[0], d.check_range[1]),
        })
    }

    pub fn identify_options(&self) -> Result<IdentifyOptions<f64>, BenchError> {
        let i = &self.identify;
        if i.bins < 2 {
            return Err(BenchError::field("identify.bins", "need at least 2 bins"));
        }
        if let Some(d) = i.delta {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(BenchError::field("identify.delta", "must be finite and ≥ 0"));
            }
        }
        if !(i.min_weight >= 0.0 && i.min_weight.is_finite()) {
            return Err(BenchError::field("identify.min_weight", "must be finite and ≥ 0"));
        }
        Ok(IdentifyOptions { bins: i.bins, delta: i.delta, min_weight: i.min_weight })
    }

    pub fn grid(&self) -> Result<RectGrid<f64>, BenchError> {
        if self.domain.cross_section != "interval" {
            return Err(BenchError::field("general.enabled", "the rectangle path needs an interval cross-section"));
        }
        RectGrid::new(self.domain.extents[0], 1.0, self.domain.resolution[0], self.general.axial_cells)
            .map_err(|e| BenchError::field("general.axial_cells", e.to_string()))
    }

    pub fn partition(&self) -> BoundaryPartition<f64> {
        BoundaryPartition::cylinder_like().with_rho(self.general.rho)
    }

    pub fn conductivity(&self) -> Result<ConductivityField<f64>, BenchError> {
        let extents = [self.domain.extents[0], 1.0];
        match &self.general.conductivity {
            None => Ok(ConductivityField::identity(extents)),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
                let sigma = ConductivityField::parse(&text, extents)
                    .map_err(|e| BenchError::field("general.conductivity", format!("{}: {e}", path.display())))?;
                sigma.ellipticity().map_err(|e| BenchError::field("general.conductivity", e.to_string()))?;
                Ok(sigma)
            }
        }
    }

    fn check_general(&self) -> Result<(), BenchError> {
        let g = &self.general;
        let grid = self.grid()?;
        if g.gamma_modes == 0 || g.sigma_modes == 0 {
            return Err(BenchError::field("general.gamma_modes", "mode counts must be positive"));
        }
        if g.gamma_modes > self.domain.modes {
            return Err(BenchError::field(
                "general.gamma_modes",
                format!("exceeds the {} modes of the spectral basis", self.domain.modes),
            ));
        }
        if 2 * g.gamma_modes > self.domain.resolution[0] {
            return Err(BenchError::field(
                "general.gamma_modes",
                format!("needs at least {} cells along Γ", 2 * g.gamma_modes),
            ));
        }
        if !(g.blend >= 0.0 && g.blend <= 1.0) {
            return Err(BenchError::field("general.blend", "must lie in [0, 1]"));
        }
        self.partition()
            .validate(&grid, g.sigma_modes)
            .map_err(|e| BenchError::field("general.rho", e.to_string()))?;
        Ok(())
    }
}

fn with_line(err: BenchError, source: &Source) -> BenchError {
    match err {
        BenchError::Field { field, message } => match source.line_of(&field) {
            Some(line) => BenchError::Field { message: format!("{message} (line {line})"), field },
            None => BenchError::Field { field, message },
        },
        other => other,
    }
}
