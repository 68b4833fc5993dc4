//! Dirichlet eigen-decomposition of `-Δ` on the cross-section `D`.
//!
//! `D` is an interval `(0, L)` (cylinder dimension `n = 2`) or a rectangle
//! `(0, Lx) × (0, Ly)` (`n = 3`). Eigenfunctions are the analytic sine
//! products
//!
//! ```text
//! interval   φ_k(x)   = √(2/L) sin(kπx/L),                     λ_k = (kπ/L)²
//! rectangle  φ_pq(x,y) = 2/√(Lx Ly) sin(pπx/Lx) sin(qπy/Ly),    λ_pq = (pπ/Lx)² + (qπ/Ly)²
//! ```
//!
//! sampled on a uniform cell-midpoint grid. The composite midpoint rule is
//! exact for products of retained modes, so `analyze` and `synthesize` are
//! mutually inverse on the retained span up to rounding.

use crate::error::{Error, Result};
use crate::real::Real;

/// Shape of the cross-section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossSectionKind {
    Interval,
    Rectangle,
}

/// Cross-section `D` together with its sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection<T> {
    kind: CrossSectionKind,
    extents: [T; 2],
    resolution: [usize; 2],
}

impl<T: Real> CrossSection<T> {
    pub const MIN_RESOLUTION: usize = 4;

    pub fn interval(length: T, resolution: usize) -> Result<Self> {
        check_extent(length, "interval length")?;
        check_resolution(resolution)?;
        Ok(Self {
            kind: CrossSectionKind::Interval,
            extents: [length, T::one()],
            resolution: [resolution, 1],
        })
    }

    pub fn rectangle(lx: T, ly: T, nx: usize, ny: usize) -> Result<Self> {
        check_extent(lx, "rectangle extent x")?;
        check_extent(ly, "rectangle extent y")?;
        check_resolution(nx)?;
        check_resolution(ny)?;
        Ok(Self {
            kind: CrossSectionKind::Rectangle,
            extents: [lx, ly],
            resolution: [nx, ny],
        })
    }

    pub fn kind(&self) -> CrossSectionKind {
        self.kind
    }

    /// Number of axes of `D` (`n - 1`).
    pub fn axes(&self) -> usize {
        match self.kind {
            CrossSectionKind::Interval => 1,
            CrossSectionKind::Rectangle => 2,
        }
    }

    /// Dimension `n` of the cylinder `D × (0, 1)`.
    pub fn cylinder_dim(&self) -> usize {
        self.axes() + 1
    }

    pub fn extents(&self) -> &[T] {
        &self.extents[..self.axes()]
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution[..self.axes()]
    }

    pub fn grid_len(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn spacing(&self, axis: usize) -> T {
        self.extents[axis] / T::of_usize(self.resolution[axis])
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_measure(&self) -> T {
        match self.kind {
            CrossSectionKind::Interval => self.spacing(0),
            CrossSectionKind::Rectangle => self.spacing(0) * self.spacing(1),
        }
    }

    /// Lebesgue measure `|D|`.
    pub fn measure(&self) -> T {
        match self.kind {
            CrossSectionKind::Interval => self.extents[0],
            CrossSectionKind::Rectangle => self.extents[0] * self.extents[1],
        }
    }

    /// Cell midpoints, row-major (x fastest). The second coordinate is zero
    /// for intervals.
    pub fn grid_points(&self) -> Vec<[T; 2]> {
        let half = T::lit(0.5);
        let (nx, ny) = (self.resolution[0], self.resolution[1]);
        let (hx, hy) = (self.spacing(0), self.spacing(1));
        let mut points = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let y = match self.kind {
                    CrossSectionKind::Interval => T::zero(),
                    CrossSectionKind::Rectangle => (T::of_usize(j) + half) * hy,
                };
                points.push([(T::of_usize(i) + half) * hx, y]);
            }
        }
        points
    }

    /// Whether `point` lies in the closure of `D`.
    pub fn contains(&self, point: &[T]) -> bool {
        if point.len() != self.axes() {
            return false;
        }
        point
            .iter()
            .zip(self.extents())
            .all(|(&p, &l)| p >= T::zero() && p <= l)
    }
}

fn check_extent<T: Real>(value: T, what: &str) -> Result<()> {
    if !(value > T::zero()) || !value.is_finite() {
        return Err(Error::InvalidInput(format!("{what} must be positive and finite, got {value}")));
    }
    Ok(())
}

fn check_resolution(points: usize) -> Result<()> {
    if points < CrossSection::<f64>::MIN_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be at least {}, got {points}",
            CrossSection::<f64>::MIN_RESOLUTION
        )));
    }
    Ok(())
}

/// One retained eigenpair. `wavenumbers` are the sine indices per axis
/// (`[k, 0]` on an interval).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T> {
    pub index: usize,
    pub eigenvalue: T,
    pub wavenumbers: [usize; 2],
}

/// Ordered Dirichlet eigenbasis of `-Δ` on `D`, tabulated on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis<T> {
    section: CrossSection<T>,
    modes: Vec<Mode<T>>,
    // samples[k * grid_len + node] = φ_{k+1}(node)
    samples: Vec<T>,
}

impl<T: Real> SpectralBasis<T> {
    /// Builds the first `n_modes` eigenpairs, sorted by eigenvalue with
    /// lexicographic tie-break on the wavenumbers.
    pub fn build(section: CrossSection<T>, n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidInput("mode count must be positive".into()));
        }
        let pi = T::PI();
        let [lx, ly] = section.extents;
        let mut modes: Vec<Mode<T>> = match section.kind {
            CrossSectionKind::Interval => (1..=n_modes)
                .map(|k| {
                    let w = T::of_usize(k) * pi / lx;
                    Mode { index: k, eigenvalue: w * w, wavenumbers: [k, 0] }
                })
                .collect(),
            CrossSectionKind::Rectangle => {
                // The first n modes have both wavenumbers ≤ n.
                let mut all = Vec::with_capacity(n_modes * n_modes);
                for p in 1..=n_modes {
                    for q in 1..=n_modes {
                        let wx = T::of_usize(p) * pi / lx;
                        let wy = T::of_usize(q) * pi / ly;
                        all.push(Mode { index: 0, eigenvalue: wx * wx + wy * wy, wavenumbers: [p, q] });
                    }
                }
                all.sort_by(|a, b| {
                    a.eigenvalue
                        .partial_cmp(&b.eigenvalue)
                        .expect("finite eigenvalues")
                        .then(a.wavenumbers.cmp(&b.wavenumbers))
                });
                all.truncate(n_modes);
                all
            }
        };
        for (i, m) in modes.iter_mut().enumerate() {
            m.index = i + 1;
        }

        for m in &modes {
            for axis in 0..section.axes() {
                if m.wavenumbers[axis] >= section.resolution[axis] {
                    return Err(Error::InvalidInput(format!(
                        "mode {} needs wavenumber {} on axis {axis}, grid has only {} cells; \
                         raise the resolution",
                        m.index, m.wavenumbers[axis], section.resolution[axis]
                    )));
                }
            }
        }

        let points = section.grid_points();
        let mut samples = Vec::with_capacity(modes.len() * points.len());
        for m in &modes {
            samples.extend(points.iter().map(|p| eval_mode(&section, m, p)));
        }
        Ok(Self { section, modes, samples })
    }

    pub fn cross_section(&self) -> &CrossSection<T> {
        &self.section
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn count(&self) -> usize {
        self.modes.len()
    }

    /// Eigenvalue of mode `k` (1-based).
    pub fn eigenvalue(&self, k: usize) -> Result<T> {
        self.mode(k).map(|m| m.eigenvalue)
    }

    pub fn mode(&self, k: usize) -> Result<&Mode<T>> {
        if k == 0 || k > self.modes.len() {
            return Err(Error::ModeOutOfRange { index: k, count: self.modes.len() });
        }
        Ok(&self.modes[k - 1])
    }

    /// `λ_k` for every retained mode, in order.
    pub fn eigenvalues(&self) -> Vec<T> {
        self.modes.iter().map(|m| m.eigenvalue).collect()
    }

    /// Grid samples of mode `k` (1-based).
    pub fn mode_samples(&self, k: usize) -> Result<&[T]> {
        self.mode(k)?;
        let n = self.section.grid_len();
        Ok(&self.samples[(k - 1) * n..k * n])
    }

    /// Fourier coefficients `c_k = ∫_D ψ φ_k` by the midpoint rule.
    pub fn analyze(&self, samples: &[T]) -> Result<Vec<T>> {
        let n = self.section.grid_len();
        if samples.len() != n {
            return Err(Error::GridMismatch { expected: n, found: samples.len() });
        }
        let w = self.section.cell_measure();
        Ok(self
            .samples
            .chunks_exact(n)
            .map(|phi| w * phi.iter().zip(samples).map(|(&a, &b)| a * b).sum::<T>())
            .collect())
    }

    /// Grid values of `Σ c_k φ_k`.
    pub fn synthesize(&self, coefficients: &[T]) -> Result<Vec<T>> {
        if coefficients.len() > self.count() {
            return Err(Error::SizeMismatch { max: self.count(), found: coefficients.len() });
        }
        let n = self.section.grid_len();
        let mut out = vec![T::zero(); n];
        for (&c, phi) in coefficients.iter().zip(self.samples.chunks_exact(n)) {
            if c == T::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(phi) {
                *o += c * p;
            }
        }
        Ok(out)
    }

    /// Tangential gradient of `Σ c_k φ_k` at the grid nodes (second component
    /// zero on an interval).
    pub fn synthesize_gradient(&self, coefficients: &[T]) -> Result<Vec<[T; 2]>> {
        if coefficients.len() > self.count() {
            return Err(Error::SizeMismatch { max: self.count(), found: coefficients.len() });
        }
        let points = self.section.grid_points();
        let mut out = vec![[T::zero(); 2]; points.len()];
        for (m, &c) in self.modes.iter().zip(coefficients) {
            if c == T::zero() {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&points) {
                let g = grad_mode(&self.section, m, p);
                o[0] += c * g[0];
                o[1] += c * g[1];
            }
        }
        Ok(out)
    }

    /// `φ_k` at an arbitrary point of `D`.
    pub fn eval(&self, k: usize, point: &[T]) -> Result<T> {
        let m = self.mode(k)?;
        Ok(eval_mode(&self.section, m, &as_pair(point)))
    }

    /// `Σ c_k φ_k(point)`.
    pub fn eval_sum(&self, coefficients: &[T], point: &[T]) -> Result<T> {
        if coefficients.len() > self.count() {
            return Err(Error::SizeMismatch { max: self.count(), found: coefficients.len() });
        }
        let p = as_pair(point);
        Ok(self
            .modes
            .iter()
            .zip(coefficients)
            .map(|(m, &c)| c * eval_mode(&self.section, m, &p))
            .sum())
    }

    /// Gradient of `φ_k` at an arbitrary point.
    pub fn eval_gradient(&self, k: usize, point: &[T]) -> Result<[T; 2]> {
        let m = self.mode(k)?;
        Ok(grad_mode(&self.section, m, &as_pair(point)))
    }

    /// Tightest `(c, C)` with `c k^{2/(n-1)} ≤ λ_k ≤ C k^{2/(n-1)}` over the
    /// retained modes.
    pub fn weyl_envelope(&self) -> Result<(T, T)> {
        if self.modes.is_empty() {
            return Err(Error::InvalidInput("envelope of an empty basis".into()));
        }
        let exponent = T::lit(2.0) / T::of_usize(self.section.axes());
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for m in &self.modes {
            let r = m.eigenvalue / T::of_usize(m.index).powf(exponent);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok((lo, hi))
    }
}

fn as_pair<T: Real>(point: &[T]) -> [T; 2] {
    [point.first().copied().unwrap_or_else(T::zero), point.get(1).copied().unwrap_or_else(T::zero)]
}

fn eval_mode<T: Real>(section: &CrossSection<T>, m: &Mode<T>, p: &[T; 2]) -> T {
    let pi = T::PI();
    let two = T::lit(2.0);
    let [lx, ly] = section.extents;
    match section.kind {
        CrossSectionKind::Interval => {
            (two / lx).sqrt() * (T::of_usize(m.wavenumbers[0]) * pi * p[0] / lx).sin()
        }
        CrossSectionKind::Rectangle => {
            two / (lx * ly).sqrt()
                * (T::of_usize(m.wavenumbers[0]) * pi * p[0] / lx).sin()
                * (T::of_usize(m.wavenumbers[1]) * pi * p[1] / ly).sin()
        }
    }
}

fn grad_mode<T: Real>(section: &CrossSection<T>, m: &Mode<T>, p: &[T; 2]) -> [T; 2] {
    let pi = T::PI();
    let two = T::lit(2.0);
    let [lx, ly] = section.extents;
    match section.kind {
        CrossSectionKind::Interval => {
            let w = T::of_usize(m.wavenumbers[0]) * pi / lx;
            [(two / lx).sqrt() * w * (w * p[0]).cos(), T::zero()]
        }
        CrossSectionKind::Rectangle => {
            let wx = T::of_usize(m.wavenumbers[0]) * pi / lx;
            let wy = T::of_usize(m.wavenumbers[1]) * pi / ly;
            let a = two / (lx * ly).sqrt();
            [
                a * wx * (wx * p[0]).cos() * (wy * p[1]).sin(),
                a * wy * (wx * p[0]).sin() * (wy * p[1]).cos(),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn unit_interval(res: usize, modes: usize) -> SpectralBasis<f64> {
        SpectralBasis::build(CrossSection::interval(1.0, res).unwrap(), modes).unwrap()
    }

    #[test]
    fn closed_form_eigenvalues() {
        let b = unit_interval(64, 4);
        assert_eq!(b.eigenvalue(1).unwrap(), PI * PI);
        assert!((b.eigenvalue(3).unwrap() - 9.0 * PI * PI).abs() < 1e-12);
        let r = SpectralBasis::build(CrossSection::rectangle(1.0, 1.0, 16, 16).unwrap(), 3).unwrap();
        assert!((r.eigenvalue(1).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        // (1,2) and (2,1) tie; lexicographic order puts (1,2) first
        assert_eq!(r.modes()[1].wavenumbers, [1, 2]);
        assert_eq!(r.modes()[2].wavenumbers, [2, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CrossSection::interval(0.0, 16).is_err());
        assert!(CrossSection::interval(-1.0, 16).is_err());
        assert!(CrossSection::interval(1.0, 3).is_err());
        assert!(CrossSection::rectangle(1.0, f64::NAN, 8, 8).is_err());
        let s = CrossSection::interval(1.0, 16).unwrap();
        assert!(SpectralBasis::build(s.clone(), 0).is_err());
        assert!(SpectralBasis::build(s, 16).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        for basis in [
            unit_interval(64, 24),
            SpectralBasis::build(CrossSection::rectangle(1.0, 0.7, 64, 64).unwrap(), 20).unwrap(),
        ] {
            for j in 1..=basis.count() {
                let c = basis.analyze(basis.mode_samples(j).unwrap()).unwrap();
                for (i, v) in c.iter().enumerate() {
                    let expect = if i + 1 == j { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-10, "gram[{}][{j}] = {v}", i + 1);
                }
            }
        }
    }

    #[test]
    fn analyze_examples() {
        let b = unit_interval(64, 8);
        assert!(b.analyze(&vec![0.0; 64]).unwrap().iter().all(|&c| c == 0.0));
        // 3φ₁ − 2φ₄ sampled directly from the closed form
        let samples: Vec<f64> = b
            .cross_section()
            .grid_points()
            .iter()
            .map(|p| {
                let x = p[0];
                3.0 * 2f64.sqrt() * (PI * x).sin() - 2.0 * 2f64.sqrt() * (4.0 * PI * x).sin()
            })
            .collect();
        let c = b.analyze(&samples).unwrap();
        let expect = [3.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0];
        for (a, e) in c.iter().zip(expect) {
            assert!((a - e).abs() < 1e-10);
        }
        assert!(matches!(b.analyze(&[1.0; 10]), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn synthesize_examples() {
        let b = unit_interval(32, 4);
        let pts = b.cross_section().grid_points();
        let v = b.synthesize(&[1.0, 1.0]).unwrap();
        for (p, val) in pts.iter().zip(&v) {
            let x = p[0];
            let direct = 2f64.sqrt() * ((PI * x).sin() + (2.0 * PI * x).sin());
            assert!((val - direct).abs() < 1e-13);
        }
        assert_eq!(b.synthesize(&[1.0]).unwrap(), b.mode_samples(1).unwrap());
        assert!(b.synthesize(&[0.0; 4]).unwrap().iter().all(|&x| x == 0.0));
        assert!(b.synthesize(&[0.0; 5]).is_err());
    }

    #[test]
    fn weyl_envelope_examples() {
        let (c, cc) = unit_interval(64, 12).weyl_envelope().unwrap();
        assert!((c - PI * PI).abs() < 1e-10 && (cc - PI * PI).abs() < 1e-10);

        // Independent enumeration of the first 16 eigenvalues of the unit square.
        let mut lams: Vec<f64> = (1..=8)
            .flat_map(|p| (1..=8).map(move |q| ((p * p + q * q) as f64) * PI * PI))
            .collect();
        lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ratios: Vec<f64> = lams[..16].iter().enumerate().map(|(i, l)| l / (i + 1) as f64).collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);

        let r = SpectralBasis::build(CrossSection::rectangle(1.0, 1.0, 32, 32).unwrap(), 16).unwrap();
        let (c, cc) = r.weyl_envelope().unwrap();
        assert!((c - lo).abs() < 1e-10 && (cc - hi).abs() < 1e-10);
        assert!(c > 0.0 && cc.is_finite());
    }

    #[test]
    fn stencil_residual_is_second_order() {
        let b = unit_interval(64, 5);
        let x = [0.37];
        let residual = |h: f64| {
            let f = |t: f64| b.eval(5, &[t]).unwrap();
            let lap = (-f(x[0] + h) + 2.0 * f(x[0]) - f(x[0] - h)) / (h * h);
            (lap - b.eigenvalue(5).unwrap() * f(x[0])).abs()
        };
        let ratio = residual(1e-2) / residual(5e-3);
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");

        let r = SpectralBasis::build(CrossSection::rectangle(1.0, 2.0, 16, 16).unwrap(), 6).unwrap();
        let p = [0.31, 1.27];
        let res = |h: f64| {
            let f = |a: f64, c: f64| r.eval(6, &[a, c]).unwrap();
            let lap = (4.0 * f(p[0], p[1])
                - f(p[0] + h, p[1])
                - f(p[0] - h, p[1])
                - f(p[0], p[1] + h)
                - f(p[0], p[1] - h))
                / (h * h);
            (lap - r.eigenvalue(6).unwrap() * f(p[0], p[1])).abs()
        };
        assert!((res(1e-2) / res(5e-3) - 4.0).abs() < 0.05);
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let r: SpectralBasis<f64> = SpectralBasis::build(CrossSection::rectangle(1.0, 2.0, 16, 16).unwrap(), 5).unwrap();
        let p = [0.2, 0.9];
        let g = r.eval_gradient(5, &p).unwrap();
        let h = 1e-6;
        let dx = (r.eval(5, &[p[0] + h, p[1]]).unwrap() - r.eval(5, &[p[0] - h, p[1]]).unwrap()) / (2.0 * h);
        let dy = (r.eval(5, &[p[0], p[1] + h]).unwrap() - r.eval(5, &[p[0], p[1] - h]).unwrap()) / (2.0 * h);
        assert!((g[0] - dx).abs() < 1e-6 && (g[1] - dy).abs() < 1e-6);
    }

    #[test]
    fn spectrum_is_monotone() {
        let r = SpectralBasis::build(CrossSection::rectangle(1.3, 0.6, 64, 64).unwrap(), 40).unwrap();
        assert!(r.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn works_in_single_precision() {
        let b = SpectralBasis::<f32>::build(CrossSection::interval(1.0, 32).unwrap(), 4).unwrap();
        let c = b.analyze(&b.synthesize(&[1.0, -0.5, 0.25]).unwrap()).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-5 && (c[1] + 0.5).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn round_trip(coeffs in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
            let b = unit_interval(48, 12);
            let back = b.analyze(&b.synthesize(&coeffs).unwrap()).unwrap();
            let scale = coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            for (i, c) in coeffs.iter().enumerate() {
                prop_assert!((back[i] - c).abs() <= 1e-10 * scale);
            }
        }
    }
}
