use std::str::FromStr;

use crate::error::{Error, Result};
use crate::real::Real;

/// Symmetric tensor `[[s11, s12], [s12, s22]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor2<T> {
    pub s11: T,
    pub s12: T,
    pub s22: T,
}

impl<T: Real> Tensor2<T> {
    pub fn new(s11: T, s12: T, s22: T) -> Self {
        Self { s11, s12, s22 }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::one())
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (T, T) {
        let half = T::lit(0.5);
        let mean = half * (self.s11 + self.s22);
        let d = half * (self.s11 - self.s22);
        let r = (d * d + self.s12 * self.s12).sqrt();
        (mean - r, mean + r)
    }

    /// `ξ·σξ`.
    pub fn quadratic(&self, xi: [T; 2]) -> T {
        self.s11 * xi[0] * xi[0] + T::lit(2.0) * self.s12 * xi[0] * xi[1] + self.s22 * xi[1] * xi[1]
    }

    fn lerp(a: Self, b: Self, t: T) -> Self {
        let s = T::one() - t;
        Self::new(s * a.s11 + t * b.s11, s * a.s12 + t * b.s12, s * a.s22 + t * b.s22)
    }

    fn max_abs_diff(&self, other: &Self) -> T {
        (self.s11 - other.s11).abs().max((self.s12 - other.s12).abs()).max((self.s22 - other.s22).abs())
    }
}

/// Conductivity sampled on a uniform node grid spanning the domain and
/// interpolated bilinearly in between.
#[derive(Clone, Debug, PartialEq)]
pub struct ConductivityField<T> {
    nodes: [usize; 2],
    extents: [T; 2],
    values: Vec<Tensor2<T>>,
}

impl<T: Real> ConductivityField<T> {
    /// `values` row-major with `x` fastest, `nodes[0] × nodes[1]` entries.
    pub fn new(nodes: [usize; 2], extents: [T; 2], values: Vec<Tensor2<T>>) -> Result<Self> {
        if nodes[0] < 2 || nodes[1] < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 nodes per axis, got {nodes:?}")));
        }
        if values.len() != nodes[0] * nodes[1] {
            return Err(Error::GridMismatch { expected: nodes[0] * nodes[1], found: values.len() });
        }
        if extents.iter().any(|&l| !(l > T::zero())) {
            return Err(Error::InvalidInput("domain extents must be positive".into()));
        }
        if values.iter().any(|s| !(s.s11.is_finite() && s.s12.is_finite() && s.s22.is_finite())) {
            return Err(Error::InvalidInput("conductivity entries must be finite".into()));
        }
        Ok(Self { nodes, extents, values })
    }

    pub fn constant(tensor: Tensor2<T>, extents: [T; 2]) -> Self {
        Self { nodes: [2, 2], extents, values: vec![tensor; 4] }
    }

    pub fn identity(extents: [T; 2]) -> Self {
        Self::constant(Tensor2::identity(), extents)
    }

    /// Samples `f(x, y)` on `nodes[0] × nodes[1]` nodes.
    pub fn from_fn(nodes: [usize; 2], extents: [T; 2], f: impl Fn(T, T) -> Tensor2<T>) -> Result<Self> {
        let (hx, hy) = (
            extents[0] / T::of_usize(nodes[0].max(2) - 1),
            extents[1] / T::of_usize(nodes[1].max(2) - 1),
        );
        let values = (0..nodes[1])
            .flat_map(|j| (0..nodes[0]).map(move |i| (i, j)))
            .map(|(i, j)| f(T::of_usize(i) * hx, T::of_usize(j) * hy))
            .collect();
        Self::new(nodes, extents, values)
    }

    /// Parses the text format: a header line `nx ny`, then `nx·ny` triples
    /// `s11 s12 s22` in row-major order, whitespace separated.
    pub fn parse(text: &str, extents: [T; 2]) -> Result<Self> {
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(n, line)| {
                let body = line.split('#').next().unwrap_or("");
                body.split_whitespace().map(move |t| (n + 1, t)).collect::<Vec<_>>()
            })
            .peekable();
        let header_line = tokens.peek().map_or(1, |t| t.0);
        let nx: usize = next_number(&mut tokens, "nx", header_line)?;
        let ny: usize = next_number(&mut tokens, "ny", header_line)?;
        let mut values = Vec::with_capacity(nx.saturating_mul(ny).min(1 << 24));
        for k in 0..nx * ny {
            let what = format!("tensor {k}");
            let last = tokens.peek().map_or(header_line, |t| t.0);
            let s11: f64 = next_number(&mut tokens, &format!("{what} s11"), last)?;
            let s12: f64 = next_number(&mut tokens, &format!("{what} s12"), last)?;
            let s22: f64 = next_number(&mut tokens, &format!("{what} s22"), last)?;
            values.push(Tensor2::new(T::lit(s11), T::lit(s12), T::lit(s22)));
        }
        if let Some((line, tok)) = tokens.next() {
            return Err(Error::Parse { line, message: format!("unexpected trailing token '{tok}'") });
        }
        Self::new([nx, ny], extents, values).map_err(|e| Error::Parse { line: header_line, message: e.to_string() })
    }

    /// Inverse of [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.nodes[0], self.nodes[1]);
        for s in &self.values {
            out.push_str(&format!("{:e} {:e} {:e}\n", s.s11, s.s12, s.s22));
        }
        out
    }

    pub fn nodes(&self) -> [usize; 2] {
        self.nodes
    }

    pub fn extents(&self) -> [T; 2] {
        self.extents
    }

    pub fn values(&self) -> &[Tensor2<T>] {
        &self.values
    }

    /// Bilinear interpolation, clamped to the domain.
    pub fn at(&self, x: T, y: T) -> Tensor2<T> {
        let locate = |v: T, axis: usize| {
            let n = self.nodes[axis] - 1;
            let t = (v / self.extents[axis] * T::of_usize(n)).max(T::zero()).min(T::of_usize(n));
            let i = t.floor().to_usize().unwrap_or(0).min(n - 1);
            (i, t - T::of_usize(i))
        };
        let ((i, tx), (j, ty)) = (locate(x, 0), locate(y, 1));
        let at = |i: usize, j: usize| self.values[j * self.nodes[0] + i];
        let bottom = Tensor2::lerp(at(i, j), at(i + 1, j), tx);
        let top = Tensor2::lerp(at(i, j + 1), at(i + 1, j + 1), tx);
        Tensor2::lerp(bottom, top, ty)
    }

    /// Smallest `λ ≥ 1` with `λ⁻¹|ξ|² ≤ ξ·σξ ≤ λ|ξ|²` at every node, or an
    /// error when some tensor is not positive definite.
    pub fn ellipticity(&self) -> Result<T> {
        let mut lam = T::one();
        for (k, s) in self.values.iter().enumerate() {
            let (lo, hi) = s.eigenvalues();
            if !(lo > T::zero()) {
                return Err(Error::InvalidInput(format!("conductivity at node {k} is not positive definite")));
            }
            lam = lam.max(hi).max(T::one() / lo);
        }
        Ok(lam)
    }

    /// Largest entrywise difference quotient between neighbouring nodes.
    pub fn lipschitz(&self) -> T {
        let [nx, ny] = self.nodes;
        let hx = self.extents[0] / T::of_usize(nx - 1);
        let hy = self.extents[1] / T::of_usize(ny - 1);
        let mut k = T::zero();
        for j in 0..ny {
            for i in 0..nx {
                let c = &self.values[j * nx + i];
                if i + 1 < nx {
                    k = k.max(c.max_abs_diff(&self.values[j * nx + i + 1]) / hx);
                }
                if j + 1 < ny {
                    k = k.max(c.max_abs_diff(&self.values[(j + 1) * nx + i]) / hy);
                }
            }
        }
        k
    }

    /// Checks declared bounds `λ` and `K`.
    pub fn validate(&self, lambda: T, lipschitz: T) -> Result<()> {
        let probes: Vec<[T; 2]> = (0..16)
            .map(|k| {
                let a = T::PI() * T::of_usize(k) / T::lit(16.0);
                [a.cos(), a.sin()]
            })
            .collect();
        for (k, s) in self.values.iter().enumerate() {
            for xi in &probes {
                let q = s.quadratic(*xi);
                if q < T::one() / lambda || q > lambda {
                    return Err(Error::InvalidInput(format!(
                        "ellipticity bound {lambda} violated at node {k} (ξ·σξ = {q})"
                    )));
                }
            }
        }
        let measured = self.lipschitz();
        if measured > lipschitz {
            return Err(Error::InvalidInput(format!("Lipschitz quotient {measured} exceeds declared {lipschitz}")));
        }
        Ok(())
    }
}

fn next_number<'a, N: FromStr>(
    tokens: &mut impl Iterator<Item = (usize, &'a str)>,
    what: &str,
    fallback_line: usize,
) -> Result<N> {
    match tokens.next() {
        None => Err(Error::Parse { line: fallback_line, message: format!("missing {what}") }),
        Some((line, tok)) => tok
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("cannot read {what} from '{tok}'") }),
    }
}
