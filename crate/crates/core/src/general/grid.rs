use crate::error::{Error, Result};
use crate::real::Real;

/// Uniform vertex grid on `[0, lx] × [0, ly]` with `cells[0] × cells[1]`
/// cells. Nodes are numbered row-major with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct RectGrid<T> {
    extents: [T; 2],
    cells: [usize; 2],
}

impl<T: Real> RectGrid<T> {
    pub fn new(lx: T, ly: T, nx: usize, ny: usize) -> Result<Self> {
        for l in [lx, ly] {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::InvalidInput(format!("domain extents must be positive, got {l}")));
            }
        }
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidInput(format!("need at least 4 cells per axis, got {nx} x {ny}")));
        }
        Ok(Self { extents: [lx, ly], cells: [nx, ny] })
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(T::one(), T::one(), n, n)
    }

    pub fn extents(&self) -> [T; 2] {
        self.extents
    }

    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    /// Nodes per axis.
    pub fn nodes(&self) -> [usize; 2] {
        [self.cells[0] + 1, self.cells[1] + 1]
    }

    pub fn node_count(&self) -> usize {
        let [a, b] = self.nodes();
        a * b
    }

    pub fn spacing(&self) -> [T; 2] {
        [self.extents[0] / T::of_usize(self.cells[0]), self.extents[1] / T::of_usize(self.cells[1])]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.cells[0] + 1) + i
    }

    pub fn coords(&self, node: usize) -> [T; 2] {
        let nx = self.cells[0] + 1;
        let [hx, hy] = self.spacing();
        [T::of_usize(node % nx) * hx, T::of_usize(node / nx) * hy]
    }

    pub fn side_length(&self, side: Side) -> T {
        match side {
            Side::Bottom | Side::Top => self.extents[0],
            Side::Left | Side::Right => self.extents[1],
        }
    }

    pub fn side_spacing(&self, side: Side) -> T {
        let [hx, hy] = self.spacing();
        match side {
            Side::Bottom | Side::Top => hx,
            Side::Left | Side::Right => hy,
        }
    }

    /// Nodes of `side` ordered by increasing arclength, corners included.
    pub fn side_nodes(&self, side: Side) -> Vec<usize> {
        let [nx, ny] = self.cells;
        match side {
            Side::Bottom => (0..=nx).map(|i| self.index(i, 0)).collect(),
            Side::Top => (0..=nx).map(|i| self.index(i, ny)).collect(),
            Side::Left => (0..=ny).map(|j| self.index(0, j)).collect(),
            Side::Right => (0..=ny).map(|j| self.index(nx, j)).collect(),
        }
    }

    /// Arclength coordinate of each node of `side`.
    pub fn side_coords(&self, side: Side) -> Vec<T> {
        let h = self.side_spacing(side);
        (0..self.side_nodes(side).len()).map(|i| T::of_usize(i) * h).collect()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let nx = self.cells[0] + 1;
        let (i, j) = (node % nx, node / nx);
        i == 0 || j == 0 || i == self.cells[0] || j == self.cells[1]
    }

    /// Sides containing `node`.
    pub fn sides_of(&self, node: usize) -> Vec<Side> {
        let nx = self.cells[0] + 1;
        let (i, j) = (node % nx, node / nx);
        let mut out = Vec::with_capacity(2);
        if j == 0 {
            out.push(Side::Bottom);
        }
        if i == self.cells[0] {
            out.push(Side::Right);
        }
        if j == self.cells[1] {
            out.push(Side::Top);
        }
        if i == 0 {
            out.push(Side::Left);
        }
        out
    }
}

/// Side of the rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    pub fn name(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Side::ALL.into_iter().find(|s| s.name() == name)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Boundary condition class of a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SideRole {
    /// Part of `Σ`: Dirichlet and Neumann data are measured.
    Cauchy,
    /// Part of `Γ`: traces are reconstructed.
    Unknown,
    /// `u = 0`.
    Grounded,
    /// `σ∇u·ν = 0`.
    Insulated,
}

impl SideRole {
    pub fn name(self) -> &'static str {
        match self {
            SideRole::Cauchy => "cauchy",
            SideRole::Unknown => "unknown",
            SideRole::Grounded => "grounded",
            SideRole::Insulated => "insulated",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [SideRole::Cauchy, SideRole::Unknown, SideRole::Grounded, SideRole::Insulated]
            .into_iter()
            .find(|r| r.name() == name)
    }
}

/// Roles of the four sides and the margin `ρ` defining
/// `Σ_ρ = {s ∈ Σ : ρ ≤ s ≤ L - ρ}` on every Cauchy side.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPartition<T> {
    roles: [SideRole; 4],
    rho: Option<T>,
}

impl<T: Real> BoundaryPartition<T> {
    /// Roles listed as bottom, right, top, left. At least one side must be
    /// `Cauchy` and one `Unknown`.
    pub fn new(roles: [SideRole; 4]) -> Result<Self> {
        if !roles.contains(&SideRole::Cauchy) {
            return Err(Error::InvalidInput("partition needs a Cauchy side".into()));
        }
        if !roles.contains(&SideRole::Unknown) {
            return Err(Error::InvalidInput("partition needs an unknown side".into()));
        }
        Ok(Self { roles, rho: None })
    }

    /// Data on the bottom, reconstruction on the top, grounded sides.
    pub fn cylinder_like() -> Self {
        Self::new([SideRole::Cauchy, SideRole::Grounded, SideRole::Unknown, SideRole::Grounded])
            .expect("valid roles")
    }

    /// Absolute margin; `None` selects 10% of each side length.
    pub fn with_rho(mut self, rho: Option<T>) -> Self {
        self.rho = rho;
        self
    }

    pub fn role(&self, side: Side) -> SideRole {
        self.roles[side.slot()]
    }

    pub fn roles(&self) -> [SideRole; 4] {
        self.roles
    }

    pub fn sides_with(&self, role: SideRole) -> Vec<Side> {
        Side::ALL.into_iter().filter(|&s| self.role(s) == role).collect()
    }

    pub fn rho(&self, grid: &RectGrid<T>, side: Side) -> T {
        self.rho.unwrap_or_else(|| T::lit(0.1) * grid.side_length(side))
    }

    /// `(ρ, L - ρ)` on a Cauchy side.
    pub fn margin_interval(&self, grid: &RectGrid<T>, side: Side) -> Result<(T, T)> {
        let rho = self.rho(grid, side);
        let len = grid.side_length(side);
        if !(rho >= T::zero()) || !(len - rho - rho > T::zero()) {
            return Err(Error::InvalidInput(format!("margin {rho} leaves no interior on the {} side", side.name())));
        }
        Ok((rho, len - rho))
    }

    /// Whether `node` carries a Dirichlet condition in the mixed problem:
    /// it lies on a Cauchy or grounded side.
    pub fn is_mixed_dirichlet(&self, grid: &RectGrid<T>, node: usize) -> bool {
        grid.sides_of(node)
            .iter()
            .any(|&s| matches!(self.role(s), SideRole::Cauchy | SideRole::Grounded))
    }

    /// Whether `node` carries a Dirichlet condition in the lifting problem:
    /// it lies on a Cauchy, unknown or grounded side.
    pub fn is_lift_dirichlet(&self, grid: &RectGrid<T>, node: usize) -> bool {
        grid.sides_of(node).iter().any(|&s| self.role(s) != SideRole::Insulated)
    }

    pub fn validate(&self, grid: &RectGrid<T>, sigma_modes: usize) -> Result<()> {
        for side in self.sides_with(SideRole::Cauchy) {
            let (a, b) = self.margin_interval(grid, side)?;
            let inside = grid.side_coords(side).into_iter().filter(|&s| s > a && s < b).count();
            if inside <= sigma_modes {
                return Err(Error::InvalidInput(format!(
                    "the {} margin holds {inside} nodes, need more than {sigma_modes}",
                    side.name()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_nodes_and_coords() {
        let g = RectGrid::new(2.0, 1.0, 8, 4).unwrap();
        assert_eq!(g.nodes(), [9, 5]);
        assert_eq!(g.side_nodes(Side::Bottom), (0..9).collect::<Vec<_>>());
        assert_eq!(g.side_nodes(Side::Top)[0], 36);
        assert_eq!(g.side_nodes(Side::Right), vec![8, 17, 26, 35, 44]);
        assert_eq!(g.coords(44), [2.0, 1.0]);
        assert_eq!(g.side_coords(Side::Left), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.sides_of(0), vec![Side::Bottom, Side::Left]);
        assert!(g.sides_of(g.index(3, 2)).is_empty());
        assert!(RectGrid::new(1.0, 1.0, 2, 8).is_err());
        assert!(RectGrid::new(0.0, 1.0, 8, 8).is_err());
    }

    #[test]
    fn partition_rules() {
        let g = RectGrid::<f64>::unit_square(20).unwrap();
        let p = BoundaryPartition::cylinder_like();
        assert_eq!(p.sides_with(SideRole::Cauchy), vec![Side::Bottom]);
        let (a, b) = p.margin_interval(&g, Side::Bottom).unwrap();
        assert!((a - 0.1).abs() < 1e-15 && (b - 0.9).abs() < 1e-15);
        assert!(p.is_mixed_dirichlet(&g, g.index(0, 20)));
        assert!(!p.is_mixed_dirichlet(&g, g.index(5, 20)));
        assert!(p.is_lift_dirichlet(&g, g.index(5, 20)));
        assert!(p.validate(&g, 8).is_ok());
        assert!(p.validate(&g, 16).is_err());
        assert!(p.clone().with_rho(Some(0.5)).margin_interval(&g, Side::Bottom).is_err());
        assert!(p.with_rho(Some(0.0)).validate(&g, 16).is_ok());
        assert!(BoundaryPartition::<f64>::new([SideRole::Grounded; 4]).is_err());
        assert!(BoundaryPartition::<f64>::new([SideRole::Cauchy, SideRole::Grounded, SideRole::Grounded, SideRole::Grounded]).is_err());
        assert_eq!(Side::from_name("left"), Some(Side::Left));
        assert_eq!(SideRole::from_name("insulated"), Some(SideRole::Insulated));
    }
}
