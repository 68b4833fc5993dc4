use rayon::prelude::*;

use super::conductivity::{ConductivityField, Tensor2};
use super::grid::RectGrid;
use crate::real::Real;

/// Global stiffness of `∫ σ∇u·∇v` on a [`RectGrid`], stored as a 3×3
/// stencil per node. Entry `(dj + 1) * 3 + (di + 1)` couples node `(i, j)`
/// to `(i + di, j + dj)`.
///
/// Each cell contributes `θ · Q1 + (1 - θ) · lumped` for the diagonal
/// conductivity terms, where the lumped part keeps only edge couplings, and
/// the exact bilinear form for the mixed term `σ₁₂`. At `θ = 1/2` and `σ = I`
/// the stencil is fourth-order accurate for harmonic functions.
#[derive(Clone, Debug)]
pub struct Stiffness<T> {
    nodes: [usize; 2],
    stencil: Vec<[T; 9]>,
}

/// Local corner order: (0,0), (1,0), (0,1), (1,1).
const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

fn cell_matrix<T: Real>(s: Tensor2<T>, hx: T, hy: T, theta: T) -> [[T; 4]; 4] {
    let one = T::one();
    let sixth = T::lit(1.0 / 6.0);
    let half = T::lit(0.5);
    let k1 = |a: usize, b: usize| if a == b { one } else { -one };
    let m1 = |a: usize, b: usize| if a == b { T::lit(2.0) * sixth } else { sixth };
    let l1 = |a: usize, b: usize| if a == b { half } else { T::zero() };
    let d = |a: usize| if a == 0 { -one } else { one };
    let mut out = [[T::zero(); 4]; 4];
    for (p, &(ip, jp)) in CORNERS.iter().enumerate() {
        for (q, &(iq, jq)) in CORNERS.iter().enumerate() {
            let mx = theta * m1(ip, iq) + (one - theta) * l1(ip, iq);
            let my = theta * m1(jp, jq) + (one - theta) * l1(jp, jq);
            let kx = s.s11 * hy / hx * k1(ip, iq) * my;
            let ky = s.s22 * hx / hy * k1(jp, jq) * mx;
            let kxy = s.s12 * (d(ip) * d(jq) + d(jp) * d(iq)) * T::lit(0.25);
            out[p][q] = kx + ky + kxy;
        }
    }
    out
}

impl<T: Real> Stiffness<T> {
    /// Cell conductivity is `σ` at the cell centre.
    pub fn assemble(grid: &RectGrid<T>, sigma: &ConductivityField<T>, theta: T) -> Self {
        let [cx, cy] = grid.cells();
        let [hx, hy] = grid.spacing();
        let nodes = grid.nodes();
        let half = T::lit(0.5);
        let cells: Vec<[[T; 4]; 4]> = (0..cx * cy)
            .into_par_iter()
            .map(|c| {
                let (i, j) = (c % cx, c / cx);
                let s = sigma.at((T::of_usize(i) + half) * hx, (T::of_usize(j) + half) * hy);
                cell_matrix(s, hx, hy, theta)
            })
            .collect();
        let mut stencil = vec![[T::zero(); 9]; nodes[0] * nodes[1]];
        for (c, local) in cells.iter().enumerate() {
            let (i, j) = (c % cx, c / cx);
            for (p, &(ip, jp)) in CORNERS.iter().enumerate() {
                let row = (j + jp) * nodes[0] + i + ip;
                for (q, &(iq, jq)) in CORNERS.iter().enumerate() {
                    let di = iq as isize - ip as isize;
                    let dj = jq as isize - jp as isize;
                    stencil[row][((dj + 1) * 3 + di + 1) as usize] += local[p][q];
                }
            }
        }
        Self { nodes, stencil }
    }

    pub fn nodes(&self) -> [usize; 2] {
        self.nodes
    }

    /// Nonzero couplings `(column node, value)` of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let [nx, ny] = self.nodes;
        let (i, j) = ((row % nx) as isize, (row / nx) as isize);
        self.stencil[row].iter().enumerate().filter_map(move |(k, &v)| {
            let (di, dj) = ((k % 3) as isize - 1, (k / 3) as isize - 1);
            let (ii, jj) = (i + di, j + dj);
            if ii < 0 || jj < 0 || ii >= nx as isize || jj >= ny as isize || v == T::zero() {
                None
            } else {
                Some((jj as usize * nx + ii as usize, v))
            }
        })
    }

    /// `A v` at every node.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.stencil.len())
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, a)| a * v[c]).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn energy(&self, v: &[T]) -> T {
        self.apply(v).iter().zip(v).map(|(&a, &b)| a * b).sum()
    }
}

/// Consistent 1-D mass `∫ h φ_i` for nodal values `h` on a side with
/// spacing `step`.
pub fn consistent_load<T: Real>(h: &[T], step: T) -> Vec<T> {
    let n = h.len();
    let sixth = step / T::lit(6.0);
    (0..n)
        .map(|i| {
            let mut v = T::zero();
            if i > 0 {
                v += sixth * (h[i - 1] + T::lit(2.0) * h[i]);
            }
            if i + 1 < n {
                v += sixth * (T::lit(2.0) * h[i] + h[i + 1]);
            }
            v
        })
        .collect()
}
