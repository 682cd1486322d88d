use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, DomainKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridKind {
    /// 1-D mesh in `r` on `[0, R]` for radially symmetric problems.
    Radial,
    /// Uniform `n`-D lattice on a box.
    Lattice,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeRole {
    Interior,
    /// `r = 0` of a radial mesh.
    Center,
    /// Neumann node: outward normal and the inward grid line
    /// `(node, node + s, node + 2 s)` with physical step length `step`.
    Boundary { normal: Vec<f64>, line: [usize; 3], step: f64 },
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub kind: GridKind,
    pub dim: usize,
    /// Cells per axis (radial: along `r`).
    pub cells: Vec<usize>,
    pub spacing: f64,
    pub coords: Vec<Vec<f64>>,
    pub roles: Vec<NodeRole>,
    strides: Vec<usize>,
}

impl Grid {
    /// Radial mesh `r_i = i R / cells`, node coordinates `(r_i, 0, ..., 0)`.
    pub fn radial(dim: usize, radius: f64, cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::Argument("radial mesh needs at least 3 cells".into()));
        }
        let h = radius / cells as f64;
        let mut coords = Vec::with_capacity(cells + 1);
        let mut roles = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let mut x = vec![0.0; dim];
            x[0] = if i == cells { radius } else { i as f64 * h };
            coords.push(x);
            roles.push(match i {
                0 => NodeRole::Center,
                i if i == cells => {
                    let mut normal = vec![0.0; dim];
                    normal[0] = 1.0;
                    NodeRole::Boundary { normal, line: [cells, cells - 1, cells - 2], step: h }
                }
                _ => NodeRole::Interior,
            });
        }
        Ok(Grid { kind: GridKind::Radial, dim, cells: vec![cells], spacing: h, coords, roles, strides: vec![1] })
    }

    /// Uniform lattice on `[-w_d, w_d]`; `cells` counts cells along the
    /// narrowest axis and every axis must get an integer cell count.
    pub fn lattice(half_widths: &[f64], cells: usize) -> Result<Self> {
        let dim = half_widths.len();
        if cells < 2 || dim == 0 {
            return Err(Error::Argument("lattice needs at least 2 cells per axis".into()));
        }
        let wmin = half_widths.iter().copied().fold(f64::INFINITY, f64::min);
        let h = 2.0 * wmin / cells as f64;
        let mut per_axis = Vec::with_capacity(dim);
        for &w in half_widths {
            let c = 2.0 * w / h;
            if (c - c.round()).abs() > 1e-9 * c {
                return Err(Error::Config(format!(
                    "half-width {w} is not a whole number of cells of size {h}"
                )));
            }
            per_axis.push(c.round() as usize);
        }
        let mut strides = vec![1usize; dim];
        for d in 1..dim {
            strides[d] = strides[d - 1] * (per_axis[d - 1] + 1);
        }
        let total = strides[dim - 1] * (per_axis[dim - 1] + 1);
        let mut coords = Vec::with_capacity(total);
        let mut roles = Vec::with_capacity(total);
        for p in 0..total {
            let idx: Vec<usize> = (0..dim).map(|d| (p / strides[d]) % (per_axis[d] + 1)).collect();
            coords.push(
                (0..dim)
                    .map(|d| if idx[d] == per_axis[d] { half_widths[d] } else { -half_widths[d] + idx[d] as f64 * h })
                    .collect(),
            );
            let mut outward = vec![0i64; dim];
            for d in 0..dim {
                if idx[d] == 0 {
                    outward[d] = -1;
                } else if idx[d] == per_axis[d] {
                    outward[d] = 1;
                }
            }
            let faces = outward.iter().filter(|&&s| s != 0).count();
            if faces == 0 {
                roles.push(NodeRole::Interior);
                continue;
            }
            let step = h * (faces as f64).sqrt();
            let normal: Vec<f64> = outward.iter().map(|&s| s as f64 / (faces as f64).sqrt()).collect();
            let shift: i64 = (0..dim).map(|d| -outward[d] * strides[d] as i64).sum();
            let p1 = (p as i64 + shift) as usize;
            let p2 = (p as i64 + 2 * shift) as usize;
            roles.push(NodeRole::Boundary { normal, line: [p, p1, p2], step });
        }
        Ok(Grid { kind: GridKind::Lattice, dim, cells: per_axis, spacing: h, coords, roles, strides })
    }

    /// Radial mesh for balls centred at the origin, lattice for boxes.
    pub fn for_domain(geom: &DomainGeometry, dim: usize, cells: usize) -> Result<Self> {
        match &geom.kind {
            DomainKind::Radial { radius } => Grid::radial(dim, *radius, cells),
            DomainKind::Ball { center, radius } => {
                if center.iter().any(|&c| c != 0.0) {
                    return Err(Error::Config("radial mode needs a ball centred at the origin".into()));
                }
                Grid::radial(dim, *radius, cells)
            }
            DomainKind::Box { half_widths } => Grid::lattice(half_widths, cells),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn is_boundary(&self, p: usize) -> bool {
        matches!(self.roles[p], NodeRole::Boundary { .. })
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&p| self.is_boundary(p))
    }
}

/// Node values on a grid.
#[derive(Debug, Clone)]
pub struct GridField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.coords.iter().map(|x| f(x)).collect();
        GridField { grid, values }
    }

    /// The `t = 0` solution `|x|^2 / 2`.
    pub fn initial(grid: Arc<Grid>) -> Self {
        GridField::from_fn(grid, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_layout() {
        let g = Grid::radial(3, 1.0, 8).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.roles[0], NodeRole::Center);
        assert!(matches!(g.roles[8], NodeRole::Boundary { line: [8, 7, 6], .. }));
        assert_eq!(g.coords[8], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn lattice_layout() {
        let g = Grid::lattice(&[1.0, 1.0, 1.0], 4).unwrap();
        assert_eq!(g.len(), 125);
        assert_eq!(g.boundary_nodes().count(), 125 - 27);
        // corner (0,0,0) steps diagonally inward
        match &g.roles[0] {
            NodeRole::Boundary { normal, line, step } => {
                let s = 1.0 / 3f64.sqrt();
                assert!(normal.iter().all(|v| (v + s).abs() < 1e-15));
                assert_eq!(line[1], 1 + 5 + 25);
                assert!((step - 0.5 * 3f64.sqrt()).abs() < 1e-15);
            }
            r => panic!("{r:?}"),
        }
        assert!(Grid::lattice(&[1.0, 0.7], 4).is_err());
        assert_eq!(Grid::lattice(&[1.0, 2.0], 4).unwrap().cells, vec![4, 8]);
    }
}
