use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Species;
use crate::error::{Error, Result};

/// Discretization of one species' momentum space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// Cell-centred cube `[-lambda, lambda]^3` with `points_per_axis` cells per axis.
    Cartesian { lambda: f64, points_per_axis: usize },
    /// Shells at the given radii times a fixed set of directions.
    LogRadial { radii: Vec<f64>, angular_points: usize },
}

impl GridSpec {
    /// `shells` geometrically spaced radii from `r_min` to `r_max`.
    pub fn geometric(r_min: f64, r_max: f64, shells: usize, angular_points: usize) -> Result<Self> {
        if shells < 2 {
            return Err(Error::param("shells", "log-radial grids need at least 2 shells"));
        }
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::param("r_min", "need 0 < r_min < r_max"));
        }
        let q = (r_max / r_min).powf(1.0 / (shells - 1) as f64);
        let mut radii: Vec<f64> = (0..shells).map(|j| r_min * q.powi(j as i32)).collect();
        radii[shells - 1] = r_max;
        Ok(GridSpec::LogRadial { radii, angular_points })
    }

    /// Largest momentum represented by the grid.
    pub fn lambda(&self) -> f64 {
        match self {
            GridSpec::Cartesian { lambda, .. } => *lambda,
            GridSpec::LogRadial { radii, .. } => radii.last().copied().unwrap_or(0.0),
        }
    }

    /// One refinement step: halve the Cartesian spacing or insert geometric midpoints between shells.
    pub fn refine(&self) -> GridSpec {
        match self {
            GridSpec::Cartesian { lambda, points_per_axis } => {
                GridSpec::Cartesian { lambda: *lambda, points_per_axis: 2 * points_per_axis }
            }
            GridSpec::LogRadial { radii, angular_points } => {
                let mut out = Vec::with_capacity(2 * radii.len());
                for w in radii.windows(2) {
                    out.push(w[0]);
                    out.push((w[0] * w[1]).sqrt());
                }
                out.extend(radii.last());
                GridSpec::LogRadial { radii: out, angular_points: *angular_points }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GridSpec::Cartesian { lambda, points_per_axis } => {
                if !(*lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::param("lambda", "must be positive and finite"));
                }
                if *points_per_axis == 0 {
                    return Err(Error::param("points_per_axis", "grid has zero modes"));
                }
            }
            GridSpec::LogRadial { radii, angular_points } => {
                if radii.len() < 2 {
                    return Err(Error::param("radii", "log-radial grids need at least 2 shells"));
                }
                if radii[0] <= 0.0 || radii.iter().any(|r| !r.is_finite()) {
                    return Err(Error::param("radii", "must be positive and finite"));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::param("radii", "must be strictly increasing"));
                }
                if directions(*angular_points).is_none() {
                    return Err(Error::param("angular_points", "supported values are 1, 2 and 6"));
                }
            }
        }
        Ok(())
    }
}

fn directions(n: usize) -> Option<Vec<[f64; 3]>> {
    match n {
        1 => Some(vec![[0.0, 0.0, 1.0]]),
        2 => Some(vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]),
        6 => Some(vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]),
        _ => None,
    }
}

/// Position of a mode in its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    Lattice([usize; 3]),
    Shell { shell: usize, direction: usize },
}

/// A single discrete mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub momentum: [f64; 3],
    /// `|momentum|`.
    pub abs: f64,
    /// Internal (spin or polarization) index.
    pub internal: usize,
    /// Physical value of the internal index.
    pub internal_value: f64,
    /// Quadrature weight of the momentum cell.
    pub weight: f64,
    /// Half-width of the momentum cell.
    pub cell_radius: f64,
    pub site: Site,
}

/// Ordered set of modes for one species, sorted by `|p|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub species: Species,
    pub grid: GridSpec,
    pub internal_dim: usize,
    pub modes: Vec<Mode>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Modes at the given indices, order preserved.
    pub fn subset(&self, indices: &[usize]) -> ModeSet {
        ModeSet {
            species: self.species,
            grid: self.grid.clone(),
            internal_dim: self.internal_dim,
            modes: indices.iter().map(|&i| self.modes[i].clone()).collect(),
        }
    }

    pub fn max_cell_radius(&self) -> f64 {
        self.modes.iter().map(|m| m.cell_radius).fold(0.0, f64::max)
    }

    /// Neighbouring modes along the radial direction (same direction and internal index).
    pub fn radial_neighbours(&self, index: usize) -> (Option<usize>, Option<usize>) {
        let m = &self.modes[index];
        let Site::Shell { shell, direction } = m.site else {
            return (None, None);
        };
        let find = |target: usize| {
            self.modes.iter().position(|o| {
                o.internal == m.internal
                    && matches!(o.site, Site::Shell { shell: s, direction: d } if s == target && d == direction)
            })
        };
        let down = if shell > 0 { find(shell - 1) } else { None };
        (down, find(shell + 1))
    }
}

fn internal_values(species: Species, dim: usize) -> Result<Vec<f64>> {
    let vals = match (species.is_fermion(), dim) {
        (true, 1) => vec![0.5],
        (true, 2) => vec![-0.5, 0.5],
        (false, 1) => vec![0.0],
        (false, 2) => vec![-1.0, 1.0],
        (false, 3) => vec![-1.0, 0.0, 1.0],
        (_, 0) => return Err(Error::param("internal_dim", "must be positive")),
        _ => {
            return Err(Error::param(
                "internal_dim",
                format!("{dim} is not supported for the {}", species.name()),
            ))
        }
    };
    Ok(vals)
}

/// Enumerate the modes of a species on the given grid.
pub fn build_mode_set(species: Species, grid: &GridSpec, internal_dim: usize) -> Result<ModeSet> {
    grid.validate()?;
    let internal = internal_values(species, internal_dim)?;
    let mut cells: Vec<([f64; 3], f64, f64, Site)> = Vec::new();
    match grid {
        GridSpec::Cartesian { lambda, points_per_axis: n } => {
            let h = 2.0 * lambda / *n as f64;
            let c = |i: usize| -lambda + h * (i as f64 + 0.5);
            for ix in 0..*n {
                for iy in 0..*n {
                    for iz in 0..*n {
                        cells.push(([c(ix), c(iy), c(iz)], h * h * h, h / 2.0, Site::Lattice([ix, iy, iz])));
                    }
                }
            }
        }
        GridSpec::LogRadial { radii, angular_points } => {
            let dirs = directions(*angular_points).expect("validated");
            let n = radii.len();
            let mut edges = Vec::with_capacity(n + 1);
            edges.push(0.0);
            for w in radii.windows(2) {
                edges.push((w[0] * w[1]).sqrt());
            }
            edges[0] = radii[0] * radii[0] / edges[1];
            edges.push(radii[n - 1] * radii[n - 1] / edges[n - 1]);
            for (j, &r) in radii.iter().enumerate() {
                let (lo, hi) = (edges[j], edges[j + 1]);
                let w = 4.0 * PI / 3.0 * (hi.powi(3) - lo.powi(3)) / dirs.len() as f64;
                for (d, u) in dirs.iter().enumerate() {
                    let p = [r * u[0], r * u[1], r * u[2]];
                    cells.push((p, w, (hi - lo) / 2.0, Site::Shell { shell: j, direction: d }));
                }
            }
        }
    }
    let mut modes = Vec::with_capacity(cells.len() * internal.len());
    for (p, w, h, site) in cells {
        let abs = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        for (s, &v) in internal.iter().enumerate() {
            modes.push(Mode {
                momentum: p,
                abs,
                internal: s,
                internal_value: v,
                weight: w,
                cell_radius: h,
                site,
            });
        }
    }
    modes.sort_by(|a, b| a.abs.total_cmp(&b.abs));
    Ok(ModeSet { species, grid: grid.clone(), internal_dim, modes })
}
