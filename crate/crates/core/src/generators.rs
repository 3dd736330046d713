//! Planar test domains.
//!
//! Every generator works in physical units around the unit disk with cell
//! size `h = 1 / cells`. The ambient space is the full square raster and the
//! domain is the interior predicate. Walls (comb teeth, the slit) are
//! rasterized as the cells whose centers lie within `h/√2` of the wall, which
//! makes them 4-connected so that no 8-neighbour path slips through.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::DomainDecomp;
use crate::error::{Error, Result};
use crate::space::{Mask, SpaceGraph, WeightFn};

/// Smallest channel between consecutive comb teeth, in cells.
pub const MIN_CHANNEL_CELLS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DomainSpec {
    Disk {
        cells: usize,
    },
    Annulus {
        cells: usize,
        inner: f64,
    },
    SlitDisk {
        cells: usize,
    },
    Comb {
        cells: usize,
        teeth: usize,
    },
    PuncturedDisk {
        cells: usize,
    },
    KochFlakeInterior {
        cells: usize,
        iterations: usize,
    },
    MaskFile {
        path: PathBuf,
        #[serde(default = "unit")]
        h: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl DomainSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DomainSpec::Disk { .. } => "disk",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::SlitDisk { .. } => "slit_disk",
            DomainSpec::Comb { .. } => "comb",
            DomainSpec::PuncturedDisk { .. } => "punctured_disk",
            DomainSpec::KochFlakeInterior { .. } => "koch_flake_interior",
            DomainSpec::MaskFile { .. } => "mask_file",
        }
    }

    /// Same domain with `cells` scaled by `factor` (mask files are unchanged).
    pub fn refined(&self, factor: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            DomainSpec::Disk { cells }
            | DomainSpec::Annulus { cells, .. }
            | DomainSpec::SlitDisk { cells }
            | DomainSpec::Comb { cells, .. }
            | DomainSpec::PuncturedDisk { cells }
            | DomainSpec::KochFlakeInterior { cells, .. } => *cells *= factor,
            DomainSpec::MaskFile { .. } => {}
        }
        out
    }

    /// Parse `name` plus `key=value` parameters, as given on the command line.
    pub fn from_params(name: &str, params: &[(String, String)]) -> Result<Self> {
        let get = |k: &str| {
            params
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
        };
        let num = |k: &str, default: Option<f64>| -> Result<f64> {
            match get(k) {
                Some(v) => v
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("parameter {k}={v} is not a number"))),
                None => {
                    default.ok_or_else(|| Error::InvalidInput(format!("missing parameter {k}")))
                }
            }
        };
        let cells = || num("cells", Some(64.0)).map(|c| c as usize);
        Ok(match name {
            "disk" => DomainSpec::Disk { cells: cells()? },
            "annulus" => DomainSpec::Annulus {
                cells: cells()?,
                inner: num("inner", Some(0.5))?,
            },
            "slit_disk" => DomainSpec::SlitDisk { cells: cells()? },
            "comb" => DomainSpec::Comb {
                cells: cells()?,
                teeth: num("teeth", Some(4.0))? as usize,
            },
            "punctured_disk" => DomainSpec::PuncturedDisk { cells: cells()? },
            "koch_flake_interior" => DomainSpec::KochFlakeInterior {
                cells: cells()?,
                iterations: num("iterations", Some(3.0))? as usize,
            },
            "mask_file" => DomainSpec::MaskFile {
                path: get("path")
                    .ok_or_else(|| Error::InvalidInput("missing parameter path".into()))?
                    .into(),
                h: num("h", Some(1.0))?,
            },
            other => return Err(Error::UnknownGenerator(other.to_string())),
        })
    }
}

/// Ambient raster plus interior flags per cell.
#[derive(Debug, Clone)]
pub struct GeneratedDomain {
    pub spec: DomainSpec,
    pub space: Mask,
    pub interior: Vec<bool>,
    pub h: f64,
}

impl GeneratedDomain {
    pub fn build(&self, weight: &WeightFn) -> Result<DomainDecomp> {
        let g = Arc::new(SpaceGraph::build_grid(&self.space, self.h, weight)?);
        let flags: Vec<bool> = (0..g.len())
            .map(|v| {
                let (r, c) = g.cell_of(v).expect("grid space");
                self.interior[r * self.space.width + c]
            })
            .collect();
        DomainDecomp::decompose(g, |v| flags[v])
    }

    /// The interior as a standalone mask.
    pub fn interior_mask(&self) -> Mask {
        Mask {
            width: self.space.width,
            height: self.space.height,
            origin: self.space.origin,
            cells: self.interior.clone(),
        }
    }
}

/// Tooth `E_n` of the comb: arc of radius `1 - 1/n` over angles `[alpha, beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc2 {
    pub n: usize,
    pub radius: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Teeth `E_2, ..., E_N`. Even `n`: `[1/n - π, π - 1/n]`; odd `n`: `[1/n, 2π - 1/n]`.
pub fn comb_arcs(teeth: usize) -> Vec<Arc2> {
    (2..=teeth)
        .map(|n| {
            let nf = n as f64;
            let (alpha, beta) = if n % 2 == 0 {
                (1.0 / nf - PI, PI - 1.0 / nf)
            } else {
                (1.0 / nf, 2.0 * PI - 1.0 / nf)
            };
            Arc2 {
                n,
                radius: 1.0 - 1.0 / nf,
                alpha,
                beta,
            }
        })
        .collect()
}

impl Arc2 {
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let theta = p[1].atan2(p[0]);
        // shift theta into [alpha, alpha + 2π)
        let mut t = theta;
        while t < self.alpha {
            t += 2.0 * PI;
        }
        while t >= self.alpha + 2.0 * PI {
            t -= 2.0 * PI;
        }
        if t <= self.beta {
            (rho - self.radius).abs()
        } else {
            let end = |a: f64| [self.radius * a.cos(), self.radius * a.sin()];
            let d = |q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            d(end(self.alpha)).min(d(end(self.beta)))
        }
    }
}

fn koch_polygon(iterations: usize) -> Vec<[f64; 2]> {
    // equilateral triangle inscribed in the unit circle, refined outward
    let mut pts: Vec<[f64; 2]> = (0..3)
        .map(|i| {
            let a = PI / 2.0 - 2.0 * PI * i as f64 / 3.0;
            [a.cos(), a.sin()]
        })
        .collect();
    for _ in 0..iterations {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
            let p1 = [a[0] + d[0], a[1] + d[1]];
            let p3 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
            // vertices run clockwise, so a +60° turn points the bump outward
            let (c, s) = ((PI / 3.0).cos(), (PI / 3.0).sin());
            let p2 = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1]];
            next.extend_from_slice(&[a, p1, p2, p3]);
        }
        pts = next;
    }
    pts
}

fn inside_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1])
            && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn square(cells: usize) -> (Mask, f64) {
    let pad = 2;
    let n = 2 * (cells + pad) + 1;
    let h = 1.0 / cells as f64;
    let origin = -((cells + pad) as f64) * h;
    let mut m = Mask::new(n, n, true);
    m.origin = [origin, origin];
    (m, h)
}

fn centers(m: &Mask, h: f64) -> impl Iterator<Item = [f64; 2]> + '_ {
    (0..m.height).flat_map(move |r| {
        (0..m.width).map(move |c| [m.origin[0] + c as f64 * h, m.origin[1] + r as f64 * h])
    })
}

fn in_disk(p: [f64; 2]) -> bool {
    p[0] * p[0] + p[1] * p[1] < 1.0
}

pub fn generate_domain(spec: &DomainSpec) -> Result<GeneratedDomain> {
    let cells_check = |cells: usize| {
        if cells < 2 {
            Err(Error::InvalidInput(format!(
                "need at least 2 cells per unit, got {cells}"
            )))
        } else {
            Ok(())
        }
    };
    let wall = std::f64::consts::FRAC_1_SQRT_2;
    let (space, h, interior) = match spec {
        DomainSpec::Disk { cells } => {
            cells_check(*cells)?;
            let (m, h) = square(*cells);
            let inside = centers(&m, h).map(in_disk).collect();
            (m, h, inside)
        }
        DomainSpec::Annulus { cells, inner } => {
            cells_check(*cells)?;
            if !(*inner > 0.0 && *inner < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "annulus inner radius {inner} not in (0, 1)"
                )));
            }
            let (m, h) = square(*cells);
            let inside = centers(&m, h)
                .map(|p| in_disk(p) && p[0] * p[0] + p[1] * p[1] > inner * inner)
                .collect();
            (m, h, inside)
        }
        DomainSpec::SlitDisk { cells } => {
            cells_check(*cells)?;
            let (m, h) = square(*cells);
            let inside = centers(&m, h)
                .map(|p| {
                    let dx = if p[0] < 0.0 {
                        -p[0]
                    } else {
                        (p[0] - 1.0).max(0.0)
                    };
                    let on_slit = (dx * dx + p[1] * p[1]).sqrt() <= wall * h;
                    in_disk(p) && !on_slit
                })
                .collect();
            (m, h, inside)
        }
        DomainSpec::Comb { cells, teeth } => {
            cells_check(*cells)?;
            if *teeth < 2 {
                return Err(Error::InvalidInput(format!(
                    "comb needs at least 2 teeth, got {teeth}"
                )));
            }
            let nf = *teeth as f64;
            let width_cells = *cells as f64 / (nf * (nf - 1.0));
            if width_cells < MIN_CHANNEL_CELLS {
                return Err(Error::TeethUnresolved {
                    width_cells,
                    min_cells: MIN_CHANNEL_CELLS,
                });
            }
            let arcs = comb_arcs(*teeth);
            let (m, h) = square(*cells);
            let inside = centers(&m, h)
                .map(|p| in_disk(p) && arcs.iter().all(|a| a.distance(p) > wall * h))
                .collect();
            (m, h, inside)
        }
        DomainSpec::PuncturedDisk { cells } => {
            cells_check(*cells)?;
            let (m, h) = square(*cells);
            let inside = centers(&m, h)
                .map(|p| in_disk(p) && (p[0].abs() > h / 2.0 || p[1].abs() > h / 2.0))
                .collect();
            (m, h, inside)
        }
        DomainSpec::KochFlakeInterior { cells, iterations } => {
            cells_check(*cells)?;
            let poly = koch_polygon(*iterations);
            let (m, h) = square(*cells);
            let inside = centers(&m, h).map(|p| inside_polygon(&poly, p)).collect();
            (m, h, inside)
        }
        DomainSpec::MaskFile { path, h } => {
            let bytes = std::fs::read(path)?;
            let raw = if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
                Mask::parse_pgm(&bytes)?
            } else {
                Mask::parse_text(&String::from_utf8_lossy(&bytes))?
            };
            // pad by one cell so the domain has a boundary inside the space
            let (w, ht) = (raw.width + 2, raw.height + 2);
            let mut space = Mask::new(w, ht, true);
            space.origin = [-h, -h];
            let mut inside = vec![false; w * ht];
            for r in 0..raw.height {
                for c in 0..raw.width {
                    inside[(r + 1) * w + c + 1] = raw.get(r, c);
                }
            }
            if raw.count() <= 1 {
                return Err(if raw.count() == 0 {
                    Error::EmptySpace
                } else {
                    Error::DegenerateSpace
                });
            }
            (space, *h, inside)
        }
    };
    Ok(GeneratedDomain {
        spec: spec.clone(),
        space,
        interior,
        h,
    })
}
