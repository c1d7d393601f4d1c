//! Fitness surface over the 2D layout, the global peak, and contour lines.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::graphembed::EmbeddingSpace;
use crate::project::Projection2D;
use crate::{par, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurfaceConfig {
    pub nx: usize,
    pub ny: usize,
    /// Gaussian kernel bandwidth; `None` uses 1/30 of the bounding-box diagonal.
    pub bandwidth: Option<f64>,
    /// Cells whose total kernel weight falls below this are masked.
    pub mask_threshold: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig {
            nx: 200,
            ny: 200,
            bandwidth: None,
            mask_threshold: 1e-2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn of(points: &[[f64; 2]]) -> Self {
        let mut b = BoundingBox {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for p in points {
            b.x_min = b.x_min.min(p[0]);
            b.x_max = b.x_max.max(p[0]);
            b.y_min = b.y_min.min(p[1]);
            b.y_max = b.y_max.max(p[1]);
        }
        b
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }
}

/// Grid of interpolated rates. Node `(i, j)` sits at
/// `x_min + i·dx, y_min + j·dy`; values are row-major with `j` as the row.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    pub nx: usize,
    pub ny: usize,
    pub bbox: BoundingBox,
    pub bandwidth: f64,
    /// `None` marks cells beyond data support.
    pub values: Vec<Option<f64>>,
}

impl SurfaceGrid {
    pub fn dx(&self) -> f64 {
        if self.nx > 1 {
            (self.bbox.x_max - self.bbox.x_min) / (self.nx - 1) as f64
        } else {
            0.0
        }
    }

    pub fn dy(&self) -> f64 {
        if self.ny > 1 {
            (self.bbox.y_max - self.bbox.y_min) / (self.ny - 1) as f64
        } else {
            0.0
        }
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.bbox.x_min + i as f64 * self.dx(),
            self.bbox.y_min + j as f64 * self.dy(),
        ]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[j * self.nx + i]
    }

    /// Grid node nearest to `p`, clamped to the grid.
    pub fn nearest(&self, p: [f64; 2]) -> (usize, usize) {
        let idx = |v: f64, lo: f64, step: f64, n: usize| {
            if step == 0.0 {
                0
            } else {
                (((v - lo) / step).round().max(0.0) as usize).min(n - 1)
            }
        };
        (
            idx(p[0], self.bbox.x_min, self.dx(), self.nx),
            idx(p[1], self.bbox.y_min, self.dy(), self.ny),
        )
    }

    /// Fraction of unmasked values that are ≤ `v`.
    pub fn quantile_of(&self, v: f64) -> f64 {
        let present: Vec<f64> = self.values.iter().flatten().copied().collect();
        if present.is_empty() {
            return 0.0;
        }
        present.iter().filter(|&&x| x <= v).count() as f64 / present.len() as f64
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        let mut it = self.values.iter().flatten();
        let first = *it.next()?;
        Some(it.fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }
}

fn check_non_collinear(points: &[[f64; 2]]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::Invalid("surface fit needs at least 3 points".into()));
    }
    let p0 = points[0];
    let far = points
        .iter()
        .copied()
        .max_by(|a, b| {
            let da = (a[0] - p0[0]).hypot(a[1] - p0[1]);
            let db = (b[0] - p0[0]).hypot(b[1] - p0[1]);
            da.total_cmp(&db)
        })
        .unwrap();
    let (ux, uy) = (far[0] - p0[0], far[1] - p0[1]);
    let len = ux.hypot(uy);
    if len == 0.0 {
        return Err(Error::Invalid("all points coincide".into()));
    }
    let off_line = points
        .iter()
        .any(|p| ((p[0] - p0[0]) * uy - (p[1] - p0[1]) * ux).abs() / len > 1e-12 * len.max(1.0));
    if off_line {
        Ok(())
    } else {
        Err(Error::Invalid("all points are collinear".into()))
    }
}

/// Gaussian-kernel weighted average of `rates` at every grid node.
pub fn fit_surface(points: &[[f64; 2]], rates: &[f64], config: &SurfaceConfig) -> Result<SurfaceGrid> {
    if points.len() != rates.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: rates.len(),
        });
    }
    if config.nx < 2 || config.ny < 2 {
        return Err(Error::Config("surface grid needs nx, ny ≥ 2".into()));
    }
    check_non_collinear(points)?;
    let bbox = BoundingBox::of(points);
    let bandwidth = config.bandwidth.unwrap_or(bbox.diagonal() / 30.0);
    if !(bandwidth > 0.0) {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let mut grid = SurfaceGrid {
        nx: config.nx,
        ny: config.ny,
        bbox,
        bandwidth,
        values: Vec::new(),
    };
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    let g = &grid;
    grid.values = par::map_range(config.nx * config.ny, |c| {
        let [x, y] = g.node(c % g.nx, c / g.nx);
        let (mut wsum, mut vsum) = (0.0, 0.0);
        for (p, &r) in points.iter().zip(rates) {
            let d2 = (p[0] - x).powi(2) + (p[1] - y).powi(2);
            let w = (-d2 * inv).exp();
            wsum += w;
            vsum += w * r;
        }
        (wsum >= config.mask_threshold).then(|| vsum / wsum)
    });
    Ok(grid)
}

/// Centroid of the `m` fastest domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakInfo {
    pub m: usize,
    pub members: Vec<String>,
    pub centroid: Vec<f64>,
    pub centroid_2d: [f64; 2],
    /// Highest member rate.
    pub peak_rate: f64,
    pub mean_rate: f64,
}

/// Indices sorted by rate descending, ties by code ascending.
pub fn rank_by_rate(codes: &[String], rates: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..codes.len()).collect();
    idx.sort_by(|&a, &b| rates[b].total_cmp(&rates[a]).then_with(|| codes[a].cmp(&codes[b])));
    idx
}

/// Takes the top-`m` domains by rate and averages their embedding and layout
/// coordinates. `embeddings`, `projection` and `rates` share one node order.
pub fn find_peak(embeddings: &EmbeddingSpace, projection: &Projection2D, rates: &[f64], m: usize) -> Result<PeakInfo> {
    let n = embeddings.len();
    if projection.coords.len() != n || rates.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: projection.coords.len().min(rates.len()),
        });
    }
    if embeddings.codes != projection.codes {
        return Err(Error::DomainMismatch(
            "embedding and projection node orders differ".into(),
        ));
    }
    if m == 0 || m > n {
        return Err(Error::Invalid(format!("peak size {m} must be in 1..={n}")));
    }
    let top: Vec<usize> = rank_by_rate(&embeddings.codes, rates).into_iter().take(m).collect();
    let dim = embeddings.dim();
    let mut centroid = vec![0.0; dim];
    let mut c2 = [0.0; 2];
    for &i in &top {
        for (c, x) in centroid.iter_mut().zip(embeddings.row(i)) {
            *c += x;
        }
        c2[0] += projection.coords[i][0];
        c2[1] += projection.coords[i][1];
    }
    let inv = 1.0 / m as f64;
    centroid.iter_mut().for_each(|c| *c *= inv);
    Ok(PeakInfo {
        m,
        members: top.iter().map(|&i| embeddings.codes[i].clone()).collect(),
        centroid,
        centroid_2d: [c2[0] * inv, c2[1] * inv],
        peak_rate: rates[top[0]],
        mean_rate: top.iter().map(|&i| rates[i]).sum::<f64>() * inv,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourLevel {
    pub level: f64,
    pub polylines: Vec<Polyline>,
}

/// Grid edge identity: `(i, j, false)` joins nodes `(i,j)`–`(i+1,j)`,
/// `(i, j, true)` joins `(i,j)`–`(i,j+1)`.
type EdgeKey = (usize, usize, bool);

fn crossing(grid: &SurfaceGrid, key: EdgeKey, level: f64) -> [f64; 2] {
    let (i, j, vertical) = key;
    let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
    let a = grid.get(i, j).unwrap();
    let b = grid.get(i2, j2).unwrap();
    let t = if a == b { 0.5 } else { (level - a) / (b - a) };
    let pa = grid.node(i, j);
    let pb = grid.node(i2, j2);
    [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
}

/// Marching-squares segments for one level, as pairs of crossed edges.
fn segments(grid: &SurfaceGrid, level: f64) -> Vec<(EdgeKey, EdgeKey)> {
    let mut out = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let corners = [
                grid.get(i, j),
                grid.get(i + 1, j),
                grid.get(i + 1, j + 1),
                grid.get(i, j + 1),
            ];
            let Some(vals) = corners.iter().copied().collect::<Option<Vec<f64>>>() else {
                continue;
            };
            let mut case = 0u8;
            for (bit, v) in vals.iter().enumerate() {
                if *v >= level {
                    case |= 1 << bit;
                }
            }
            let bottom = (i, j, false);
            let right = (i + 1, j, true);
            let top = (i, j + 1, false);
            let left = (i, j, true);
            let center_above = vals.iter().sum::<f64>() / 4.0 >= level;
            match case {
                0 | 15 => {}
                1 | 14 => out.push((left, bottom)),
                2 | 13 => out.push((bottom, right)),
                3 | 12 => out.push((left, right)),
                4 | 11 => out.push((right, top)),
                6 | 9 => out.push((bottom, top)),
                7 | 8 => out.push((left, top)),
                5 => {
                    // corners 0 and 2 above
                    if center_above {
                        out.push((left, top));
                        out.push((bottom, right));
                    } else {
                        out.push((left, bottom));
                        out.push((right, top));
                    }
                }
                10 => {
                    // corners 1 and 3 above
                    if center_above {
                        out.push((left, bottom));
                        out.push((right, top));
                    } else {
                        out.push((left, top));
                        out.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    out
}

/// Chains segments sharing an edge crossing into polylines.
fn join(segs: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segs.iter().enumerate() {
        at.entry(a).or_default().push(s);
        at.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    let walk = |start_seg: usize, start_key: EdgeKey, used: &mut Vec<bool>| {
        let mut chain = vec![start_key];
        let mut seg = start_seg;
        let mut key = start_key;
        loop {
            used[seg] = true;
            let (a, b) = segs[seg];
            key = if a == key { b } else { a };
            chain.push(key);
            match at[&key].iter().find(|&&s| !used[s]) {
                Some(&next) => seg = next,
                None => break,
            }
        }
        chain
    };
    // open chains first, starting from crossings used by a single segment
    let mut ends: Vec<(EdgeKey, usize)> = at
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, v)| (*k, v[0]))
        .collect();
    ends.sort();
    for (key, seg) in ends {
        if !used[seg] {
            lines.push(walk(seg, key, &mut used));
        }
    }
    for s in 0..segs.len() {
        if !used[s] {
            lines.push(walk(s, segs[s].0, &mut used));
        }
    }
    lines
}

/// Isolines at each requested level. Levels outside the grid's value range
/// yield an empty set.
pub fn export_contours(grid: &SurfaceGrid, levels: &[f64]) -> Vec<ContourLevel> {
    let range = grid.range();
    levels
        .iter()
        .map(|&level| {
            let inside = range.is_some_and(|(lo, hi)| level > lo && level <= hi);
            let polylines = if inside {
                join(&segments(grid, level))
                    .into_iter()
                    .map(|keys| {
                        let closed = keys.len() > 2 && keys.first() == keys.last();
                        Polyline {
                            points: keys.iter().map(|&k| crossing(grid, k, level)).collect(),
                            closed,
                        }
                    })
                    .collect()
            } else {
                Vec::new()
            };
            ContourLevel { level, polylines }
        })
        .collect()
}

/// `count` evenly spaced levels strictly inside the grid's value range.
pub fn default_levels(grid: &SurfaceGrid, count: usize) -> Vec<f64> {
    match grid.range() {
        Some((lo, hi)) if hi > lo => (1..=count)
            .map(|k| lo + (hi - lo) * k as f64 / (count + 1) as f64)
            .collect(),
        _ => Vec::new(),
    }
}
