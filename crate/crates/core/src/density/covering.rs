use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::DensityError;
use crate::liealg::LayerSplitting;
use crate::nilgroup::{ManifoldPoint, NilGroup};

/// Cap on the number of grid samples.
pub const MAX_SAMPLES: usize = 1_000_000;

/// Grid side actually used for `grid_n^d` samples under [`MAX_SAMPLES`].
pub fn effective_grid(grid_n: usize, dim: usize) -> usize {
    if dim == 0 {
        return grid_n;
    }
    let mut n = grid_n.max(1);
    let fits = |n: usize| n.checked_pow(dim as u32).is_some_and(|t| t <= MAX_SAMPLES);
    if !fits(n) {
        n = ((MAX_SAMPLES as f64).powf(1.0 / dim as f64) + 1e-9).floor() as usize;
        while !fits(n) {
            n -= 1;
        }
    }
    n
}

/// Lifted copies `p γ` of a point set, bucketed by horizontal coordinates.
///
/// Horizontal coordinates of `log(c s^{-1})` are differences of horizontal
/// coordinates, and the quasi-norm dominates their Euclidean norm, which gives
/// the pruning bound for the ring search.
struct Cloud {
    dim: usize,
    hdim: usize,
    coords: Vec<f64>,
    lo: Vec<f64>,
    cells_per_axis: Vec<usize>,
    cell: f64,
    offsets: Vec<usize>,
    members: Vec<u32>,
}

impl Cloud {
    fn build(group: &NilGroup, points: &[ManifoldPoint<f64>], search_radius: i64) -> Self {
        let dim = group.dim();
        let hdim = group.algebra().horizontal_dim();
        let translates = group.lattice_box::<f64>(search_radius);
        let mut coords = Vec::with_capacity(points.len() * translates.len() * dim);
        for p in points {
            for g in &translates {
                coords.extend(group.mul(p.rep(), g).coords);
            }
        }
        let n = coords.len() / dim.max(1);
        let mut lo = vec![f64::INFINITY; hdim];
        let mut hi = vec![f64::NEG_INFINITY; hdim];
        for c in coords.chunks(dim.max(1)) {
            for a in 0..hdim {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        let extent = (0..hdim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max).max(1e-9);
        // About four points per cell.
        let per_axis = if hdim == 0 {
            1
        } else {
            ((n as f64 / 4.0).powf(1.0 / hdim as f64).ceil() as usize).clamp(1, 4096)
        };
        let cell = extent / per_axis as f64 * (1.0 + 1e-12);
        let cells_per_axis: Vec<usize> = (0..hdim)
            .map(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).min(per_axis + 1))
            .collect();
        let total_cells: usize = cells_per_axis.iter().product();
        let mut cloud = Cloud {
            dim,
            hdim,
            coords,
            lo,
            cells_per_axis,
            cell,
            offsets: Vec::new(),
            members: Vec::new(),
        };
        let keys: Vec<usize> = (0..n)
            .map(|i| {
                let c = &cloud.coords[i * dim..i * dim + hdim];
                cloud.flat(&cloud.cell_of(c))
            })
            .collect();
        let mut counts = vec![0usize; total_cells + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..total_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut members = vec![0u32; n];
        for (i, &k) in keys.iter().enumerate() {
            members[fill[k]] = i as u32;
            fill[k] += 1;
        }
        cloud.offsets = counts;
        cloud.members = members;
        cloud
    }

    fn cell_of(&self, h: &[f64]) -> Vec<i64> {
        (0..self.hdim)
            .map(|a| {
                let i = ((h[a] - self.lo[a]) / self.cell).floor() as i64;
                i.clamp(0, self.cells_per_axis[a] as i64 - 1)
            })
            .collect()
    }

    fn flat(&self, idx: &[i64]) -> usize {
        let mut f = 0usize;
        for a in (0..self.hdim).rev() {
            f = f * self.cells_per_axis[a] + idx[a] as usize;
        }
        f
    }

    fn point(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Smallest `ρ(sample, c)` over the cloud, or some distance `≤ cutoff` as
    /// soon as one is found.
    fn nearest(
        &self,
        group: &NilGroup,
        split: &LayerSplitting,
        sample: &[f64],
        cutoff: f64,
    ) -> f64 {
        let neg: Vec<f64> = sample.iter().map(|v| -v).collect();
        let rho = |c: &[f64]| split.quasi_norm(&group.algebra().bch_fast(c, &neg));
        if self.hdim == 0 {
            let mut best = f64::INFINITY;
            for i in 0..self.coords.len() / self.dim.max(1) {
                best = best.min(rho(self.point(i as u32)));
                if best <= cutoff {
                    break;
                }
            }
            return best;
        }
        let center = self.cell_of(&sample[..self.hdim]);
        let max_ring = self.cells_per_axis.iter().copied().max().unwrap_or(1) as i64;
        let mut best = f64::INFINITY;
        let mut offset = vec![0i64; self.hdim];
        for r in 0..=max_ring {
            // Visit cells on the boundary of the Chebyshev ball of radius r.
            let side = 2 * r + 1;
            let count = (side as u64).pow(self.hdim as u32);
            for code in 0..count {
                let mut c = code;
                let mut on_ring = false;
                let mut inside = true;
                for o in offset.iter_mut().take(self.hdim) {
                    *o = (c % side as u64) as i64 - r;
                    c /= side as u64;
                }
                for a in 0..self.hdim {
                    if offset[a].abs() == r {
                        on_ring = true;
                    }
                    let idx = center[a] + offset[a];
                    if idx < 0 || idx >= self.cells_per_axis[a] as i64 {
                        inside = false;
                    }
                }
                if !on_ring || !inside {
                    continue;
                }
                let idx: Vec<i64> = (0..self.hdim).map(|a| center[a] + offset[a]).collect();
                let f = self.flat(&idx);
                for &m in &self.members[self.offsets[f]..self.offsets[f + 1]] {
                    best = best.min(rho(self.point(m)));
                    if best <= cutoff {
                        return best;
                    }
                }
            }
            if best <= r as f64 * self.cell {
                break;
            }
        }
        best
    }
}

/// Largest distance from a grid sample of the fundamental domain to the point set,
/// with distances `min_γ ρ(s, p γ)` over translates in `[-search_radius, search_radius]^d`.
pub fn covering_radius(
    group: &NilGroup,
    split: &LayerSplitting,
    points: &[ManifoldPoint<f64>],
    grid_n: usize,
    search_radius: i64,
) -> Result<f64, DensityError> {
    if points.is_empty() {
        return Err(DensityError::EmptySet);
    }
    if search_radius < 1 {
        return Err(DensityError::Group(crate::nilgroup::GroupError::SearchRadius));
    }
    let d = group.dim();
    let n = effective_grid(grid_n, d);
    let cloud = Cloud::build(group, points, search_radius);
    let total = n.pow(d as u32);
    // Nonnegative floats order like their bit patterns. A sample already
    // within the running maximum cannot raise it, so its search may stop early.
    let worst = AtomicU64::new(0f64.to_bits());
    (0..total).into_par_iter().for_each(|mut idx| {
        let t: Vec<f64> = (0..d)
            .map(|_| {
                let v = (idx % n) as f64 / n as f64;
                idx /= n;
                v
            })
            .collect();
        let s = group.from_second_kind(&t);
        let cutoff = f64::from_bits(worst.load(Ordering::Relaxed));
        let r = cloud.nearest(group, split, &s.coords, cutoff);
        if r > cutoff {
            worst.fetch_max(r.to_bits(), Ordering::Relaxed);
        }
    });
    Ok(f64::from_bits(worst.into_inner()))
}
