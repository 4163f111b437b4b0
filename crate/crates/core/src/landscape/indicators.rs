use serde::{Deserialize, Serialize};

use super::surface::LossSurfaceGrid;
use super::LandscapeError;
use crate::Family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeMetrics {
    pub p1: f64,
    pub p2: f64,
    pub pbar: f64,
    /// Grid points whose barrier came from a recorded ray.
    pub rays_used: usize,
    /// Grid points whose barrier came from bilinear interpolation.
    pub rays_interpolated: usize,
    /// True when any barrier term is interpolated.
    pub pbar_approximate: bool,
}

/// Worst slope between 4-neighbors.
pub fn p1(grid: &LossSurfaceGrid) -> f64 {
    let (ns, nt) = (grid.s.len(), grid.t.len());
    let mut worst = 0.0f64;
    for i in 0..ns {
        for j in 0..nt {
            if i + 1 < ns {
                worst = worst.max((grid.loss[i][j] - grid.loss[i + 1][j]).abs() / (grid.s[i + 1] - grid.s[i]));
            }
            if j + 1 < nt {
                worst = worst.max((grid.loss[i][j] - grid.loss[i][j + 1]).abs() / (grid.t[j + 1] - grid.t[j]));
            }
        }
    }
    worst
}

/// Relative tolerance when comparing the two spacings on each side of the
/// center.
const SPACING_TOL: f64 = 1e-6;

/// Largest eigenvalue of the central-difference Hessian at the center.
pub fn p2(grid: &LossSurfaceGrid) -> Result<f64, LandscapeError> {
    let (ci, cj) = grid.center()?;
    if ci == 0 || cj == 0 || ci + 1 >= grid.s.len() || cj + 1 >= grid.t.len() {
        return Err(LandscapeError::IrregularGrid);
    }
    let hs = grid.s[ci + 1] - grid.s[ci];
    let ht = grid.t[cj + 1] - grid.t[cj];
    let uniform = |h: f64, back: f64| (h - back).abs() <= SPACING_TOL * h;
    if !uniform(hs, grid.s[ci] - grid.s[ci - 1]) || !uniform(ht, grid.t[cj] - grid.t[cj - 1]) {
        return Err(LandscapeError::IrregularGrid);
    }
    let l = |di: isize, dj: isize| grid.loss[(ci as isize + di) as usize][(cj as isize + dj) as usize];
    let lss = (l(1, 0) - 2.0 * l(0, 0) + l(-1, 0)) / (hs * hs);
    let ltt = (l(0, 1) - 2.0 * l(0, 0) + l(0, -1)) / (ht * ht);
    let lst = (l(1, 1) - l(1, -1) - l(-1, 1) + l(-1, -1)) / (4.0 * hs * ht);
    let tr = lss + ltt;
    let det = lss * ltt - lst * lst;
    Ok((tr + (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierResult {
    pub pbar: f64,
    pub rays_used: usize,
    pub rays_interpolated: usize,
}

/// Interpolated samples per unit of grid-index distance along a segment.
const INTERP_SAMPLES_PER_CELL: usize = 16;

/// Maximal barrier over rays. Without `fallback` every boundary point needs
/// a recorded ray and only recorded rays contribute; with it, every grid
/// point lacking a ray uses a bilinear segment.
pub fn pbar(grid: &LossSurfaceGrid, fallback: bool) -> Result<BarrierResult, LandscapeError> {
    let (ci, cj) = grid.center()?;
    let (ns, nt) = (grid.s.len(), grid.t.len());
    let mut have = vec![vec![false; nt]; ns];
    let mut best = 0.0f64;
    for ray in &grid.rays {
        have[ray.i][ray.j] = true;
        let peak = ray.losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best = best.max(peak - grid.base_loss.max(grid.loss[ray.i][ray.j]));
    }
    let rays_used = grid.rays.len();
    let mut rays_interpolated = 0;
    for i in 0..ns {
        for j in 0..nt {
            if have[i][j] || (i, j) == (ci, cj) {
                continue;
            }
            if !fallback {
                let boundary = i == 0 || j == 0 || i + 1 == ns || j + 1 == nt;
                if boundary {
                    return Err(LandscapeError::MissingRays { i, j });
                }
                continue;
            }
            rays_interpolated += 1;
            let steps = INTERP_SAMPLES_PER_CELL * i.abs_diff(ci).max(j.abs_diff(cj));
            let peak = (0..=steps)
                .map(|k| {
                    let u = k as f64 / steps as f64;
                    grid.interpolate(u * grid.s[i], u * grid.t[j])
                })
                .fold(f64::NEG_INFINITY, f64::max);
            best = best.max(peak - grid.base_loss.max(grid.loss[i][j]));
        }
    }
    Ok(BarrierResult { pbar: best.max(0.0), rays_used, rays_interpolated })
}

pub fn landscape_metrics(grid: &LossSurfaceGrid, fallback: bool) -> Result<LandscapeMetrics, LandscapeError> {
    let b = pbar(grid, fallback)?;
    Ok(LandscapeMetrics {
        p1: p1(grid),
        p2: p2(grid)?,
        pbar: b.pbar,
        rays_used: b.rays_used,
        rays_interpolated: b.rays_interpolated,
        pbar_approximate: b.rays_interpolated > 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub val_score: f64,
    pub higher_is_better: bool,
    pub family: Family,
    pub metrics: LandscapeMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostSelection {
    pub chosen: String,
    pub chosen_index: usize,
    /// Votes per candidate in input order.
    pub votes: Vec<usize>,
}

pub const MAX_CANDIDATES: usize = 3;

/// Hard vote over P1, P2 and Pbar (each minimum gets a vote; tied minima
/// all receive it). Ties in votes go to the better validation score, then
/// the lower Pbar, then input order.
pub fn post_select(candidates: &[Candidate]) -> Result<PostSelection, LandscapeError> {
    let first = candidates.first().ok_or(LandscapeError::NoCandidates)?;
    if candidates.len() > MAX_CANDIDATES {
        return Err(LandscapeError::TooManyCandidates(candidates.len()));
    }
    if candidates.iter().any(|c| c.family != first.family) {
        return Err(LandscapeError::CrossFamilyComparison);
    }
    if candidates.iter().any(|c| c.higher_is_better != first.higher_is_better) {
        return Err(LandscapeError::MixedDirection);
    }
    let mut votes = vec![0usize; candidates.len()];
    let getters: [fn(&LandscapeMetrics) -> f64; 3] = [|m| m.p1, |m| m.p2, |m| m.pbar];
    for get in getters {
        let lo = candidates.iter().map(|c| get(&c.metrics)).fold(f64::INFINITY, f64::min);
        for (k, c) in candidates.iter().enumerate() {
            if get(&c.metrics) == lo {
                votes[k] += 1;
            }
        }
    }
    let sign = if first.higher_is_better { 1.0 } else { -1.0 };
    let mut chosen = 0;
    for k in 1..candidates.len() {
        let (a, b) = (&candidates[k], &candidates[chosen]);
        let better = votes[k]
            .cmp(&votes[chosen])
            .then((sign * a.val_score).total_cmp(&(sign * b.val_score)))
            .then(b.metrics.pbar.total_cmp(&a.metrics.pbar));
        if better == std::cmp::Ordering::Greater {
            chosen = k;
        }
    }
    Ok(PostSelection { chosen: candidates[chosen].id.clone(), chosen_index: chosen, votes })
}
