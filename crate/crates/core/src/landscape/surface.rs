use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LandscapeError;
use crate::Family;

/// Absolute tolerance for center/ray consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Loss samples along `w0 + τ(w_ij − w0)`, `τ ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub i: usize,
    pub j: usize,
    pub ts: Vec<f64>,
    #[serde(rename = "Ls")]
    pub losses: Vec<f64>,
}

/// Loss values on a 2D grid around a checkpoint. `loss[i][j]` is the loss at
/// `(s[i], t[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSurfaceGrid {
    pub rho: f64,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(rename = "L")]
    pub loss: Vec<Vec<f64>>,
    pub base_loss: f64,
    pub family: Family,
    #[serde(default)]
    pub rays: Vec<Ray>,
}

fn check_axis(name: &'static str, xs: &[f64]) -> Result<usize, LandscapeError> {
    if xs.len() < 3 {
        return Err(LandscapeError::TooSmall);
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(LandscapeError::NonFinite(format!("{name} coordinate")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LandscapeError::NonMonotone(name));
    }
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = xs.len();
    if (0..n).any(|k| (xs[k] + xs[n - 1 - k]).abs() > CONSISTENCY_TOL * scale.max(1.0)) {
        return Err(LandscapeError::NotSymmetric(name));
    }
    xs.iter().position(|&x| x == 0.0).ok_or(LandscapeError::MissingCenter)
}

impl LossSurfaceGrid {
    pub fn load(path: &Path) -> Result<Self, LandscapeError> {
        let text = std::fs::read_to_string(path).map_err(|e| LandscapeError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LandscapeError> {
        let grid: Self = serde_json::from_str(text).map_err(|e| LandscapeError::Parse(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    /// Index of the `(0, 0)` grid point.
    pub fn center(&self) -> Result<(usize, usize), LandscapeError> {
        let ci = self.s.iter().position(|&x| x == 0.0).ok_or(LandscapeError::MissingCenter)?;
        let cj = self.t.iter().position(|&x| x == 0.0).ok_or(LandscapeError::MissingCenter)?;
        Ok((ci, cj))
    }

    pub fn validate(&self) -> Result<(), LandscapeError> {
        let ci = check_axis("s", &self.s)?;
        let cj = check_axis("t", &self.t)?;
        if self.loss.len() != self.s.len() || self.loss.iter().any(|row| row.len() != self.t.len()) {
            return Err(LandscapeError::Shape);
        }
        if !self.base_loss.is_finite() || self.loss.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LandscapeError::NonFinite("loss".into()));
        }
        if (self.loss[ci][cj] - self.base_loss).abs() > CONSISTENCY_TOL {
            return Err(LandscapeError::CenterMismatch);
        }
        let mut seen = BTreeSet::new();
        for ray in &self.rays {
            let bad = |why: &str| LandscapeError::InvalidRay { i: ray.i, j: ray.j, reason: why.into() };
            if ray.i >= self.s.len() || ray.j >= self.t.len() {
                return Err(bad("index out of range"));
            }
            if !seen.insert((ray.i, ray.j)) {
                return Err(bad("duplicate ray"));
            }
            if ray.ts.len() != ray.losses.len() || ray.ts.len() < 2 {
                return Err(bad("need matching ts and Ls with at least two samples"));
            }
            if ray.ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(bad("ts must be strictly increasing"));
            }
            if ray.ts[0] != 0.0 || *ray.ts.last().unwrap() != 1.0 {
                return Err(bad("ts must start at 0 and end at 1"));
            }
            if ray.losses.iter().any(|v| !v.is_finite()) {
                return Err(LandscapeError::NonFinite("ray loss".into()));
            }
            let end = *ray.losses.last().unwrap();
            if (ray.losses[0] - self.base_loss).abs() > CONSISTENCY_TOL
                || (end - self.loss[ray.i][ray.j]).abs() > CONSISTENCY_TOL
            {
                return Err(LandscapeError::InconsistentRay { i: ray.i, j: ray.j });
            }
        }
        Ok(())
    }

    /// Same surface with the two axes swapped.
    pub fn transposed(&self) -> Self {
        let loss = (0..self.t.len())
            .map(|j| (0..self.s.len()).map(|i| self.loss[i][j]).collect())
            .collect();
        let rays = self
            .rays
            .iter()
            .map(|r| Ray { i: r.j, j: r.i, ..r.clone() })
            .collect();
        Self {
            s: self.t.clone(),
            t: self.s.clone(),
            loss,
            rays,
            ..self.clone()
        }
    }

    /// Every loss value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            loss: self.loss.iter().map(|r| r.iter().map(|v| v * c).collect()).collect(),
            base_loss: self.base_loss * c,
            rays: self
                .rays
                .iter()
                .map(|r| Ray { losses: r.losses.iter().map(|v| v * c).collect(), ..r.clone() })
                .collect(),
            ..self.clone()
        }
    }

    /// Bilinear interpolation of the grid at `(x, y)`; coordinates are
    /// clamped to the grid box.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let (i, fx) = locate(&self.s, x);
        let (j, fy) = locate(&self.t, y);
        let l = &self.loss;
        (1.0 - fx) * (1.0 - fy) * l[i][j]
            + fx * (1.0 - fy) * l[i + 1][j]
            + (1.0 - fx) * fy * l[i][j + 1]
            + fx * fy * l[i + 1][j + 1]
    }
}

/// Cell index `k` with `xs[k] <= x <= xs[k+1]` and the fractional offset.
fn locate(xs: &[f64], x: f64) -> (usize, f64) {
    let x = x.clamp(xs[0], xs[xs.len() - 1]);
    let k = xs.partition_point(|&v| v <= x).saturating_sub(1).min(xs.len() - 2);
    (k, (x - xs[k]) / (xs[k + 1] - xs[k]))
}

/// Number of samples per ray in generated surfaces.
pub const DEMO_RAY_SAMPLES: usize = 65;

/// Analytic test surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DemoKind {
    /// `a s² + b t²`
    Quadratic { a: f64, b: f64 },
    /// `c s`
    Plane { c: f64 },
    /// Ring ridge of height 1 at radius `ρ/2`; rays to the border climb over it.
    Bump,
    /// `s⁴ + t⁴ + s² + 2t² + st`
    Quartic,
}

impl DemoKind {
    pub fn eval(&self, s: f64, t: f64, radius: f64) -> f64 {
        match *self {
            DemoKind::Quadratic { a, b } => a * s * s + b * t * t,
            DemoKind::Plane { c } => c * s,
            DemoKind::Bump => {
                let r = (s * s + t * t).sqrt();
                let width = radius / 8.0;
                (-(r - radius / 2.0).powi(2) / (2.0 * width * width)).exp()
            }
            DemoKind::Quartic => s.powi(4) + t.powi(4) + s * s + 2.0 * t * t + s * t,
        }
    }
}

/// Sample `f` on the symmetric grid `k·spacing`, `|k| ≤ ⌊radius/spacing⌋`,
/// with an exact ray to every non-center grid point.
pub fn surface_from_fn(
    f: impl Fn(f64, f64) -> f64,
    spacing: f64,
    radius: f64,
    family: Family,
) -> Result<LossSurfaceGrid, LandscapeError> {
    if !(spacing > 0.0) || !(radius >= spacing) {
        return Err(LandscapeError::InvalidDemo("need 0 < spacing <= radius".into()));
    }
    let half = (radius / spacing + 1e-9).floor() as i64;
    let axis: Vec<f64> = (-half..=half).map(|k| k as f64 * spacing).collect();
    let loss: Vec<Vec<f64>> = axis.iter().map(|&x| axis.iter().map(|&y| f(x, y)).collect()).collect();
    let c = half as usize;
    let ts: Vec<f64> = (0..DEMO_RAY_SAMPLES).map(|k| k as f64 / (DEMO_RAY_SAMPLES - 1) as f64).collect();
    let mut rays = Vec::new();
    for i in 0..axis.len() {
        for j in 0..axis.len() {
            if (i, j) == (c, c) {
                continue;
            }
            // endpoints copied from the grid so they agree bit-for-bit
            let mut losses: Vec<f64> = ts.iter().map(|&u| f(u * axis[i], u * axis[j])).collect();
            losses[0] = loss[c][c];
            *losses.last_mut().unwrap() = loss[i][j];
            rays.push(Ray { i, j, ts: ts.clone(), losses });
        }
    }
    Ok(LossSurfaceGrid {
        rho: half as f64 * spacing,
        s: axis.clone(),
        t: axis,
        base_loss: loss[c][c],
        loss,
        family,
        rays,
    })
}

pub fn demo_surface(kind: DemoKind, spacing: f64, radius: f64) -> Result<LossSurfaceGrid, LandscapeError> {
    surface_from_fn(|s, t| kind.eval(s, t, radius), spacing, radius, Family::Rdl)
}
