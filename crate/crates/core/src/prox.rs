//! Soft thresholding for l1 and Chambolle's dual iteration for the projection
//! onto `alpha K`, where `K` is the set of divergences of dual fields with
//! node magnitudes at most one. `I - P_{alpha K}` is the proximity map of
//! `alpha * TV`.

use crate::error::{check_dims, Error, Result};
use crate::grid::{backward_div_into, forward_diff_into, Dims, DualField, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChambolleConfig {
    pub tau: f64,
    /// Stop once the largest per-node change of the dual field drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// Start from the dual field of the previous call instead of zero.
    pub warm_start: bool,
}

impl Default for ChambolleConfig {
    fn default() -> Self {
        ChambolleConfig {
            tau: 0.25,
            tol: 1e-3,
            max_iters: 2000,
            warm_start: true,
        }
    }
}

impl ChambolleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidArgument(format!(
                "chambolle step {} / tol {} / max_iters {} must be positive",
                self.tau, self.tol, self.max_iters
            )));
        }
        Ok(())
    }

    /// Step sizes above 1/4 are outside the known stability range.
    pub fn step_is_safe(&self) -> bool {
        self.tau <= 0.25
    }
}

/// Per-coefficient l1 weights bounded below by a positive floor.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
    floor: f64,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>, floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::InvalidArgument("weight floor must be positive".into()));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w >= floor)) {
            return Err(Error::InvalidArgument(format!("weight {w} below floor {floor}")));
        }
        Ok(WeightVector { weights, floor })
    }

    pub fn uniform(len: usize) -> Self {
        WeightVector {
            weights: vec![1.0; len],
            floor: 1.0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn soft_threshold(x: f64, theta: f64) -> f64 {
    if x > theta {
        x - theta
    } else if x < -theta {
        x + theta
    } else {
        0.0
    }
}

/// Componentwise `S_{alpha w_k}`; missing weights mean `w = 1`.
pub fn soft_threshold_vector(
    u: &GridFunction,
    alpha: f64,
    w: Option<&WeightVector>,
) -> Result<GridFunction> {
    let mut out = u.clone();
    match w {
        None => out.values_mut().iter_mut().for_each(|x| *x = soft_threshold(*x, alpha)),
        Some(w) => {
            check_weights(w, u)?;
            for (x, wk) in out.values_mut().iter_mut().zip(&w.weights) {
                *x = soft_threshold(*x, alpha * wk);
            }
        }
    }
    Ok(out)
}

/// Projection onto `alpha K` for the weighted l1 norm: the box `|v_k| <= alpha w_k`.
pub fn clamp_project(v: &GridFunction, alpha: f64, w: Option<&WeightVector>) -> Result<GridFunction> {
    let mut out = v.clone();
    match w {
        None => out.values_mut().iter_mut().for_each(|x| *x = x.clamp(-alpha, alpha)),
        Some(w) => {
            check_weights(w, v)?;
            for (x, wk) in out.values_mut().iter_mut().zip(&w.weights) {
                *x = x.clamp(-alpha * wk, alpha * wk);
            }
        }
    }
    Ok(out)
}

fn check_weights(w: &WeightVector, u: &GridFunction) -> Result<()> {
    if w.len() != u.len() {
        return Err(Error::ShapeMismatch {
            expected: u.dims(),
            found: Dims::D1(w.len()),
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Projection {
    /// `alpha * div p`, the approximation of `P_{alpha K}(g)`.
    pub projection: GridFunction,
    pub dual: DualField,
    pub iters: usize,
}

/// Chambolle's semi-implicit iteration for `P_{alpha K}(g)` on either geometry,
/// started from `warm` when `cfg.warm_start` is set, otherwise from zero.
pub fn chambolle_project(
    g: &GridFunction,
    alpha: f64,
    cfg: &ChambolleConfig,
    warm: Option<&DualField>,
) -> Result<Projection> {
    cfg.validate()?;
    if !g.is_finite() {
        return Err(Error::NonFinite("projection input"));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must be nonnegative")));
    }
    let dims = g.dims();
    let mut p = match warm.filter(|_| cfg.warm_start) {
        Some(w) => {
            check_dims(dims, w.dims())?;
            w.clone()
        }
        None => DualField::zeros(dims),
    };
    if alpha == 0.0 {
        return Ok(Projection {
            projection: GridFunction::zeros(dims),
            dual: p,
            iters: 0,
        });
    }
    let n = dims.len();
    let two_d = dims.is_2d();
    let gv = g.values();
    let inv_alpha = 1.0 / alpha;
    let mut q = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut dy = vec![0.0; if two_d { n } else { 0 }];
    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        backward_div_into(dims, &p.x, &p.y, &mut q);
        for (qk, gk) in q.iter_mut().zip(gv) {
            *qk -= gk * inv_alpha;
        }
        forward_diff_into(&q, dims, &mut dx, &mut dy);
        let mut change: f64 = 0.0;
        if two_d {
            for k in 0..n {
                let mag = dx[k].hypot(dy[k]);
                let denom = 1.0 + cfg.tau * mag;
                let nx = (p.x[k] + cfg.tau * dx[k]) / denom;
                let ny = (p.y[k] + cfg.tau * dy[k]) / denom;
                change = change.max((nx - p.x[k]).hypot(ny - p.y[k]));
                p.x[k] = nx;
                p.y[k] = ny;
            }
        } else {
            for k in 0..n {
                let nx = (p.x[k] + cfg.tau * dx[k]) / (1.0 + cfg.tau * dx[k].abs());
                change = change.max((nx - p.x[k]).abs());
                p.x[k] = nx;
            }
        }
        if change < cfg.tol {
            break;
        }
    }
    backward_div_into(dims, &p.x, &p.y, &mut q);
    q.iter_mut().for_each(|v| *v *= alpha);
    Ok(Projection {
        projection: GridFunction::from_raw(dims, q),
        dual: p,
        iters,
    })
}

pub fn chambolle_project_1d(g: &GridFunction, alpha: f64, cfg: &ChambolleConfig) -> Result<Projection> {
    if g.dims().is_2d() {
        return Err(Error::InvalidArgument("expected a 1D signal".into()));
    }
    chambolle_project(g, alpha, cfg, None)
}

pub fn chambolle_project_2d(g: &GridFunction, alpha: f64, cfg: &ChambolleConfig) -> Result<Projection> {
    if !g.dims().is_2d() {
        return Err(Error::InvalidArgument("expected a 2D image".into()));
    }
    chambolle_project(g, alpha, cfg, None)
}

/// `g - P_{alpha K}(g)`: the minimizer of `||u - g||^2 + 2 alpha TV(u)`.
pub fn generalized_threshold(g: &GridFunction, alpha: f64, cfg: &ChambolleConfig) -> Result<GridFunction> {
    let p = chambolle_project(g, alpha, cfg, None)?;
    Ok(g.sub(&p.projection))
}
