use crate::error::{Error, Result};
use crate::grid::{Dims, GridFunction};
use crate::prox::soft_threshold;

/// Parameters of the direct two-domain subgradient scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaiveConfig {
    /// Fidelity weight on observed nodes; `1/(2 alpha)` matches `J`.
    pub lambda0: f64,
    pub tau: f64,
    pub eps: f64,
    pub h: f64,
    pub iters: usize,
    /// First node of the second subdomain.
    pub interface: usize,
    pub theta: ThetaRule,
}

/// Which gradient sets the threshold of the interface inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaRule {
    /// Gradient inside the subdomain being updated.
    OwnSide,
    /// Gradient inside the neighbouring subdomain.
    OtherSide,
}

impl NaiveConfig {
    pub fn new(alpha: f64, interface: usize) -> Self {
        NaiveConfig {
            lambda0: 1.0 / (2.0 * alpha),
            tau: 0.5,
            eps: 1e-4,
            h: 1.0,
            iters: 500,
            interface,
            theta: ThetaRule::OtherSide,
        }
    }
}

/// Row of the tridiagonal system: `lo * u[k-1] + diag * u[k] + up * u[k+1] = rhs`.
#[derive(Clone, Copy)]
struct Row {
    lo: f64,
    diag: f64,
    up: f64,
    rhs: f64,
}

fn thomas(rows: &[Row]) -> Vec<f64> {
    let n = rows.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for k in 0..n {
        let (lo, prev_c, prev_d) = if k == 0 { (0.0, 0.0, 0.0) } else { (rows[k].lo, c[k - 1], d[k - 1]) };
        let m = rows[k].diag - lo * prev_c;
        c[k] = rows[k].up / m;
        d[k] = (rows[k].rhs - lo * prev_d) / m;
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        x[k] = d[k] - if k + 1 < n { c[k] * x[k + 1] } else { 0.0 };
    }
    x
}

#[derive(Clone, Copy)]
enum Branch {
    Dirichlet,
    Plus,
    Minus,
}

/// Semi-implicit lagged-diffusivity update of one subdomain given in local
/// order with the interface as the last node. `b` is the neighbour's value
/// across the interface and `theta` the threshold of the interface inclusion
/// `u_last = b - S_theta(b - u_prev)`, solved implicitly by trying each branch.
fn subdomain_step(u: &[f64], g: &[f64], lambda: &[f64], cfg: &NaiveConfig, b: f64, theta: f64) -> Vec<f64> {
    let n = u.len();
    if n == 1 {
        return vec![b - soft_threshold(b - u[0], theta)];
    }
    let k = cfg.tau / (cfg.h * cfg.h);
    let c = |i: usize| (cfg.eps * cfg.eps + ((u[i] - u[i - 1]) / cfg.h).powi(2)).sqrt();
    let mut rows = Vec::with_capacity(n);
    rows.push(Row { lo: 0.0, diag: 1.0, up: -1.0, rhs: 0.0 });
    for i in 1..n - 1 {
        let (a, bb) = (k / c(i), k / c(i + 1));
        rows.push(Row {
            lo: -a,
            diag: 1.0 + a + bb,
            up: -bb,
            rhs: u[i] - 2.0 * cfg.tau * lambda[i] * (u[i] - g[i]),
        });
    }
    rows.push(Row { lo: 0.0, diag: 1.0, up: 0.0, rhs: 0.0 });
    let mut fallback = None;
    for branch in [Branch::Dirichlet, Branch::Plus, Branch::Minus] {
        let last = rows.len() - 1;
        rows[last] = match branch {
            Branch::Dirichlet => Row { lo: 0.0, diag: 1.0, up: 0.0, rhs: b },
            Branch::Plus => Row { lo: -1.0, diag: 1.0, up: 0.0, rhs: theta },
            Branch::Minus => Row { lo: -1.0, diag: 1.0, up: 0.0, rhs: -theta },
        };
        let x = thomas(&rows);
        let jump = b - x[n - 2];
        let consistent = match branch {
            Branch::Dirichlet => jump.abs() <= theta,
            Branch::Plus => jump > theta,
            Branch::Minus => jump < -theta,
        };
        if consistent {
            return x;
        }
        fallback.get_or_insert(x);
    }
    fallback.expect("at least one branch solved")
}

/// Direct two-domain scheme for 1D TV inpainting: alternating lagged
/// diffusivity steps on the two intervals with a soft-threshold condition at
/// the interface. Kept as a comparison method; it fails when the gradients on
/// both sides of the interface have equal magnitude.
///
/// `mask` is 1 on observed nodes and 0 inside the inpainting region.
pub fn naive_tv1d_solve(g: &GridFunction, mask: &GridFunction, cfg: &NaiveConfig) -> Result<GridFunction> {
    let Dims::D1(n) = g.dims() else {
        return Err(Error::InvalidArgument("naive solver is 1D only".into()));
    };
    if mask.dims() != g.dims() {
        return Err(Error::ShapeMismatch { expected: g.dims(), found: mask.dims() });
    }
    let m = cfg.interface;
    if m < 2 || m + 2 > n {
        return Err(Error::InvalidArgument(format!("interface {m} too close to the ends of {n} nodes")));
    }
    if !(cfg.tau > 0.0 && cfg.eps > 0.0 && cfg.h > 0.0 && cfg.lambda0 >= 0.0) {
        return Err(Error::InvalidArgument("naive solver parameters must be positive".into()));
    }
    let gv = g.values();
    let lambda: Vec<f64> = mask.values().iter().map(|&w| cfg.lambda0 * w).collect();
    let mut u = gv.to_vec();
    let grad = |u: &[f64], i: usize| (cfg.eps * cfg.eps + ((u[i] - u[i - 1]) / cfg.h).powi(2)).sqrt();
    for _ in 0..cfg.iters {
        let theta1 = cfg.h
            * match cfg.theta {
                ThetaRule::OwnSide => grad(&u, m - 1),
                ThetaRule::OtherSide => grad(&u, m + 1),
            };
        let left = subdomain_step(&u[..m], &gv[..m], &lambda[..m], cfg, u[m], theta1);
        u[..m].copy_from_slice(&left);

        // the second interval is handled in mirrored order so its interface is last
        let theta2 = cfg.h
            * match cfg.theta {
                ThetaRule::OwnSide => grad(&u, m + 1),
                ThetaRule::OtherSide => grad(&u, m - 1),
            };
        let rev = |s: &[f64]| s.iter().rev().copied().collect::<Vec<_>>();
        let right = subdomain_step(&rev(&u[m..]), &rev(&gv[m..]), &rev(&lambda[m..]), cfg, u[m - 1], theta2);
        for (dst, src) in u[m..].iter_mut().zip(right.iter().rev()) {
            *dst = *src;
        }
    }
    GridFunction::new(g.dims(), u)
}
