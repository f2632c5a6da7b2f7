//! Oblique thresholding: the minimizer over `V1` of
//! `||u - z||^2 + 2 alpha psi(u + u2)` for a fixed `u2` in the complement `V2`.
//!
//! The minimizer is `S(z + u2 - eta) - u2` where `S = I - P_{alpha K}` and the
//! multiplier `eta` in `V2` solves `eta = pi_V2 P_{alpha K}(eta - (z + u2))`.
//! `eta` is found by fixed-point iteration.

use std::ops::Range;

use crate::decomp::SubspaceDecomposition;
use crate::error::{Error, Result};
use crate::grid::{DualField, GridFunction};
use crate::prox::{chambolle_project, ChambolleConfig};

/// Evaluator for `P_{alpha K}`; may carry warm-start state.
pub type Projector<'a> = dyn FnMut(&GridFunction) -> Result<GridFunction> + 'a;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaConfig {
    pub max_iters: usize,
    /// Stop once the sup-norm increment falls below `rel_tol * (1 + ||z + u2||)`.
    pub rel_tol: f64,
    /// Divergence is declared when `||eta|| > guard * (1 + ||z + u2||)`.
    pub guard: f64,
}

impl EtaConfig {
    pub fn tv() -> Self {
        EtaConfig {
            max_iters: 10,
            rel_tol: 1e-4,
            guard: 1e6,
        }
    }

    pub fn l1() -> Self {
        EtaConfig {
            max_iters: 20,
            ..Self::tv()
        }
    }
}

#[derive(Clone, Debug)]
pub struct EtaState {
    pub eta: GridFunction,
    pub iters_used: usize,
    pub diverged: bool,
    /// `||eta - pi_V2 P(eta - (z + u2))||` from the last sweep.
    pub residual: f64,
}

/// Fixed-point iteration for the multiplier, started at `warm` (else zero).
pub fn eta_fixed_point(
    z: &GridFunction,
    u2: &GridFunction,
    projector: &mut Projector<'_>,
    complement: &dyn Fn(&GridFunction) -> GridFunction,
    warm: Option<&GridFunction>,
    cfg: &EtaConfig,
) -> Result<EtaState> {
    let s = z.add(u2);
    let scale = 1.0 + s.norm();
    let mut eta = match warm {
        Some(w) => complement(w),
        None => GridFunction::zeros(z.dims()),
    };
    let mut residual = 0.0;
    let mut iters_used = 0;
    while iters_used < cfg.max_iters {
        iters_used += 1;
        let next = complement(&projector(&eta.sub(&s))?);
        let increment = next.sup_distance(&eta);
        residual = next.distance(&eta);
        eta = next;
        if eta.norm() > cfg.guard * scale {
            return Ok(EtaState {
                eta,
                iters_used,
                diverged: true,
                residual,
            });
        }
        if increment < cfg.rel_tol * scale {
            break;
        }
    }
    Ok(EtaState {
        eta,
        iters_used,
        diverged: false,
        residual,
    })
}

#[derive(Clone, Debug)]
pub struct ObliqueOutput {
    pub u1: GridFunction,
    /// Norm of the `V2` part of `S(z + u2 - eta) - u2` before it is projected
    /// away. Zero at an exact multiplier.
    pub v2_residual: f64,
}

/// `S(z + u2 - eta) - u2`, returned through the projection onto `V1`.
///
/// Uses `S(z + u2 - eta) - u2 = z - eta + P(eta - z - u2)`.
pub fn oblique_threshold(
    z: &GridFunction,
    u2: &GridFunction,
    eta: &EtaState,
    projector: &mut Projector<'_>,
    own: &dyn Fn(&GridFunction) -> GridFunction,
    subspace: usize,
) -> Result<ObliqueOutput> {
    if eta.diverged {
        return Err(Error::EtaDiverged {
            subspace,
            norm: eta.eta.norm(),
        });
    }
    let s = z.add(u2);
    let shifted = projector(&eta.eta.sub(&s))?;
    let mut raw = z.sub(&eta.eta);
    raw.axpy(1.0, &shifted);
    let u1 = own(&raw);
    let v2_residual = raw.distance(&u1);
    Ok(ObliqueOutput { u1, v2_residual })
}

/// Half-width of the row band around each interface on which the multiplier
/// is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StripeSpec {
    pub half_width: usize,
}

impl Default for StripeSpec {
    fn default() -> Self {
        StripeSpec { half_width: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StripeBands {
    /// Disjoint row ranges, sorted.
    pub bands: Vec<Range<usize>>,
    /// Set when a band had to be cut at the subdomain or grid boundary.
    pub clipped: bool,
}

/// Row bands `[interface - w, interface + w)` around the interfaces of stripe
/// `i`, with the inner half cut to the stripe itself and the outer half cut to
/// the grid. Overlapping bands are merged.
pub fn restrict_to_stripe(dec: &SubspaceDecomposition, i: usize, spec: StripeSpec) -> StripeBands {
    let total = dec.dims().rows();
    let own = dec.row_range(i);
    let w = spec.half_width;
    let mut clipped = false;
    let mut bands: Vec<Range<usize>> = Vec::new();
    if own.start > 0 {
        let lo = own.start.saturating_sub(w);
        let hi = (own.start + w).min(own.end);
        clipped |= own.start < w || own.start + w > own.end;
        bands.push(lo..hi);
    }
    if own.end < total {
        let lo = own.end.saturating_sub(w).max(own.start);
        let hi = (own.end + w).min(total);
        clipped |= own.end < own.start + w || own.end + w > total;
        match bands.last_mut() {
            Some(prev) if prev.end >= lo => prev.end = hi,
            _ => bands.push(lo..hi),
        }
    }
    StripeBands { bands, clipped }
}

/// Warm-start state for the band-restricted multiplier computation.
#[derive(Clone, Debug, Default)]
pub struct BandState {
    pub duals: Vec<Option<DualField>>,
}

/// Multiplier for total variation on stripe `i`, computed separately on each
/// row band as its own grid with Neumann boundaries and zero-extended.
#[allow(clippy::too_many_arguments)]
pub fn eta_fixed_point_stripes(
    z: &GridFunction,
    u2: &GridFunction,
    alpha: f64,
    chambolle: &ChambolleConfig,
    dec: &SubspaceDecomposition,
    i: usize,
    bands: &StripeBands,
    state: &mut BandState,
    warm: Option<&GridFunction>,
    cfg: &EtaConfig,
) -> Result<EtaState> {
    let dims = z.dims();
    let w = dims.row_len();
    let own_rows = dec.row_range(i);
    state.duals.resize(bands.bands.len(), None);
    let mut eta = GridFunction::zeros(dims);
    let mut iters_used = 0;
    let mut diverged = false;
    let mut residual_sq = 0.0;
    for (band, dual) in bands.bands.iter().zip(state.duals.iter_mut()) {
        let zb = z.row_band(band.start, band.end);
        let ub = u2.row_band(band.start, band.end);
        let warm_b = warm.map(|e| e.row_band(band.start, band.end));
        // rows of the own stripe, relative to the band
        let lo = own_rows.start.max(band.start) - band.start;
        let hi = own_rows.end.min(band.end).max(band.start) - band.start;
        let complement = move |v: &GridFunction| {
            let mut out = v.clone();
            if hi > lo {
                out.values_mut()[lo * w..hi * w].fill(0.0);
            }
            out
        };
        let mut projector = |v: &GridFunction| -> Result<GridFunction> {
            let p = chambolle_project(v, alpha, chambolle, dual.as_ref())?;
            *dual = Some(p.dual);
            Ok(p.projection)
        };
        let st = eta_fixed_point(&zb, &ub, &mut projector, &complement, warm_b.as_ref(), cfg)?;
        iters_used = iters_used.max(st.iters_used);
        diverged |= st.diverged;
        residual_sq += st.residual * st.residual;
        eta.values_mut()[band.start * w..band.end * w].copy_from_slice(st.eta.values());
    }
    Ok(EtaState {
        eta,
        iters_used,
        diverged,
        residual: residual_sq.sqrt(),
    })
}

/// Rows `[start - w, end + w)` of stripe `i`, cut to the grid: the domain on
/// which the stripe problem is solved once the multiplier is band-limited.
pub fn extended_rows(dec: &SubspaceDecomposition, i: usize, spec: StripeSpec) -> Range<usize> {
    let own = dec.row_range(i);
    own.start.saturating_sub(spec.half_width)..(own.end + spec.half_width).min(dec.dims().rows())
}

/// Oblique thresholding for stripe `i` with the total variation taken only
/// over its extended rows (a Neumann grid of their own). Outside that domain
/// the other components contribute a constant, so a multiplier supported near
/// the interfaces suffices.
#[allow(clippy::too_many_arguments)]
pub fn oblique_threshold_stripes(
    z: &GridFunction,
    u2: &GridFunction,
    eta: &EtaState,
    alpha: f64,
    chambolle: &ChambolleConfig,
    dec: &SubspaceDecomposition,
    i: usize,
    spec: StripeSpec,
    dual: &mut Option<DualField>,
) -> Result<ObliqueOutput> {
    if eta.diverged {
        return Err(Error::EtaDiverged {
            subspace: i,
            norm: eta.eta.norm(),
        });
    }
    let dims = z.dims();
    let w = dims.row_len();
    let ext = extended_rows(dec, i, spec);
    let own = dec.row_range(i);
    let zb = z.row_band(ext.start, ext.end);
    let eb = eta.eta.row_band(ext.start, ext.end);
    let sb = zb.add(&u2.row_band(ext.start, ext.end));
    let p = chambolle_project(&eb.sub(&sb), alpha, chambolle, dual.as_ref())?;
    *dual = Some(p.dual);
    let mut raw = zb.sub(&eb);
    raw.axpy(1.0, &p.projection);
    let mut u1 = GridFunction::zeros(dims);
    let (lo, hi) = ((own.start - ext.start) * w, (own.end - ext.start) * w);
    u1.values_mut()[own.start * w..own.end * w].copy_from_slice(&raw.values()[lo..hi]);
    let v2_residual = raw.values()[..lo]
        .iter()
        .chain(&raw.values()[hi..])
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    Ok(ObliqueOutput { u1, v2_residual })
}
