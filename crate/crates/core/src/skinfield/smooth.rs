use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Provenance, SkinField};
use crate::cover::{ball, skin_id, BallCover};
use crate::error::{Error, Result};
use crate::surface::DiscreteHypersurface;

/// Sandwich constants c1·δ ≤ δ* ≤ c2·δ and the largest edge gradient c3 of δ*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Outer vertices reached by no bump; they keep their unsmoothed δ and are left out of c1, c2, c3.
    pub unsupported: usize,
}

/// Cutoff profile: 1 on [0, 1], 0 on [2, ∞), quintic smoothstep in between (C² at both joins).
pub fn bump(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// δ*(x) = Σ_p δ(p)·φ(d(p, x)/Θ(p)) over the cover centers.
pub fn whitney_smooth(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    cover: &BallCover,
) -> Result<(SkinField, SmoothingReport)> {
    if cover.surface_id != h.id() || cover.skin_id != skin_id(skin) {
        return Err(Error::Mismatch("cover was built for a different surface or skin field".into()));
    }
    let n = h.vertex_count();
    let (sum, covered) = cover
        .centers
        .par_iter()
        .zip(&cover.theta)
        .fold(
            || (vec![0.0f64; n], vec![false; n]),
            |(mut acc, mut cov), (&c, &t)| {
                let dc = skin.delta[c];
                for (v, d) in ball(h, c, 2.0 * t) {
                    acc[v] += dc * bump(d / t);
                    if d <= t {
                        cov[v] = true;
                    }
                }
                (acc, cov)
            },
        )
        .reduce(
            || (vec![0.0f64; n], vec![false; n]),
            |(a, ca), (b, cb)| {
                let s = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                let c = ca.iter().zip(&cb).map(|(x, y)| *x || *y).collect();
                (s, c)
            },
        );
    let missing = (0..n).filter(|&v| !covered[v] && !h.is_outer(v)).count();
    if missing > 0 {
        return Err(Error::NotCovering(missing));
    }
    let supported: Vec<bool> = sum.iter().map(|&s| s > 0.0).collect();
    let delta: Vec<f64> = (0..n).map(|v| if supported[v] { sum[v] } else { skin.delta[v] }).collect();
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for v in (0..n).filter(|&v| supported[v] && !h.is_outer(v)) {
        let r = delta[v] / skin.delta[v];
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    let c3 = h
        .edges
        .iter()
        .filter(|&&(u, v, _)| supported[u] && supported[v])
        .map(|&(u, v, len)| (delta[u] - delta[v]).abs() / len)
        .fold(0.0, f64::max);
    let report = SmoothingReport { c1, c2, c3, unsupported: supported.iter().filter(|s| !**s).count() };
    Ok((SkinField::from_delta(h, skin.alpha, Provenance::Smoothed, delta), report))
}
