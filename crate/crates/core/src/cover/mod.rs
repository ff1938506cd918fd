//! Skin adapted ball covers with radii Θ = ξ·δ, sorted into families whose
//! 10Θ-balls are pairwise disjoint, and their quantitatively transversal refinement.

mod qt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, NONE};
use crate::skinfield::SkinField;
use crate::surface::DiscreteHypersurface;

pub use qt::{qt_perturb, tube_opening_check, verify_qt, QtConfig, QtReport, TubeReport};

/// How the size parameter ξ is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiMode {
    /// ξ < 1/(10³·L) with L the field's certified Lipschitz constant.
    Strict,
    /// ξ ≤ `xi0` for a configured `xi0 < 1`.
    Relaxed { xi0: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoverConfig {
    pub mode: XiMode,
    /// Upper bound checked against the observed family count and covering maxima.
    pub family_bound: usize,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig { mode: XiMode::Relaxed { xi0: 0.5 }, family_bound: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverStats {
    pub family_count: usize,
    /// Vertices excluded from all statistics (outer truncation).
    pub excluded: usize,
    /// `histogram_rho1[k]` = number of vertices lying in exactly k open Θ-balls.
    pub histogram_rho1: Vec<usize>,
    pub covering_max_rho1: usize,
    pub covering_max_rho2: usize,
    /// Maximum count of open 10Θ-balls; at most the family count by disjointness.
    pub covering_max_rho10: usize,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCover {
    pub surface_id: String,
    pub skin_id: String,
    pub xi: f64,
    pub centers: Vec<usize>,
    pub theta: Vec<f64>,
    /// Family index in 1..=F per center.
    pub family: Vec<usize>,
    pub qt_margin: Option<f64>,
    pub stats: CoverStats,
}

impl BallCover {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cover serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn family_count(&self) -> usize {
        self.family.iter().copied().max().unwrap_or(0)
    }
}

pub fn skin_id(skin: &SkinField) -> String {
    crate::content_id(skin.to_json().as_bytes())
}

fn check_skin(h: &DiscreteHypersurface, skin: &SkinField) -> Result<()> {
    if skin.surface_id != h.id() || skin.delta.len() != h.vertex_count() {
        return Err(Error::Mismatch("skin field does not belong to this surface".into()));
    }
    if skin.delta.iter().any(|d| d.is_infinite()) {
        return Err(Error::TotallyGeodesic);
    }
    Ok(())
}

/// Vertices reached within closed radius `r` of `src`, as `(vertex, distance)`.
pub(crate) fn ball(h: &DiscreteHypersurface, src: usize, r: f64) -> Vec<(usize, f64)> {
    bounded(h, &[(src, 0.0)], r)
}

pub(crate) fn bounded(h: &DiscreteHypersurface, src: &[(usize, f64)], r: f64) -> Vec<(usize, f64)> {
    use std::collections::{BinaryHeap, HashMap};
    let g = h.graph();
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    for &(s, d) in src {
        if d <= r && dist.get(&s).is_none_or(|&o| d < o) {
            dist.insert(s, d);
            heap.push(graph::MinKey { key: d, tie: 0.0, vertex: s });
        }
    }
    let mut out = Vec::new();
    let mut done = std::collections::HashSet::new();
    while let Some(graph::MinKey { key, vertex: u, .. }) = heap.pop() {
        if !done.insert(u) {
            continue;
        }
        out.push((u, key));
        for (w, _, len) in g.neighbors(u) {
            let nd = key + len;
            if nd <= r && !done.contains(&w) && dist.get(&w).is_none_or(|&o| nd < o) {
                dist.insert(w, nd);
                heap.push(graph::MinKey { key: nd, tie: 0.0, vertex: w });
            }
        }
    }
    out
}

fn xi_limit(skin: &SkinField, mode: XiMode) -> f64 {
    match mode {
        XiMode::Strict => 1.0 / (1e3 * skin.lipschitz_bound.max(f64::MIN_POSITIVE)),
        XiMode::Relaxed { xi0 } => xi0,
    }
}

/// Greedy construction of a skin adapted cover.
///
/// Vertices are visited in order of decreasing δ (ties by index). A vertex inside an
/// accepted closed Θ-ball is skipped; otherwise it becomes a center in the smallest
/// family whose members m all satisfy d > 10Θ(m) + 10Θ(new). Because earlier centers
/// have radii at least as large, a new center never contains an earlier one.
pub fn build_skin_cover(h: &DiscreteHypersurface, skin: &SkinField, xi: f64, config: CoverConfig) -> Result<BallCover> {
    check_skin(h, skin)?;
    let limit = xi_limit(skin, config.mode);
    let strict = matches!(config.mode, XiMode::Strict);
    let in_range = xi > 0.0 && if strict { xi < limit } else { xi <= limit && limit < 1.0 };
    if !in_range {
        return Err(Error::InvalidParameter(format!(
            "ξ = {xi} outside the admissible range (0, {limit:.3e}{}",
            if strict { ")" } else { "]" }
        )));
    }
    let n = h.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| skin.delta[b].total_cmp(&skin.delta[a]).then(a.cmp(&b)));

    let mut covered = vec![false; n];
    // near[v]: accepted centers m with d(m, v) ≤ 20Θ(m), with that distance.
    let mut near: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut centers = Vec::new();
    let mut theta = Vec::new();
    let mut family = Vec::new();
    for &a in &order {
        if covered[a] {
            continue;
        }
        let ta = xi * skin.delta[a];
        let mut forbidden: Vec<usize> =
            near[a].iter().filter(|&&(m, d)| d <= 10.0 * theta[m] + 10.0 * ta).map(|&(m, _)| family[m]).collect();
        forbidden.sort_unstable();
        forbidden.dedup();
        let mut f = 1;
        for &x in &forbidden {
            if x == f {
                f += 1;
            } else if x > f {
                break;
            }
        }
        let id = centers.len();
        centers.push(a);
        theta.push(ta);
        family.push(f);
        for (v, d) in ball(h, a, 20.0 * ta) {
            if d <= ta {
                covered[v] = true;
            }
            near[v].push((id, d));
        }
    }
    let mut cover = BallCover {
        surface_id: h.id(),
        skin_id: skin_id(skin),
        xi,
        centers,
        theta,
        family,
        qt_margin: None,
        stats: CoverStats {
            family_count: 0,
            excluded: 0,
            histogram_rho1: vec![],
            covering_max_rho1: 0,
            covering_max_rho2: 0,
            covering_max_rho10: 0,
            within_bound: true,
        },
    };
    cover.stats = compute_stats(h, &cover, config.family_bound);
    Ok(cover)
}

/// For every vertex z, the number of centers x with d(x, z) < ρ·Θ(x).
pub fn covering_number_stats(h: &DiscreteHypersurface, cover: &BallCover, rho: f64) -> Result<Vec<usize>> {
    if !(rho > 0.0 && rho <= 10.0) {
        return Err(Error::InvalidParameter(format!("ρ = {rho} outside (0, 10]")));
    }
    Ok(counts(h, cover, rho))
}

fn counts(h: &DiscreteHypersurface, cover: &BallCover, rho: f64) -> Vec<usize> {
    let n = h.vertex_count();
    cover
        .centers
        .par_iter()
        .zip(&cover.theta)
        .fold(
            || vec![0usize; n],
            |mut acc, (&c, &t)| {
                for (v, d) in ball(h, c, rho * t) {
                    if d < rho * t {
                        acc[v] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0usize; n], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

pub(crate) fn compute_stats(h: &DiscreteHypersurface, cover: &BallCover, bound: usize) -> CoverStats {
    let included: Vec<usize> = (0..h.vertex_count()).filter(|&v| !h.is_outer(v)).collect();
    let max_over = |c: &[usize]| included.iter().map(|&v| c[v]).max().unwrap_or(0);
    let c1 = counts(h, cover, 1.0);
    let c2 = counts(h, cover, 2.0);
    let c10 = counts(h, cover, 10.0);
    let mut histogram = vec![0usize; max_over(&c1) + 1];
    for &v in &included {
        histogram[c1[v]] += 1;
    }
    let family_count = cover.family_count();
    let covering_max_rho10 = max_over(&c10);
    CoverStats {
        family_count,
        excluded: h.vertex_count() - included.len(),
        histogram_rho1: histogram,
        covering_max_rho1: max_over(&c1),
        covering_max_rho2: max_over(&c2),
        covering_max_rho10,
        within_bound: family_count <= bound && covering_max_rho10 <= bound,
    }
}

/// Result of an exhaustive invariant scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub uncovered: Vec<usize>,
    /// Same-family pairs (center ids) with intersecting 10Θ-balls.
    pub family_overlaps: Vec<(usize, usize)>,
    /// Pairs (p, q) of center ids with q in the closed Θ-ball of p.
    pub center_inclusions: Vec<(usize, usize)>,
    pub theta_mismatches: usize,
}

impl CoverCheck {
    pub fn ok(&self) -> bool {
        self.uncovered.is_empty()
            && self.family_overlaps.is_empty()
            && self.center_inclusions.is_empty()
            && self.theta_mismatches == 0
    }
}

/// Exhaustive check of coverage, within-family 10Θ disjointness, center exclusion and Θ = ξδ.
pub fn check_cover(h: &DiscreteHypersurface, skin: &SkinField, cover: &BallCover) -> CoverCheck {
    let n = h.vertex_count();
    let mut center_id = vec![NONE; n];
    for (i, &c) in cover.centers.iter().enumerate() {
        center_id[c] = i;
    }
    let theta_mismatches =
        cover.centers.iter().zip(&cover.theta).filter(|&(&c, &t)| t != cover.xi * skin.delta[c]).count();
    let per_center: Vec<(Vec<usize>, Vec<(usize, usize)>, Vec<(usize, usize)>)> = (0..cover.centers.len())
        .into_par_iter()
        .map(|i| {
            let (c, t) = (cover.centers[i], cover.theta[i]);
            let mut covered = Vec::new();
            let mut overlaps = Vec::new();
            let mut inclusions = Vec::new();
            // Each overlapping pair is found from its center with the larger radius.
            for (v, d) in ball(h, c, 20.0 * t) {
                if d <= t {
                    covered.push(v);
                }
                let j = center_id[v];
                if j == NONE || j == i {
                    continue;
                }
                if d <= t {
                    inclusions.push((i, j));
                }
                let smaller = (cover.theta[j], j) < (t, i);
                if smaller && cover.family[j] == cover.family[i] && d <= 10.0 * t + 10.0 * cover.theta[j] {
                    overlaps.push((i.min(j), i.max(j)));
                }
            }
            (covered, overlaps, inclusions)
        })
        .collect();
    let mut is_covered = vec![false; n];
    let mut family_overlaps = Vec::new();
    let mut center_inclusions = Vec::new();
    for (cov, ov, inc) in per_center {
        for v in cov {
            is_covered[v] = true;
        }
        family_overlaps.extend(ov);
        center_inclusions.extend(inc);
    }
    let uncovered = (0..n).filter(|&v| !is_covered[v] && !h.is_outer(v)).collect();
    CoverCheck { uncovered, family_overlaps, center_inclusions, theta_mismatches }
}

/// Assemble a cover from explicit centers and families (radii from the skin field).
pub fn cover_from_centers(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    xi: f64,
    centers: Vec<usize>,
    family: Vec<usize>,
    family_bound: usize,
) -> Result<BallCover> {
    check_skin(h, skin)?;
    if centers.len() != family.len() || family.contains(&0) {
        return Err(Error::Malformed("one family index ≥ 1 per center required".into()));
    }
    if let Some(&c) = centers.iter().find(|&&c| c >= h.vertex_count()) {
        return Err(Error::InvalidParameter(format!("center {c} out of range")));
    }
    let theta = centers.iter().map(|&c| xi * skin.delta[c]).collect();
    let mut cover = BallCover {
        surface_id: h.id(),
        skin_id: skin_id(skin),
        xi,
        centers,
        theta,
        family,
        qt_margin: None,
        stats: CoverStats {
            family_count: 0,
            excluded: 0,
            histogram_rho1: vec![],
            covering_max_rho1: 0,
            covering_max_rho2: 0,
            covering_max_rho10: 0,
            within_bound: true,
        },
    };
    cover.stats = compute_stats(h, &cover, family_bound);
    Ok(cover)
}
