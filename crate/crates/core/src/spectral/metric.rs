use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::dijkstra;
use crate::skinfield::SkinField;
use crate::surface::{dist_to_sigma, DiscreteHypersurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Edge weight len·(⟨A⟩(u) + ⟨A⟩(v))/2.
    Skin,
    /// Edge weight len / harmonic mean of dist(·, Σ) at the endpoints.
    QuasiHyperbolic,
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skin" => Ok(MetricKind::Skin),
            "quasi_hyperbolic" | "qh" => Ok(MetricKind::QuasiHyperbolic),
            _ => Err(Error::InvalidParameter(format!("unknown metric '{s}'"))),
        }
    }
}

fn skin_weights(h: &DiscreteHypersurface, skin: &SkinField) -> Result<Vec<f64>> {
    if skin.surface_id != h.id() {
        return Err(Error::Mismatch("skin field does not belong to the surface".into()));
    }
    let a = &skin.values;
    Ok(h.edges.iter().map(|&(u, v, len)| len * (a[u] + a[v]) / 2.0).collect())
}

fn quasi_hyperbolic_weights(h: &DiscreteHypersurface) -> Result<Vec<f64>> {
    if !h.is_singular() {
        return Err(Error::RegularSurface);
    }
    let d = dist_to_sigma(h).values;
    Ok(h.edges.iter().map(|&(u, v, len)| len * (1.0 / d[u] + 1.0 / d[v]) / 2.0).collect())
}

fn weights(h: &DiscreteHypersurface, skin: Option<&SkinField>, kind: MetricKind) -> Result<Vec<f64>> {
    match kind {
        MetricKind::Skin => {
            let skin = skin.ok_or_else(|| Error::InvalidParameter("the skin metric needs a skin field".into()))?;
            skin_weights(h, skin)
        }
        MetricKind::QuasiHyperbolic => quasi_hyperbolic_weights(h),
    }
}

/// Each pair is solved from its smaller endpoint, so swapped pairs agree bit for bit.
fn pair_distances(h: &DiscreteHypersurface, w: &[f64], pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = h.vertex_count();
    if let Some(&(p, q)) = pairs.iter().find(|&&(p, q)| p >= n || q >= n) {
        return Err(Error::InvalidParameter(format!("pair ({p}, {q}) out of range")));
    }
    let mut by_source: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, &(p, q)) in pairs.iter().enumerate() {
        by_source.entry(p.min(q)).or_default().push((i, p.max(q)));
    }
    let groups: Vec<_> = by_source.into_iter().collect();
    let solved: Vec<Vec<(usize, f64)>> = groups
        .par_iter()
        .map(|(s, targets)| {
            let d = dijkstra(h.graph(), &[(*s, 0.0)], w, None, f64::INFINITY).dist;
            targets.iter().map(|&(i, t)| (i, d[t])).collect()
        })
        .collect();
    let mut out = vec![0.0; pairs.len()];
    for (i, d) in solved.into_iter().flatten() {
        out[i] = d;
    }
    Ok(out)
}

/// d_⟨A⟩ for each pair. Zero everywhere on a totally geodesic surface.
pub fn skin_metric_distances(h: &DiscreteHypersurface, skin: &SkinField, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pair_distances(h, &skin_weights(h, skin)?, pairs)
}

/// k_{H∖Σ} for each pair; rejected on regular surfaces.
pub fn quasi_hyperbolic_distances(h: &DiscreteHypersurface, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    pair_distances(h, &quasi_hyperbolic_weights(h)?, pairs)
}

/// Distance matrix of a metric on sample vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMetric {
    pub surface_id: String,
    pub kind: MetricKind,
    pub samples: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
}

pub fn metric_matrix(
    h: &DiscreteHypersurface,
    skin: Option<&SkinField>,
    kind: MetricKind,
    samples: &[usize],
) -> Result<SampledMetric> {
    let w = weights(h, skin, kind)?;
    if let Some(&s) = samples.iter().find(|&&s| s >= h.vertex_count()) {
        return Err(Error::InvalidParameter(format!("sample vertex {s} out of range")));
    }
    let mut distances: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|&s| {
            let d = dijkstra(h.graph(), &[(s, 0.0)], &w, None, f64::INFINITY).dist;
            samples.iter().map(|&t| d[t]).collect()
        })
        .collect();
    for i in 0..samples.len() {
        for j in 0..i {
            distances[i][j] = distances[j][i];
        }
    }
    Ok(SampledMetric { surface_id: h.id(), kind, samples: samples.to_vec(), distances })
}

/// `count` vertices off the proxy and the outer boundary, evenly spaced in index order.
pub fn sample_vertices(h: &DiscreteHypersurface, count: usize) -> Vec<usize> {
    let pool: Vec<usize> = (0..h.vertex_count()).filter(|&v| !h.is_proxy(v) && !h.is_outer(v)).collect();
    if count >= pool.len() {
        return pool;
    }
    (0..count).map(|k| pool[k * pool.len() / count]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub kind: MetricKind,
    /// Largest four-point defect over the evaluated quadruples.
    pub delta: f64,
    pub quadruples: usize,
    pub worst: [usize; 4],
    pub diameter: f64,
}

/// Half the gap between the two largest of the three pairings' sums.
fn defect(d: &[Vec<f64>], q: [usize; 4]) -> f64 {
    let [x, y, z, w] = q;
    let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
    s.sort_by(|a, b| b.total_cmp(a));
    (s[0] - s[1]) / 2.0
}

/// Quadruples to evaluate: all of them when there are at most `budget`, otherwise
/// `budget` draws of the additive recurrence with the generalized golden ratio in
/// four dimensions (draws with repeated indices are skipped).
fn quadruples(m: usize, budget: usize) -> Vec<[usize; 4]> {
    let total = (m as u128) * (m as u128 - 1) * (m as u128 - 2) * (m as u128 - 3) / 24;
    if total <= budget as u128 {
        let mut out = Vec::with_capacity(total as usize);
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    for d in c + 1..m {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        return out;
    }
    // φ solves φ⁵ = φ + 1.
    let mut phi = 1.2f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(0.2);
    }
    let step: Vec<f64> = (1..=4).map(|j| phi.powi(-j)).collect();
    (0..budget)
        .filter_map(|i| {
            let mut q = [0usize; 4];
            for (k, slot) in q.iter_mut().enumerate() {
                let t = (0.5 + step[k] * i as f64).fract();
                *slot = ((t * m as f64) as usize).min(m - 1);
            }
            let mut s = q;
            s.sort_unstable();
            (s[0] < s[1] && s[1] < s[2] && s[2] < s[3]).then_some(q)
        })
        .collect()
}

/// Four-point Gromov hyperbolicity estimate of a sampled metric.
pub fn four_point_delta(metric: &SampledMetric, quadruple_budget: usize) -> Result<HyperbolicityReport> {
    let m = metric.samples.len();
    if m < 4 {
        return Err(Error::Empty(format!("four-point condition needs 4 samples, got {m}")));
    }
    let d = &metric.distances;
    let qs = quadruples(m, quadruple_budget);
    let (delta, worst) = qs
        .par_iter()
        .map(|&q| (defect(d, q), q))
        .reduce(|| (0.0, [0, 1, 2, 3]), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let diameter = d.iter().flatten().copied().fold(0.0, f64::max);
    Ok(HyperbolicityReport {
        kind: metric.kind,
        delta,
        quadruples: qs.len(),
        worst: worst.map(|i| metric.samples[i]),
        diameter,
    })
}
