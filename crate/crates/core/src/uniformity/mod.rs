//! Skin uniform curves: certificates, dyadic pipelines, constrained search and
//! blow-up inheritance. Domains assembled from them live in [`domain`].

pub mod domain;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MinKey, NONE};
use crate::skinfield::{metric_skin_transform, SkinField};
use crate::surface::{generate_link, regenerate_scaled_cone, scale_surface, DiscreteHypersurface, SurfaceKind};

pub use domain::{
    arc_hull, bubbled_hull, build_link_space, verify_domain, DomainReport, HullChecks, LinkSpace, SkinDomain,
};

/// Number of δ-quantile thresholds swept by the constrained search.
pub const SEARCH_QUANTILES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    Pipeline,
    ConstrainedSearch,
}

impl std::str::FromStr for CurveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pipeline" => Ok(CurveMethod::Pipeline),
            "constrained_search" | "search" => Ok(CurveMethod::ConstrainedSearch),
            _ => Err(Error::InvalidParameter(format!("unknown curve method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformCurveCertificate {
    pub surface_id: String,
    pub p: usize,
    pub q: usize,
    pub method: CurveMethod,
    pub path: Vec<usize>,
    pub length: f64,
    pub c_quasi: f64,
    /// max over interior vertices z of l_min(z)/δ(z).
    pub c_cone: f64,
    pub c: f64,
    /// Shorter of the two arc lengths from each path vertex to the endpoints.
    pub l_min: Vec<f64>,
}

impl UniformCurveCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// Shortest path between `p` and `q` through vertices accepted by `allowed`
/// (endpoints are always accepted). Returns the vertex sequence and its length.
pub(crate) fn constrained_path(
    h: &DiscreteHypersurface,
    p: usize,
    q: usize,
    allowed: impl Fn(usize) -> bool,
) -> Option<(Vec<usize>, f64)> {
    let g = h.graph();
    let n = h.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NONE; n];
    let mut heap = BinaryHeap::new();
    dist[p] = 0.0;
    heap.push(MinKey { key: 0.0, tie: 0.0, vertex: p });
    while let Some(MinKey { key, vertex: u, .. }) = heap.pop() {
        if key > dist[u] {
            continue;
        }
        if u == q {
            let mut path = vec![q];
            let mut cur = q;
            while cur != p {
                cur = pred[cur];
                path.push(cur);
            }
            path.reverse();
            return Some((path, key));
        }
        for (w, _, len) in g.neighbors(u) {
            if w != q && !allowed(w) {
                continue;
            }
            let nd = key + len;
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = u;
                heap.push(MinKey { key: nd, tie: 0.0, vertex: w });
            }
        }
    }
    None
}

/// Graph distance between two vertices.
pub(crate) fn distance(h: &DiscreteHypersurface, p: usize, q: usize) -> f64 {
    constrained_path(h, p, q, |_| true).map_or(f64::INFINITY, |(_, d)| d)
}

#[derive(PartialEq)]
struct MaxKey {
    key: f64,
    vertex: usize,
}

impl Eq for MaxKey {}

impl Ord for MaxKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for MaxKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Widest path: the largest b such that some p–q path has `level(z) ≥ b` at every
/// interior vertex z. +∞ for adjacent endpoints, −∞ when no path exists.
fn bottleneck(h: &DiscreteHypersurface, p: usize, q: usize, level: impl Fn(usize) -> f64) -> f64 {
    let g = h.graph();
    let mut best = vec![f64::NEG_INFINITY; h.vertex_count()];
    let mut heap = BinaryHeap::new();
    best[p] = f64::INFINITY;
    heap.push(MaxKey { key: f64::INFINITY, vertex: p });
    while let Some(MaxKey { key, vertex: u }) = heap.pop() {
        if key < best[u] {
            continue;
        }
        if u == q {
            return key;
        }
        for (w, _, _) in g.neighbors(u) {
            let b = if w == q { key } else { key.min(level(w)) };
            if b > best[w] {
                best[w] = b;
                heap.push(MaxKey { key: b, vertex: w });
            }
        }
    }
    f64::NEG_INFINITY
}

/// Exact evaluation of the quasi-geodesic and twisted double skin cone ratios on a
/// discrete curve. Returns (c_quasi, c_cone, c, l_min per vertex, length).
fn evaluate(h: &DiscreteHypersurface, skin: &SkinField, path: &[usize]) -> Result<(f64, f64, f64, Vec<f64>, f64)> {
    if path.len() < 2 {
        return Err(Error::Malformed("a curve needs at least two vertices".into()));
    }
    if let Some(&v) = path.iter().find(|&&v| v >= h.vertex_count()) {
        return Err(Error::Malformed(format!("vertex {v} out of range")));
    }
    let (p, q) = (path[0], path[path.len() - 1]);
    if p == q {
        return Err(Error::Malformed("curve endpoints coincide".into()));
    }
    let mut prefix = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    prefix.push(0.0);
    for w in path.windows(2) {
        let (_, len) = h
            .graph()
            .edge_between(w[0], w[1])
            .ok_or_else(|| Error::Malformed(format!("no edge between {} and {}", w[0], w[1])))?;
        acc += len;
        prefix.push(acc);
    }
    let length = acc;
    let l_min: Vec<f64> = prefix.iter().map(|&s| s.min(length - s)).collect();
    let c_cone = (1..path.len() - 1)
        .map(|i| {
            let d = skin.delta[path[i]];
            if d.is_infinite() {
                0.0
            } else {
                l_min[i] / d
            }
        })
        .fold(0.0, f64::max);
    let c_quasi = length / distance(h, p, q);
    Ok((c_quasi, c_cone, c_quasi.max(c_cone), l_min, length))
}

/// (c_quasi, c_cone, c) of a vertex polyline.
pub fn certify_constant(h: &DiscreteHypersurface, skin: &SkinField, path: &[usize]) -> Result<(f64, f64, f64)> {
    let (a, b, c, _, _) = evaluate(h, skin, path)?;
    Ok((a, b, c))
}

fn certificate(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    path: Vec<usize>,
    method: CurveMethod,
) -> Result<UniformCurveCertificate> {
    let (c_quasi, c_cone, c, l_min, length) = evaluate(h, skin, &path)?;
    Ok(UniformCurveCertificate {
        surface_id: h.id(),
        p: path[0],
        q: path[path.len() - 1],
        method,
        path,
        length,
        c_quasi,
        c_cone,
        c,
        l_min,
    })
}

/// Distances from `x`, +∞ beyond `radius`.
fn around(h: &DiscreteHypersurface, x: usize, radius: f64) -> Vec<f64> {
    let g = h.graph();
    crate::graph::dijkstra(g, &[(x, 0.0)], g.edge_lengths(), None, radius).dist
}

/// Largest δ, then smallest `detour`, then smallest index.
fn pick_on_course(
    skin: &SkinField,
    candidates: impl Iterator<Item = usize>,
    detour: impl Fn(usize) -> f64,
) -> Option<usize> {
    candidates
        .min_by(|&a, &b| skin.delta[b].total_cmp(&skin.delta[a]).then(detour(a).total_cmp(&detour(b))).then(a.cmp(&b)))
}

fn pick_max_delta(skin: &SkinField, candidates: impl Iterator<Item = usize>) -> Option<usize> {
    candidates.min_by(|&a, &b| skin.delta[b].total_cmp(&skin.delta[a]).then(a.cmp(&b)))
}

/// The vertex of largest δ (ties by index) with 2^{-k}·unit ≤ d(x, ·) < 2^{-k+1}·unit.
/// It must lie in 𝔼(2^{-k}·t·unit).
pub fn annulus_sample(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    x: usize,
    k: i32,
    t: f64,
    unit: f64,
) -> Result<usize> {
    if x >= h.vertex_count() || !(unit > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter("annulus needs a valid center, t ≥ 0 and unit > 0".into()));
    }
    let lo = unit * 2f64.powi(-k);
    let near = around(h, x, 2.0 * lo);
    let v = pick_max_delta(skin, (0..h.vertex_count()).filter(|&v| near[v] >= lo && near[v] < 2.0 * lo))
        .ok_or_else(|| Error::Empty(format!("dyadic annulus k = {k} around vertex {x} has no vertices")))?;
    if skin.delta[v] < t * lo {
        return Err(Error::Empty(format!("annulus k = {k} around vertex {x} misses 𝔼(2^-k·t)")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub certificate: UniformCurveCertificate,
    /// Largest τ' for which every segment k connects inside 𝔼(2^{-k}·τ'·unit).
    pub tau_prime: f64,
    /// min over anchors p_k of δ(p_k)·2^k/unit.
    pub t_achieved: f64,
    pub unit: f64,
    /// Chain p_0, p_1, …, x with the dyadic index of each anchor.
    pub anchors: Vec<(usize, i32)>,
    pub segment_lengths: Vec<f64>,
}

/// Dyadic pipeline Γ from p0 to x. The unit is d(x, p0); anchors p_k are the largest-δ
/// vertices of the annuli 2^{-k}·unit ≤ d(x, ·) < 2^{-k+1}·unit for k = 1, 2, … down to
/// the mesh resolution, ties going to the smallest d(x, ·) + d(·, p0). Segment k is the
/// shortest path inside 𝔼(2^{-k}·τ'·unit) for the largest feasible τ'.
pub fn pipeline_curve(h: &DiscreteHypersurface, skin: &SkinField, x: usize, p0: usize, t: f64) -> Result<Pipeline> {
    let n = h.vertex_count();
    if x >= n || p0 >= n || x == p0 {
        return Err(Error::InvalidParameter("pipeline needs distinct vertices in range".into()));
    }
    let unit = distance(h, x, p0);
    if !unit.is_finite() {
        return Err(Error::Disconnected(format!("vertices {x} and {p0} are not connected")));
    }
    let near = around(h, x, unit);
    let from_p0 = around(h, p0, 2.0 * unit);
    let ring: Vec<usize> = (0..n).filter(|&v| v != x && !h.is_proxy(v) && near[v] < unit).collect();
    let nearest = ring.iter().map(|&v| near[v]).fold(f64::INFINITY, f64::min);
    let mut anchors = vec![(p0, 0)];
    let mut k = 1;
    while unit * 2f64.powi(-k + 1) > nearest {
        let lo = unit * 2f64.powi(-k);
        let inside = ring.iter().copied().filter(|&v| near[v] >= lo && near[v] < 2.0 * lo);
        let pick = pick_on_course(skin, inside, |v| near[v] + from_p0[v]);
        if let Some(v) = pick {
            if skin.delta[v] < t * lo {
                return Err(Error::Empty(format!("annulus k = {k} around vertex {x} misses 𝔼(2^-k·t)")));
            }
            anchors.push((v, k));
        }
        k += 1;
    }
    let t_achieved = anchors.iter().map(|&(v, k)| skin.delta[v] * 2f64.powi(k) / unit).fold(f64::INFINITY, f64::min);
    anchors.push((x, k));

    let level = |v: usize, k: i32| -> f64 {
        if h.is_proxy(v) {
            f64::NEG_INFINITY
        } else {
            skin.delta[v] * 2f64.powi(k) / unit
        }
    };
    let segments: Vec<(usize, usize, i32)> = anchors.windows(2).map(|w| (w[0].0, w[1].0, w[0].1)).collect();
    let bottlenecks: Vec<f64> = segments.par_iter().map(|&(a, b, k)| bottleneck(h, a, b, |v| level(v, k))).collect();
    if let Some(i) = bottlenecks.iter().position(|b| *b == f64::NEG_INFINITY) {
        return Err(Error::Disconnected(format!(
            "pipeline segment k = {} has no path off the singular proxy",
            segments[i].2
        )));
    }
    let mut tau_prime = bottlenecks.iter().copied().fold(f64::INFINITY, f64::min);
    if tau_prime.is_infinite() {
        tau_prime = t_achieved;
    }
    let pieces: Vec<(Vec<usize>, f64)> = segments
        .par_iter()
        .map(|&(a, b, k)| constrained_path(h, a, b, |v| level(v, k) >= tau_prime).expect("bottleneck path exists"))
        .collect();
    let mut path = vec![p0];
    let mut segment_lengths = Vec::with_capacity(pieces.len());
    for (piece, len) in pieces {
        path.extend_from_slice(&piece[1..]);
        segment_lengths.push(len);
    }
    Ok(Pipeline {
        certificate: certificate(h, skin, path, CurveMethod::Pipeline)?,
        tau_prime,
        t_achieved,
        unit,
        anchors,
        segment_lengths,
    })
}

/// Common start point for the two pipelines: largest δ in the intersection of the annuli
/// [U/2, U] around p and q, with U = 2·d(p,q)/3; ties go to the smallest d(p,·) + d(·,q).
fn common_start(h: &DiscreteHypersurface, skin: &SkinField, p: usize, q: usize, d: f64) -> Option<usize> {
    let u = 2.0 * d / 3.0;
    let (dp, dq) = (around(h, p, u), around(h, q, u));
    let both = (0..h.vertex_count())
        .filter(|&v| !h.is_proxy(v) && dp[v] >= u / 2.0 && dp[v] <= u && dq[v] >= u / 2.0 && dq[v] <= u);
    pick_on_course(skin, both, |v| dp[v] + dq[v])
}

fn pipeline_pair(h: &DiscreteHypersurface, skin: &SkinField, p: usize, q: usize) -> Result<UniformCurveCertificate> {
    let d = distance(h, p, q);
    if !d.is_finite() {
        return Err(Error::Disconnected(format!("no path between {p} and {q}")));
    }
    let Some(p0) = common_start(h, skin, p, q, d) else {
        // Endpoints closer than the mesh resolves: the pipeline is the shortest path.
        let (path, _) = constrained_path(h, p, q, |v| !h.is_proxy(v))
            .or_else(|| constrained_path(h, p, q, |_| true))
            .expect("connected");
        return certificate(h, skin, path, CurveMethod::Pipeline);
    };
    let gp = pipeline_curve(h, skin, p, p0, 0.0)?;
    let gq = pipeline_curve(h, skin, q, p0, 0.0)?;
    let mut path: Vec<usize> = gp.certificate.path.iter().rev().copied().collect();
    path.extend_from_slice(&gq.certificate.path[1..]);
    certificate(h, skin, path, CurveMethod::Pipeline)
}

fn search_thresholds(h: &DiscreteHypersurface, skin: &SkinField) -> Vec<f64> {
    let mut finite: Vec<f64> =
        (0..h.vertex_count()).filter(|&v| !h.is_proxy(v) && skin.delta[v].is_finite()).map(|v| skin.delta[v]).collect();
    finite.sort_by(f64::total_cmp);
    let mut s = vec![0.0];
    if !finite.is_empty() {
        let m = finite.len() - 1;
        s.extend((1..SEARCH_QUANTILES).map(|i| finite[i * m / SEARCH_QUANTILES]));
    }
    s.dedup();
    s
}

/// Sweep thresholds s over δ-quantiles; shortest path inside 𝔼(s) (optionally intersected
/// with `within`), keeping the certificate with the smallest c. `seed` joins the pool.
pub(crate) fn search_curve(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    p: usize,
    q: usize,
    within: Option<&[bool]>,
    seed: Option<UniformCurveCertificate>,
) -> Result<UniformCurveCertificate> {
    let candidates: Vec<UniformCurveCertificate> = search_thresholds(h, skin)
        .par_iter()
        .filter_map(|&s| {
            let ok = |v: usize| !h.is_proxy(v) && skin.delta[v] >= s && within.is_none_or(|w| w[v]);
            constrained_path(h, p, q, ok).map(|(path, _)| certificate(h, skin, path, CurveMethod::ConstrainedSearch))
        })
        .collect::<Result<_>>()?;
    seed.into_iter()
        .map(|mut c| {
            c.method = CurveMethod::ConstrainedSearch;
            c
        })
        .chain(candidates)
        .min_by(|a, b| a.c.total_cmp(&b.c))
        .ok_or_else(|| Error::Disconnected(format!("no curve between {p} and {q} inside the allowed set")))
}

/// A skin uniform curve from p to q with its certificate.
///
/// The constrained search also evaluates the pipeline curve, so its c never exceeds
/// the pipeline's.
pub fn skin_uniform_curve(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    p: usize,
    q: usize,
    method: CurveMethod,
) -> Result<UniformCurveCertificate> {
    let n = h.vertex_count();
    if p >= n || q >= n || p == q {
        return Err(Error::InvalidParameter("curve endpoints must be distinct vertices in range".into()));
    }
    if skin.surface_id != h.id() {
        return Err(Error::Mismatch("skin field does not belong to this surface".into()));
    }
    match method {
        CurveMethod::Pipeline => pipeline_pair(h, skin, p, q),
        CurveMethod::ConstrainedSearch => {
            let seed = pipeline_pair(h, skin, p, q).ok();
            search_curve(h, skin, p, q, None, seed)
        }
    }
}

/// Real root of x³ = x + 1.
fn plastic_number() -> f64 {
    let mut x = 1.3f64;
    for _ in 0..50 {
        x -= (x * x * x - x - 1.0) / (3.0 * x * x - 1.0);
    }
    x
}

/// Up to `count` distinct pairs from `pool`, drawn from the two-dimensional additive
/// recurrence with step (1/ρ, 1/ρ²), ρ the plastic number. Draws repeating an endpoint
/// or a pair are skipped.
fn recurrence_pairs(pool: &[usize], count: usize) -> Vec<(usize, usize)> {
    let m = pool.len();
    if m < 2 {
        return Vec::new();
    }
    let rho = plastic_number();
    let (a1, a2) = (1.0 / rho, 1.0 / (rho * rho));
    let cap = (m * (m - 1) / 2).min(count);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(cap);
    let mut i = 1u64;
    while out.len() < cap && i < 64 * (count as u64 + m as u64) {
        let x = ((0.5 + i as f64 * a1).fract() * m as f64) as usize;
        let y = ((0.5 + i as f64 * a2).fract() * m as f64) as usize;
        i += 1;
        if x != y && seen.insert((x.min(y), x.max(y))) {
            out.push((pool[x], pool[y]));
        }
    }
    out
}

/// Deterministic, well-spread endpoint pairs among vertices that are neither proxy nor
/// outer boundary.
pub fn deterministic_pairs(h: &DiscreteHypersurface, count: usize) -> Vec<(usize, usize)> {
    let pool: Vec<usize> = (0..h.vertex_count()).filter(|&v| !h.is_proxy(v) && !h.is_outer(v)).collect();
    recurrence_pairs(&pool, count)
}

/// Deterministic pairs with both endpoints on the singular proxy.
pub fn proxy_pairs(h: &DiscreteHypersurface, count: usize) -> Vec<(usize, usize)> {
    let pool: Vec<usize> = (0..h.vertex_count()).filter(|&v| h.is_proxy(v)).collect();
    recurrence_pairs(&pool, count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpReport {
    pub lambdas: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub base_c: Vec<f64>,
    /// max over λ and pairs of |c_λ − c_1| / c_1.
    pub max_deviation: f64,
    /// Largest certificate of the radially projected curves on the link, cones only.
    pub link_c: Option<f64>,
}

/// Certify matched pairs on the surface and on its blow-ups by each λ (regenerated for
/// cones, rescaled otherwise) and compare the constants.
pub fn blow_up_invariance_check(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    lambdas: &[f64],
    pairs: &[(usize, usize)],
    method: CurveMethod,
) -> Result<BlowUpReport> {
    let base: Vec<UniformCurveCertificate> =
        pairs.iter().map(|&(p, q)| skin_uniform_curve(h, skin, p, q, method)).collect::<Result<_>>()?;
    let mut max_deviation = 0.0f64;
    for &lambda in lambdas {
        let scaled = match regenerate_scaled_cone(h, lambda)? {
            Some(g) => g,
            None => scale_surface(h, lambda)?,
        };
        let scaled_skin = metric_skin_transform(&scaled, skin.alpha)?;
        for (cert, &(p, q)) in base.iter().zip(pairs) {
            let c = skin_uniform_curve(&scaled, &scaled_skin, p, q, method)?.c;
            max_deviation = max_deviation.max((c - cert.c).abs() / cert.c);
        }
    }
    let link_c = match (h.kind, &h.layout) {
        (SurfaceKind::LawsonCone { p, q }, Some(layout)) => {
            let link = generate_link(p, q, layout.angular_res)?;
            let link_skin = metric_skin_transform(&link, skin.alpha)?;
            let mut worst: Option<f64> = None;
            for cert in &base {
                let mut projected: Vec<usize> = cert.path.iter().map(|&v| v % layout.link_size).collect();
                projected.dedup();
                if projected.len() < 2 || projected[0] == projected[projected.len() - 1] {
                    continue;
                }
                let (_, _, c) = certify_constant(&link, &link_skin, &projected)?;
                worst = Some(worst.map_or(c, |w: f64| w.max(c)));
            }
            worst
        }
        _ => None,
    };
    Ok(BlowUpReport {
        lambdas: lambdas.to_vec(),
        pairs: pairs.to_vec(),
        base_c: base.iter().map(|c| c.c).collect(),
        max_deviation,
        link_c,
    })
}
