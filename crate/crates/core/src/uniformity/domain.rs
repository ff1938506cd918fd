//! Link spaces, arc hulls and bubbled arc hulls 𝕊𝔻(a), with their inclusion certificates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{constrained_path, evaluate, skin_uniform_curve, CurveMethod, UniformCurveCertificate, SEARCH_QUANTILES};
use crate::cover::{ball, bounded, skin_id, BallCover};
use crate::error::{Error, Result};
use crate::graph;
use crate::skinfield::SkinField;
use crate::surface::DiscreteHypersurface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpace {
    pub surface_id: String,
    pub a: f64,
    /// 𝔼(a) = {δ ≥ a}.
    pub members: Vec<usize>,
    /// Members joined pairwise by certified curves. Every member is joined to a hub
    /// by a shortest path inside 𝔼(a), which adds nothing to the arc hull.
    pub hubs: Vec<usize>,
    pub curves: Vec<UniformCurveCertificate>,
    pub worst_c: f64,
}

/// Farthest-point hubs over `members`, starting from the largest δ.
fn farthest_hubs(h: &DiscreteHypersurface, skin: &SkinField, members: &[usize], k: usize) -> Vec<usize> {
    let first = *members
        .iter()
        .min_by(|&&a, &&b| skin.delta[b].total_cmp(&skin.delta[a]).then(a.cmp(&b)))
        .expect("members not empty");
    let mut hubs = vec![first];
    let mut dist = graph::geodesic(h.graph(), &[(first, 0.0)]).dist;
    while hubs.len() < k {
        let next = members
            .iter()
            .copied()
            .filter(|v| !hubs.contains(v))
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        let Some(next) = next else { break };
        hubs.push(next);
        let d = graph::geodesic(h.graph(), &[(next, 0.0)]).dist;
        for (x, y) in dist.iter_mut().zip(d) {
            *x = x.min(y);
        }
    }
    hubs
}

/// Link space of 𝔼(a): all member pairs when they fit in `pair_budget`, otherwise all
/// pairs of ⌊k⌋ farthest-point hubs with k(k−1)/2 ≤ `pair_budget`, plus one hub per
/// component of 𝔼(a) that has none.
pub fn build_link_space(h: &DiscreteHypersurface, skin: &SkinField, a: f64, pair_budget: usize) -> Result<LinkSpace> {
    if skin.surface_id != h.id() {
        return Err(Error::Mismatch("skin field does not belong to this surface".into()));
    }
    let (members, _) = crate::skinfield::sublevel_sets(skin, a)?;
    if members.is_empty() {
        return Err(Error::Empty(format!("𝔼({a}) is empty")));
    }
    let m = members.len();
    let hubs = if m * (m - 1) / 2 <= pair_budget {
        members.clone()
    } else {
        let k = ((1.0 + (1.0 + 8.0 * pair_budget as f64).sqrt()) / 2.0).floor() as usize;
        let mut hubs = farthest_hubs(h, skin, &members, k.max(1));
        let mut keep = vec![false; h.vertex_count()];
        for &v in &members {
            keep[v] = true;
        }
        let (label, sizes) = h.graph().components(&keep);
        let mut has_hub = vec![false; sizes.len()];
        for &v in &hubs {
            has_hub[label[v]] = true;
        }
        for &v in &members {
            if !has_hub[label[v]] {
                has_hub[label[v]] = true;
                hubs.push(v);
            }
        }
        hubs
    };
    let pairs: Vec<(usize, usize)> = (0..hubs.len())
        .flat_map(|i| (i + 1..hubs.len()).map(move |j| (i, j)))
        .map(|(i, j)| (hubs[i], hubs[j]))
        .collect();
    let curves: Vec<UniformCurveCertificate> = pairs
        .par_iter()
        .map(|&(p, q)| skin_uniform_curve(h, skin, p, q, CurveMethod::ConstrainedSearch))
        .collect::<Result<_>>()?;
    let worst_c = curves.iter().map(|c| c.c).fold(0.0, f64::max);
    Ok(LinkSpace { surface_id: h.id(), a, members, hubs, curves, worst_c })
}

/// 𝔼(a) together with every curve trace of the link space, sorted.
pub fn arc_hull(link: &LinkSpace) -> Vec<usize> {
    let mut hull: Vec<usize> =
        link.members.iter().chain(link.curves.iter().flat_map(|c| c.path.iter())).copied().collect();
    hull.sort_unstable();
    hull.dedup();
    hull
}

/// Violation counts of the hull sandwich; all zero when it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullChecks {
    /// Arc hull vertices with δ < α'·a.
    pub arc_outside_level: usize,
    /// Non-outer vertices within ξ·α'·a/4 of the arc hull that are not members.
    pub tube_outside_hull: usize,
    /// Members with δ < α'·a/4.
    pub hull_outside_level: usize,
    pub connected: bool,
}

impl HullChecks {
    pub fn ok(&self) -> bool {
        self.arc_outside_level == 0 && self.tube_outside_hull == 0 && self.hull_outside_level == 0 && self.connected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkinDomain {
    pub surface_id: String,
    pub a: f64,
    pub xi: f64,
    /// Cover centers whose Θ-ball meets the arc hull.
    pub centers: Vec<usize>,
    /// Union of the doubled balls of those centers, sorted.
    pub members: Vec<usize>,
    pub link_curves: usize,
    pub worst_c: f64,
    /// α' = 1/(L·c + 1) with L the skin Lipschitz bound and c the worst curve constant.
    pub alpha_prime: f64,
    pub arc_hull: Vec<usize>,
    pub checks: HullChecks,
    pub iota: Option<f64>,
    pub kappa: Option<f64>,
}

impl SkinDomain {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

fn mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in set {
        m[v] = true;
    }
    m
}

fn hull_checks(h: &DiscreteHypersurface, skin: &SkinField, d: &SkinDomain) -> HullChecks {
    let n = h.vertex_count();
    let is_member = mask(n, &d.members);
    let level = d.alpha_prime * d.a;
    let arc_outside_level = d.arc_hull.iter().filter(|&&v| skin.delta[v] < level).count();
    let hull_outside_level = d.members.iter().filter(|&&v| skin.delta[v] < level / 4.0).count();
    let r = d.xi * level / 4.0;
    let src: Vec<(usize, f64)> = d.arc_hull.iter().map(|&v| (v, 0.0)).collect();
    let tube_outside_hull =
        bounded(h, &src, r).into_iter().filter(|&(v, dist)| dist < r && !is_member[v] && !h.is_outer(v)).count();
    let (_, sizes) = h.graph().components(&is_member);
    HullChecks { arc_outside_level, tube_outside_hull, hull_outside_level, connected: sizes.len() == 1 }
}

/// Bubbled arc hull: doubled balls of the cover centers whose Θ-ball meets the arc hull.
pub fn bubbled_hull(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    cover: &BallCover,
    link: &LinkSpace,
) -> Result<SkinDomain> {
    let id = h.id();
    if cover.surface_id != id || link.surface_id != id || skin.surface_id != id || cover.skin_id != skin_id(skin) {
        return Err(Error::Mismatch("cover, link space and skin field must share one surface".into()));
    }
    let n = h.vertex_count();
    let arc = arc_hull(link);
    let in_arc = mask(n, &arc);
    let selected: Vec<usize> = (0..cover.centers.len())
        .into_par_iter()
        .filter(|&i| ball(h, cover.centers[i], cover.theta[i]).iter().any(|&(v, _)| in_arc[v]))
        .collect();
    let mut is_member = vec![false; n];
    for &i in &selected {
        for (v, _) in ball(h, cover.centers[i], 2.0 * cover.theta[i]) {
            is_member[v] = true;
        }
    }
    let members: Vec<usize> = (0..n).filter(|&v| is_member[v]).collect();
    let alpha_prime = 1.0 / (skin.lipschitz_bound * link.worst_c + 1.0);
    let mut domain = SkinDomain {
        surface_id: id,
        a: link.a,
        xi: cover.xi,
        centers: selected.iter().map(|&i| cover.centers[i]).collect(),
        members,
        link_curves: link.curves.len(),
        worst_c: link.worst_c,
        alpha_prime,
        arc_hull: arc,
        checks: HullChecks { arc_outside_level: 0, tube_outside_hull: 0, hull_outside_level: 0, connected: true },
        iota: None,
        kappa: None,
    };
    domain.checks = hull_checks(h, skin, &domain);
    Ok(domain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    /// Infimum of ι with 𝔼(ι·a) ⊂ 𝕊𝔻(a) over non-outer vertices.
    pub iota: f64,
    /// max over sampled pairs of the smallest max_z l_min(z) / min(L·dist(z, ∂𝕊𝔻), δ(z))
    /// found by a clearance-threshold sweep inside the domain.
    pub kappa: f64,
    pub max_c_quasi: f64,
    pub pairs: usize,
    pub checks: HullChecks,
    pub pass: bool,
}

/// Exhaustive inclusion scan plus κ from curves found inside the member subgraph, chosen
/// to keep clear of the domain boundary.
pub fn verify_domain(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    domain: &mut SkinDomain,
    pair_budget: usize,
) -> Result<DomainReport> {
    if domain.surface_id != h.id() || skin.surface_id != h.id() {
        return Err(Error::Mismatch("domain and skin field must belong to this surface".into()));
    }
    let n = h.vertex_count();
    let checks = hull_checks(h, skin, domain);
    if !checks.connected {
        return Err(Error::Disconnected("member subgraph of the domain is disconnected".into()));
    }
    if !checks.ok() {
        return Err(Error::InclusionFailed(format!("hull sandwich violated: {checks:?}")));
    }
    let is_member = mask(n, &domain.members);
    let outside_max = (0..n).filter(|&v| !is_member[v] && !h.is_outer(v)).map(|v| skin.delta[v]).fold(0.0, f64::max);
    let iota = outside_max / domain.a;
    if iota >= 1.0 {
        return Err(Error::InclusionFailed(format!("𝔼(a) ⊄ 𝕊𝔻(a): a non-member has δ = {outside_max}")));
    }

    let boundary: Vec<(usize, f64)> = (0..n).filter(|&v| !is_member[v]).map(|v| (v, 0.0)).collect();
    let to_boundary =
        if boundary.is_empty() { vec![f64::INFINITY; n] } else { graph::geodesic(h.graph(), &boundary).dist };
    let l = skin.lipschitz_bound;
    let clearance: Vec<f64> =
        (0..n).map(|z| if l > 0.0 { (l * to_boundary[z]).min(skin.delta[z]) } else { skin.delta[z] }).collect();
    let interior: Vec<usize> = domain.members.iter().copied().filter(|&v| !h.is_proxy(v)).collect();
    let m = interior.len();
    let pairs: Vec<(usize, usize)> = if m < 2 {
        Vec::new()
    } else {
        (0..pair_budget)
            .map(|i| (interior[(i * 7919) % m], interior[(i * 104_729 + m / 2) % m]))
            .filter(|(p, q)| p != q)
            .collect()
    };
    let thresholds = clearance_thresholds(&interior, &clearance);
    let results: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(p, q)| boundary_cone_curve(h, skin, p, q, &is_member, &clearance, &thresholds))
        .collect::<Result<_>>()?;
    let kappa = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_c_quasi = results.iter().map(|r| r.1).fold(0.0, f64::max);
    domain.iota = Some(iota);
    domain.kappa = Some(kappa);
    Ok(DomainReport { iota, kappa, max_c_quasi, pairs: pairs.len(), checks, pass: true })
}

/// 0 and the quantiles of the clearance over the interior members.
fn clearance_thresholds(interior: &[usize], clearance: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = interior.iter().map(|&v| clearance[v]).filter(|c| c.is_finite()).collect();
    g.sort_by(f64::total_cmp);
    let mut s = vec![0.0];
    if !g.is_empty() {
        let m = g.len() - 1;
        s.extend((1..SEARCH_QUANTILES).map(|i| g[i * m / SEARCH_QUANTILES]));
    }
    s.dedup();
    s
}

/// Curve from p to q inside the members minimizing max_z l_min(z)/clearance(z), swept
/// over clearance thresholds. Returns (that ratio, c_quasi of the curve).
fn boundary_cone_curve(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    p: usize,
    q: usize,
    is_member: &[bool],
    clearance: &[f64],
    thresholds: &[f64],
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for &s in thresholds {
        let ok = |v: usize| is_member[v] && !h.is_proxy(v) && clearance[v] >= s;
        let Some((path, _)) = constrained_path(h, p, q, ok) else { continue };
        let (c_quasi, _, _, l_min, _) = evaluate(h, skin, &path)?;
        let k = (1..path.len() - 1).map(|i| l_min[i] / clearance[path[i]]).fold(0.0, f64::max);
        if best.is_none_or(|(b, _)| k < b) {
            best = Some((k, c_quasi));
        }
    }
    best.ok_or_else(|| Error::Disconnected(format!("no curve between {p} and {q} inside the domain")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{build_skin_cover, CoverConfig};
    use crate::skinfield::metric_skin_transform;
    use crate::surface::generate_lawson_cone;

    fn setup() -> (DiscreteHypersurface, SkinField, BallCover) {
        let h = generate_lawson_cone(1, 2, 0.05, 2.0, 8, 60).unwrap();
        let s = metric_skin_transform(&h, 1.0).unwrap();
        let c = build_skin_cover(&h, &s, 0.2, CoverConfig::default()).unwrap();
        (h, s, c)
    }

    #[test]
    fn tiny_level_sets() {
        let (h, s, _) = setup();
        let top = s.delta.iter().copied().fold(0.0, f64::max);
        let one = build_link_space(&h, &s, top, 10).unwrap();
        assert_eq!(one.members.len(), s.delta.iter().filter(|&&d| d == top).count());
        assert!(build_link_space(&h, &s, 2.0 * top, 10).is_err());
        assert_eq!(arc_hull(&one).len() >= one.members.len(), true);
    }

    #[test]
    fn hull_sandwich_on_cone() {
        let (h, s, c) = setup();
        let top = s.delta.iter().copied().fold(0.0, f64::max);
        let link = build_link_space(&h, &s, 0.3 * top, 15).unwrap();
        let hull = arc_hull(&link);
        assert!(link.members.iter().all(|v| hull.binary_search(v).is_ok()));
        let mut d = bubbled_hull(&h, &s, &c, &link).unwrap();
        assert!(d.checks.ok(), "{:?}", d.checks);
        let r = verify_domain(&h, &s, &mut d, 10).unwrap();
        assert!(r.pass && r.iota < 1.0 && r.kappa.is_finite());
        assert_eq!(SkinDomain::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn planted_hole_disconnects() {
        let (h, s, c) = setup();
        let top = s.delta.iter().copied().fold(0.0, f64::max);
        let link = build_link_space(&h, &s, 0.3 * top, 15).unwrap();
        let mut d = bubbled_hull(&h, &s, &c, &link).unwrap();
        // Remove a whole ring from the member set.
        let ls = h.layout.as_ref().unwrap().link_size;
        let ring = d.members[d.members.len() / 2] / ls;
        d.members.retain(|&v| v / ls != ring);
        assert!(matches!(verify_domain(&h, &s, &mut d, 4), Err(Error::Disconnected(_))));
    }
}
