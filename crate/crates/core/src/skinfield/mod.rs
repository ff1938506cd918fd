//! Metric skin transforms ⟨A⟩_α, the regularity scale, axiom checks and derived fields.
//!
//! On the vertex set with graph metric d the transform is
//! ⟨A⟩_α(x) = max_y min(|A|(y), α/d(x,y)), equivalently
//! δ(x) = 1/⟨A⟩_α(x) = min_y max(1/|A|(y), d(x,y)/α).

mod smooth;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::MinKey;
use crate::surface::{regenerate_scaled_cone, scale_surface, DiscreteHypersurface, ScalarField, SurfaceKind};

pub use smooth::{whitney_smooth, SmoothingReport};

pub const DEFAULT_ORACLE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Exact,
    Oracle,
    Smoothed,
    Combined(f64),
    Restricted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::Oracle => write!(f, "oracle"),
            Provenance::Smoothed => write!(f, "smoothed"),
            Provenance::Combined(c) => write!(f, "combined({c})"),
            Provenance::Restricted => write!(f, "restricted"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Provenance::Exact),
            "oracle" => Ok(Provenance::Oracle),
            "smoothed" => Ok(Provenance::Smoothed),
            "restricted" => Ok(Provenance::Restricted),
            _ => s
                .strip_prefix("combined(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|c| c.parse().ok())
                .map(Provenance::Combined)
                .ok_or_else(|| Error::Malformed(format!("unknown provenance '{s}'"))),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Provenance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-vertex ⟨A⟩ and δ = 1/⟨A⟩ (+∞ where ⟨A⟩ = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct SkinField {
    pub surface_id: String,
    pub alpha: f64,
    pub provenance: Provenance,
    pub values: Vec<f64>,
    pub delta: Vec<f64>,
    /// Largest edge ratio |δ(u) − δ(v)| / len measured on this field.
    pub lipschitz_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct SkinFile {
    surface_id: String,
    alpha: f64,
    provenance: Provenance,
    values: Vec<f64>,
    /// Stored alongside the values so reloads are bit-exact; `null` encodes +∞.
    delta: Vec<Option<f64>>,
    lipschitz_bound: f64,
}

impl SkinField {
    fn from_delta(h: &DiscreteHypersurface, alpha: f64, provenance: Provenance, delta: Vec<f64>) -> Self {
        let values = delta.iter().map(|&d| if d.is_finite() { 1.0 / d } else { 0.0 }).collect();
        Self::assemble(h, alpha, provenance, values, delta)
    }

    fn from_values(h: &DiscreteHypersurface, alpha: f64, provenance: Provenance, values: Vec<f64>) -> Self {
        let delta = values.iter().map(|&v| if v > 0.0 { 1.0 / v } else { f64::INFINITY }).collect();
        Self::assemble(h, alpha, provenance, values, delta)
    }

    fn assemble(
        h: &DiscreteHypersurface,
        alpha: f64,
        provenance: Provenance,
        values: Vec<f64>,
        delta: Vec<f64>,
    ) -> Self {
        let lipschitz_bound = edge_lipschitz(h, &delta);
        SkinField { surface_id: h.id(), alpha, provenance, values, delta, lipschitz_bound }
    }

    pub fn as_scalar(&self) -> ScalarField {
        ScalarField { name: "delta".into(), surface_id: self.surface_id.clone(), values: self.delta.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SkinFile {
            surface_id: self.surface_id.clone(),
            alpha: self.alpha,
            provenance: self.provenance,
            values: self.values.clone(),
            delta: self.delta.iter().map(|d| d.is_finite().then_some(*d)).collect(),
            lipschitz_bound: self.lipschitz_bound,
        })
        .expect("skin field serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: SkinFile = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        if f.values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Malformed("skin values must be non-negative".into()));
        }
        if f.delta.len() != f.values.len() || f.delta.iter().any(|d| d.is_some_and(|d| !(d > 0.0))) {
            return Err(Error::Malformed("delta must match values and be positive".into()));
        }
        let delta = f.delta.iter().map(|d| d.unwrap_or(f64::INFINITY)).collect();
        Ok(SkinField {
            surface_id: f.surface_id,
            alpha: f.alpha,
            provenance: f.provenance,
            values: f.values,
            delta,
            lipschitz_bound: f.lipschitz_bound,
        })
    }
}

/// max over edges of |δ(u) − δ(v)| / len; edges with both ends at +∞ are skipped.
pub fn edge_lipschitz(h: &DiscreteHypersurface, delta: &[f64]) -> f64 {
    h.edges
        .par_iter()
        .map(|&(u, v, len)| {
            let (a, b) = (delta[u], delta[v]);
            if a.is_infinite() && b.is_infinite() {
                0.0
            } else {
                (a - b).abs() / len
            }
        })
        .reduce(|| 0.0, f64::max)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("α = {alpha} must be positive and finite")))
    }
}

fn base_delta(h: &DiscreteHypersurface) -> Vec<f64> {
    h.a_norm.iter().map(|&a| if a > 0.0 { 1.0 / a } else { f64::INFINITY }).collect()
}

#[derive(Clone, Copy)]
struct Label {
    value: f64,
    tail: f64,
    source: f64,
    vertex: usize,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .value
            .total_cmp(&self.value)
            .then_with(|| other.tail.total_cmp(&self.tail))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Exact discrete ⟨A⟩_α by a label-setting sweep.
///
/// A label at x is a candidate source threshold s = 1/|A|(y) with tail d = d(y, x);
/// its value is max(s, d/α). Labels pop in increasing (value, tail, vertex) order and
/// the first pop at x fixes δ(x). A later label at x is kept only if its tail is
/// strictly shorter than every tail already popped there, since otherwise an earlier
/// label dominates all of its extensions.
pub fn metric_skin_transform(h: &DiscreteHypersurface, alpha: f64) -> Result<SkinField> {
    check_alpha(alpha)?;
    let n = h.vertex_count();
    let g = h.graph();
    let mut delta = vec![f64::INFINITY; n];
    let mut best_tail = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for (y, s) in base_delta(h).into_iter().enumerate() {
        if s.is_finite() {
            heap.push(Label { value: s, tail: 0.0, source: s, vertex: y });
        }
    }
    while let Some(l) = heap.pop() {
        let x = l.vertex;
        if l.tail >= best_tail[x] {
            continue;
        }
        if best_tail[x].is_infinite() {
            delta[x] = l.value;
        }
        best_tail[x] = l.tail;
        for (w, _, len) in g.neighbors(x) {
            let tail = l.tail + len;
            if tail < best_tail[w] {
                heap.push(Label { value: l.source.max(tail / alpha), tail, source: l.source, vertex: w });
            }
        }
    }
    Ok(SkinField::from_delta(h, alpha, Provenance::Exact, delta))
}

/// O(V²) reference: one Dijkstra per vertex with |A| > 0 and a direct max-min.
pub fn brute_force_skin_oracle(h: &DiscreteHypersurface, alpha: f64, cap: usize) -> Result<SkinField> {
    check_alpha(alpha)?;
    let n = h.vertex_count();
    if n > cap {
        return Err(Error::CapExceeded { count: n, cap });
    }
    let g = h.graph();
    let values = (0..n)
        .into_par_iter()
        .filter(|&y| h.a_norm[y] > 0.0)
        .fold(
            || vec![0.0f64; n],
            |mut acc, y| {
                let d = crate::graph::geodesic(g, &[(y, 0.0)]).dist;
                for x in 0..n {
                    let c = h.a_norm[y].min(alpha / d[x]);
                    if c > acc[x] {
                        acc[x] = c;
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0.0f64; n], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect());
    Ok(SkinField::from_values(h, alpha, Provenance::Oracle, values))
}

/// r_H(p) = sup { r : r·|A| ≤ 1 on the closed graph ball B_r(p) }, which on a finite
/// metric space equals min_y max(d(p,y), 1/|A|(y)). Each vertex runs its own
/// Dijkstra, stopped once distances exceed the best candidate.
pub fn regularity_scale(h: &DiscreteHypersurface) -> ScalarField {
    let n = h.vertex_count();
    let g = h.graph();
    let base = base_delta(h);
    let values = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            let mut dist = std::collections::HashMap::new();
            let mut heap = BinaryHeap::new();
            dist.insert(p, 0.0f64);
            heap.push(MinKey { key: 0.0, tie: 0.0, vertex: p });
            let mut done = std::collections::HashSet::new();
            while let Some(MinKey { key, vertex: y, .. }) = heap.pop() {
                if key >= best {
                    break;
                }
                if !done.insert(y) {
                    continue;
                }
                best = best.min(key.max(base[y]));
                for (w, _, len) in g.neighbors(y) {
                    let nd = key + len;
                    if nd < best && dist.get(&w).is_none_or(|&d| nd < d) {
                        dist.insert(w, nd);
                        heap.push(MinKey { key: nd, tie: 0.0, vertex: w });
                    }
                }
            }
            best
        })
        .collect();
    ScalarField { name: "regularity_scale".into(), surface_id: h.id(), values }
}

/// Tolerances used by [`verify_axioms`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxiomTolerances {
    /// Allowed excess of the measured Lipschitz constant over 1/α.
    pub lipschitz_slack: f64,
    /// Allowed relative residual for scaling checks.
    pub scaling: f64,
}

impl Default for AxiomTolerances {
    fn default() -> Self {
        AxiomTolerances { lipschitz_slack: 0.0, scaling: 1e-9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub s1_pass: bool,
    pub s2_pass: bool,
    pub s2_dominance_violations: usize,
    pub s2_scaling_residual: f64,
    pub s4_lipschitz_constant: f64,
    pub s4_pass: bool,
    pub s5_scaling_residual: f64,
    pub s5_pass: bool,
    pub notes: Vec<String>,
}

/// Largest relative deviation between `a` and `b`, treating equal infinities as exact.
pub fn relative_residual(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            if x == y {
                0.0
            } else if !x.is_finite() || !y.is_finite() {
                f64::INFINITY
            } else {
                (x - y).abs() / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}

/// Checks (S1), (S2), (S4) and a scaling proxy for (S5). (S3) is measured by
/// `spectral::hardy_constant`.
pub fn verify_axioms(h: &DiscreteHypersurface, skin: &SkinField, tol: AxiomTolerances) -> Result<AxiomReport> {
    if skin.values.len() != h.vertex_count() {
        return Err(Error::Mismatch("skin field and surface sizes differ".into()));
    }
    let mut notes = Vec::new();
    let geodesic = h.is_totally_geodesic();
    let all_zero = skin.values.iter().all(|&v| v == 0.0);
    let s1_pass = geodesic == all_zero;
    if geodesic {
        notes.push("totally geodesic surface: δ ≡ +∞".into());
    }
    notes.push("S3 (Hardy inequality) is measured by the spectral module".into());

    let dominance = skin.values.iter().zip(&h.a_norm).filter(|(v, a)| v < a).count();
    // Levels must stay off Σ: every vertex of a non-geodesic surface has finite, positive δ.
    let levels_off_sigma = geodesic || skin.delta.iter().all(|&d| d > 0.0 && d.is_finite());
    if !levels_off_sigma {
        notes.push("some vertex carries δ = 0 or +∞ on a non-geodesic surface".into());
    }
    let recompute =
        |surf: &DiscreteHypersurface| -> Result<Vec<f64>> { Ok(metric_skin_transform(surf, skin.alpha)?.values) };
    let lambda = 2.0;
    let scaled = scale_surface(h, lambda)?;
    let expected: Vec<f64> = skin.values.iter().map(|v| v / lambda).collect();
    let s2_scaling_residual = relative_residual(&recompute(&scaled)?, &expected);
    let s2_pass = dominance == 0 && levels_off_sigma && s2_scaling_residual <= tol.scaling;

    let s4 = edge_lipschitz(h, &skin.delta);
    let s4_pass = s4 <= 1.0 / skin.alpha + tol.lipschitz_slack;

    let s5_scaling_residual = match regenerate_scaled_cone(h, lambda)? {
        Some(regen) => {
            notes.push("S5 proxy: cone regenerated at radii ×2 and compared at matched vertices".into());
            relative_residual(&recompute(&regen)?, &expected)
        }
        None => {
            notes.push("S5 proxy: no self-similar generator, scaling residual reused".into());
            s2_scaling_residual
        }
    };
    Ok(AxiomReport {
        s1_pass,
        s2_pass,
        s2_dominance_violations: dominance,
        s2_scaling_residual,
        s4_lipschitz_constant: s4,
        s4_pass,
        s5_scaling_residual,
        s5_pass: s5_scaling_residual <= tol.scaling,
        notes,
    })
}

/// Pointwise c·skin1 + (1 − c)·skin2. The Lipschitz bound is measured on the result.
pub fn convex_combine(h: &DiscreteHypersurface, s1: &SkinField, s2: &SkinField, c: f64) -> Result<SkinField> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("combination weight {c} outside (0, 1]")));
    }
    let id = h.id();
    if s1.surface_id != id || s2.surface_id != id {
        return Err(Error::Mismatch("skin fields belong to different surfaces".into()));
    }
    if s1.alpha != s2.alpha {
        return Err(Error::Mismatch(format!("α differs: {} vs {}", s1.alpha, s2.alpha)));
    }
    let values = s1.values.iter().zip(&s2.values).map(|(a, b)| c * a + (1.0 - c) * b).collect();
    Ok(SkinField::from_values(h, s1.alpha, Provenance::Combined(c), values))
}

/// Restriction of a cone field to its link. The link is identified with the ring
/// closest to r = 1 in log radius; by scaling anticommutation the ring values are
/// multiplied by that ring's radius (a no-op when the ring sits at r = 1).
pub fn restrict_to_link(
    cone: &DiscreteHypersurface,
    cone_skin: &SkinField,
    link: &DiscreteHypersurface,
) -> Result<SkinField> {
    let (SurfaceKind::LawsonCone { p, q }, SurfaceKind::Link { p: lp, q: lq }) = (cone.kind, link.kind) else {
        return Err(Error::Mismatch("restriction needs a Lawson cone and a link".into()));
    };
    let (Some(cl), Some(ll)) = (&cone.layout, &link.layout) else {
        return Err(Error::Mismatch("missing ring layout".into()));
    };
    if (p, q) != (lp, lq) || cl.link_size != ll.link_size || cl.angular_res != ll.angular_res {
        return Err(Error::Mismatch("cone and link generated with different parameters".into()));
    }
    if cone_skin.surface_id != cone.id() {
        return Err(Error::Mismatch("skin field does not belong to the cone".into()));
    }
    let ring = (0..cl.rings.len())
        .min_by(|&i, &j| cl.rings[i].ln().abs().total_cmp(&cl.rings[j].ln().abs()))
        .expect("cone has rings");
    let r = cl.rings[ring];
    let start = ring * cl.link_size;
    let values = cone_skin.values[start..start + cl.link_size].iter().map(|v| v * r).collect();
    Ok(SkinField::from_values(link, cone_skin.alpha, Provenance::Restricted, values))
}

/// Partition into 𝔼(a) = {δ ≥ a} and 𝕀(a) = {δ < a}.
pub fn sublevel_sets(skin: &SkinField, a: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("threshold {a} must be positive")));
    }
    Ok((0..skin.delta.len()).partition(|&v| skin.delta[v] >= a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{generate_hyperplane, generate_lawson_cone, DiscreteHypersurface, SurfaceKind};

    fn spike_patch() -> DiscreteHypersurface {
        let flat = generate_hyperplane(1.0, 9).unwrap();
        let mut a = vec![0.1; flat.vertex_count()];
        a[40] = 50.0;
        DiscreteHypersurface::new(
            SurfaceKind::Loaded,
            2,
            flat.vertices.clone(),
            flat.edges.clone(),
            a,
            vec![],
            flat.outer_boundary.clone(),
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn hyperplane_is_zero_with_infinite_delta() {
        let h = generate_hyperplane(1.0, 6).unwrap();
        let s = metric_skin_transform(&h, 1.0).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(s.delta.iter().all(|d| d.is_infinite()));
        assert_eq!(s.lipschitz_bound, 0.0);
    }

    #[test]
    fn spike_gives_two_candidate_max_min() {
        let h = spike_patch();
        let alpha = 0.5;
        let s = metric_skin_transform(&h, alpha).unwrap();
        let d = crate::graph::geodesic(h.graph(), &[(40, 0.0)]).dist;
        for x in 0..h.vertex_count() {
            let want = 50f64.min(alpha / d[x]).max(0.1);
            assert!((s.values[x] - want).abs() <= 1e-12 * want, "x={x}");
        }
    }

    #[test]
    fn fast_sweep_matches_oracle_on_small_cone() {
        let h = generate_lawson_cone(1, 2, 0.1, 2.0, 6, 8).unwrap();
        for alpha in [0.05, 1.0, 7.0] {
            let fast = metric_skin_transform(&h, alpha).unwrap();
            let slow = brute_force_skin_oracle(&h, alpha, DEFAULT_ORACLE_CAP).unwrap();
            assert!(relative_residual(&fast.values, &slow.values) <= 1e-12);
        }
    }

    #[test]
    fn regularity_scale_equals_alpha_one_delta() {
        let h = spike_patch();
        let r = regularity_scale(&h);
        let s = metric_skin_transform(&h, 1.0).unwrap();
        assert_eq!(r.values, s.delta);
    }

    #[test]
    fn constant_curvature_regularity_scale() {
        let flat = generate_hyperplane(1.0, 5).unwrap();
        let h = DiscreteHypersurface::new(
            SurfaceKind::Loaded,
            2,
            flat.vertices.clone(),
            flat.edges.clone(),
            vec![4.0; 25],
            vec![],
            vec![],
            1.0,
            None,
        )
        .unwrap();
        assert!(regularity_scale(&h).values.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn oracle_cap_enforced() {
        let h = generate_hyperplane(1.0, 10).unwrap();
        assert!(matches!(brute_force_skin_oracle(&h, 1.0, 50), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn injected_dominance_fault_detected() {
        let h = spike_patch();
        let mut s = metric_skin_transform(&h, 1.0).unwrap();
        assert!(verify_axioms(&h, &s, AxiomTolerances::default()).unwrap().s2_pass);
        s.values[40] = 1.0;
        assert!(!verify_axioms(&h, &s, AxiomTolerances::default()).unwrap().s2_pass);
    }

    #[test]
    fn provenance_and_json_round_trip() {
        let h = spike_patch();
        let s = metric_skin_transform(&h, 2.0).unwrap();
        let back = SkinField::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!("combined(0.25)".parse::<Provenance>().unwrap(), Provenance::Combined(0.25));
    }

    #[test]
    fn sublevel_partition_extremes() {
        let h = spike_patch();
        let s = metric_skin_transform(&h, 1.0).unwrap();
        let (e, i) = sublevel_sets(&s, 1e9).unwrap();
        assert!(e.is_empty() && i.len() == h.vertex_count());
        let (e, i) = sublevel_sets(&s, 1e-9).unwrap();
        assert!(i.is_empty() && e.len() == h.vertex_count());
    }
}
