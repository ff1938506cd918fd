//! Quantitative transversality of doubled cover balls and geodesic tube openings.
//!
//! For centers p, q with Θs = Θ(p) + Θ(q) the doubled balls meet iff d(p,q) ≤ 2Θs.
//! The pair is τ-transversal when |d(p,q) − 2Θs| > τ·Θs: doubled balls that meet still
//! meet after shrinking by (2−τ), and disjoint ones stay disjoint after growing to (2+τ).
//! With equal radii these are the shells 2(2−τ)Θ ≤ d ≤ 4Θ and 4Θ < d ≤ 2(2+τ)Θ.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ball, bounded, check_cover, compute_stats, BallCover};
use crate::error::{Error, Result};
use crate::graph::NONE;
use crate::skinfield::SkinField;
use crate::surface::DiscreteHypersurface;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QtConfig {
    pub tau_target: f64,
    /// Search radius for replacement centers, as a multiple of Θ(p).
    pub epsilon: f64,
    /// Maximum number of replacement candidates examined per center.
    pub sample_budget: usize,
    /// Allowed growth of the ρ = 1 covering maximum.
    pub covering_slack: usize,
    pub family_bound: usize,
}

impl Default for QtConfig {
    fn default() -> Self {
        QtConfig { tau_target: 0.05, epsilon: 1.0, sample_budget: 256, covering_slack: 2, family_bound: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QtReport {
    pub tau: f64,
    pub pass: bool,
    pub pairs_checked: usize,
    pub violations: usize,
    /// Center ids of the tightest pair.
    pub worst_pair: Option<(usize, usize)>,
    /// min over examined pairs of |d − 2Θs|/Θs − τ; positive means all pass.
    pub min_slack: Option<f64>,
    pub moved: usize,
    /// Centers added to re-cover vertices uncovered by the moves.
    pub added: usize,
    /// Largest move as a multiple of the original Θ.
    pub max_move_ratio: f64,
}

fn slack(d: f64, tp: f64, tq: f64, tau: f64) -> f64 {
    let s = tp + tq;
    (d - 2.0 * s).abs() / s - tau
}

/// Pairs (i, j, d) of centers that can interact at transversality τ, each found from its
/// center with the larger (Θ, id).
fn interacting_pairs(h: &DiscreteHypersurface, cover: &BallCover, tau: f64) -> Vec<(usize, usize, f64)> {
    let mut center_id = vec![NONE; h.vertex_count()];
    for (i, &c) in cover.centers.iter().enumerate() {
        center_id[c] = i;
    }
    let mut pairs: Vec<(usize, usize, f64)> = (0..cover.centers.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let t = cover.theta[i];
            let reach = (2.0 + tau) * 2.0 * t;
            ball(h, cover.centers[i], reach)
                .into_iter()
                .filter_map(|(v, d)| {
                    let j = center_id[v];
                    if j == NONE || j == i || (cover.theta[j], j) > (t, i) {
                        return None;
                    }
                    (d <= (2.0 + tau) * (t + cover.theta[j])).then_some((i.min(j), i.max(j), d))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    pairs
}

/// Exhaustive pair scan at transversality τ.
pub fn verify_qt(h: &DiscreteHypersurface, cover: &BallCover, tau: f64) -> QtReport {
    let pairs = interacting_pairs(h, cover, tau);
    let mut worst: Option<((usize, usize), f64)> = None;
    let mut violations = 0;
    for &(i, j, d) in &pairs {
        let s = slack(d, cover.theta[i], cover.theta[j], tau);
        if s <= 0.0 {
            violations += 1;
        }
        if worst.is_none_or(|(_, w)| s < w) {
            worst = Some(((i, j), s));
        }
    }
    QtReport {
        tau,
        pass: violations == 0,
        pairs_checked: pairs.len(),
        violations,
        worst_pair: worst.map(|w| w.0),
        min_slack: worst.map(|w| w.1),
        moved: 0,
        added: 0,
        max_move_ratio: 0.0,
    }
}

/// Registry of current center positions: for each vertex, centers within 20Θ of it.
struct Registry {
    near: Vec<HashMap<usize, f64>>,
}

impl Registry {
    fn new(h: &DiscreteHypersurface, cover: &BallCover) -> Self {
        let mut near = vec![HashMap::new(); h.vertex_count()];
        for (i, (&c, &t)) in cover.centers.iter().zip(&cover.theta).enumerate() {
            for (v, d) in ball(h, c, 20.0 * t) {
                near[v].insert(i, d);
            }
        }
        Registry { near }
    }

    fn remove(&mut self, h: &DiscreteHypersurface, i: usize, c: usize, t: f64) {
        for (v, _) in ball(h, c, 20.0 * t) {
            self.near[v].remove(&i);
        }
    }

    fn insert(&mut self, h: &DiscreteHypersurface, i: usize, c: usize, t: f64) {
        for (v, d) in ball(h, c, 20.0 * t) {
            self.near[v].insert(i, d);
        }
    }
}

/// Distances from a candidate position to every center it can interact with.
fn neighbours_of(
    h: &DiscreteHypersurface,
    reg: &Registry,
    center_at: &HashMap<usize, usize>,
    v: usize,
    tv: f64,
    skip: usize,
) -> Vec<(usize, f64)> {
    let mut out: HashMap<usize, f64> = reg.near[v].iter().map(|(&j, &d)| (j, d)).collect();
    for (w, d) in ball(h, v, 20.0 * tv) {
        if let Some(&j) = center_at.get(&w) {
            out.entry(j).or_insert(d);
        }
    }
    out.remove(&skip);
    let mut out: Vec<(usize, f64)> = out.into_iter().collect();
    out.sort_by_key(|e| e.0);
    out
}

/// Family-by-family transversality pass.
///
/// Each center is tested against the centers already fixed. A violating center is
/// replaced by the first vertex within ε·Θ in (distance, index) order that clears all
/// shells against fixed centers and keeps family disjointness and center exclusion.
/// Vertices left uncovered by the moves are then re-covered in order of decreasing δ:
/// each gets a new center, the first vertex in (distance, index) order whose Θ-ball
/// contains it and which passes the same tests against every center. The result is
/// re-verified exhaustively.
pub fn qt_perturb(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    cover: &BallCover,
    config: QtConfig,
) -> Result<(BallCover, QtReport)> {
    let tau = config.tau_target;
    if !(tau > 0.0 && tau < 2.0) {
        return Err(Error::InvalidParameter(format!("τ target {tau} outside (0, 2)")));
    }
    if !check_cover(h, skin, cover).ok() {
        return Err(Error::InvalidParameter("input cover violates the cover invariants".into()));
    }
    let mut out = cover.clone();
    let mut state = State {
        reg: Registry::new(h, &out),
        center_at: out.centers.iter().enumerate().map(|(i, &c)| (c, i)).collect(),
        fixed: vec![false; out.centers.len()],
    };
    let mut order: Vec<usize> = (0..out.centers.len()).collect();
    order.sort_by_key(|&i| (out.family[i], i));
    let mut moved = 0;
    let mut max_move_ratio = 0.0f64;

    for &i in &order {
        let c = out.centers[i];
        let t0 = out.theta[i];
        if let Conflict::Blocked(j) = state.test(h, skin, &out, tau, Some(i), c, out.family[i]) {
            let mut candidates = ball(h, c, config.epsilon * t0);
            candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let choice = candidates
                .into_iter()
                .filter(|&(v, _)| !state.center_at.contains_key(&v))
                .take(config.sample_budget)
                .find(|&(v, _)| state.test(h, skin, &out, tau, Some(i), v, out.family[i]) == Conflict::Clear);
            let Some((v, d)) = choice else {
                return Err(Error::NoAdmissibleMove { center: c, other: out.centers[j] });
            };
            state.relocate(h, skin, &mut out, i, v);
            moved += 1;
            max_move_ratio = max_move_ratio.max(d / t0);
        }
        state.fixed[i] = true;
    }

    let n = h.vertex_count();
    let mut covered = vec![false; n];
    for (&c, &t) in out.centers.iter().zip(&out.theta) {
        for (v, _) in ball(h, c, t) {
            covered[v] = true;
        }
    }
    let mut orphans: Vec<usize> = (0..n).filter(|&v| !covered[v] && !h.is_outer(v)).collect();
    orphans.sort_by(|&a, &b| skin.delta[b].total_cmp(&skin.delta[a]).then(a.cmp(&b)));
    let added_before = out.centers.len();
    for a in orphans {
        if covered[a] {
            continue;
        }
        let ta = out.xi * skin.delta[a];
        let reach = ta / (1.0 - out.xi * skin.lipschitz_bound).max(0.5);
        let mut candidates = ball(h, a, reach);
        candidates.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        let mut last_conflict = None;
        let mut placed = None;
        for (v, _) in candidates
            .into_iter()
            .filter(|&(v, d)| d <= out.xi * skin.delta[v] && !state.center_at.contains_key(&v))
            .take(config.sample_budget)
        {
            match state.first_family(h, skin, &out, tau, v) {
                Ok(f) => {
                    placed = Some((v, f));
                    break;
                }
                Err(j) => last_conflict = Some(j),
            }
        }
        let Some((v, f)) = placed else {
            let other = last_conflict.map_or(a, |j| out.centers[j]);
            return Err(Error::NoAdmissibleMove { center: a, other });
        };
        let i = out.centers.len();
        out.centers.push(v);
        out.theta.push(out.xi * skin.delta[v]);
        out.family.push(f);
        state.fixed.push(true);
        state.reg.insert(h, i, v, out.theta[i]);
        state.center_at.insert(v, i);
        for (w, _) in ball(h, v, out.theta[i]) {
            covered[w] = true;
        }
    }
    let added = out.centers.len() - added_before;

    let check = check_cover(h, skin, &out);
    if !check.ok() {
        return Err(Error::InclusionFailed(format!("cover invariants broken after perturbation: {check:?}")));
    }
    out.stats = compute_stats(h, &out, config.family_bound);
    if out.stats.covering_max_rho1 > cover.stats.covering_max_rho1 + config.covering_slack {
        return Err(Error::InclusionFailed(format!(
            "covering maximum grew from {} to {}",
            cover.stats.covering_max_rho1, out.stats.covering_max_rho1
        )));
    }
    let mut report = verify_qt(h, &out, tau);
    if !report.pass {
        let (a, b) = report.worst_pair.expect("a failing scan has a worst pair");
        return Err(Error::NoAdmissibleMove { center: out.centers[a], other: out.centers[b] });
    }
    report.moved = moved;
    report.added = added;
    report.max_move_ratio = max_move_ratio;
    out.qt_margin = Some(tau);
    Ok((out, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Conflict {
    Clear,
    Blocked(usize),
}

struct State {
    reg: Registry,
    center_at: HashMap<usize, usize>,
    fixed: Vec<bool>,
}

impl State {
    /// Shell test against fixed centers plus exclusion and same-family separation against
    /// all centers, for center `me` (or a new center) placed at `v` in family `fam`.
    #[allow(clippy::too_many_arguments)]
    fn test(
        &self,
        h: &DiscreteHypersurface,
        skin: &SkinField,
        out: &BallCover,
        tau: f64,
        me: Option<usize>,
        v: usize,
        fam: usize,
    ) -> Conflict {
        let tv = out.xi * skin.delta[v];
        for (j, d) in neighbours_of(h, &self.reg, &self.center_at, v, tv, me.unwrap_or(NONE)) {
            let tj = out.theta[j];
            let shell = self.fixed[j] && slack(d, tv, tj, tau) <= 0.0;
            let inclusion = d <= tv || d <= tj;
            let family = out.family[j] == fam && d <= 10.0 * tv + 10.0 * tj;
            if shell || inclusion || family {
                return Conflict::Blocked(j);
            }
        }
        Conflict::Clear
    }

    /// Smallest admissible family for a new center at `v`, or the first blocking center.
    fn first_family(
        &self,
        h: &DiscreteHypersurface,
        skin: &SkinField,
        out: &BallCover,
        tau: f64,
        v: usize,
    ) -> std::result::Result<usize, usize> {
        let tv = out.xi * skin.delta[v];
        let mut forbidden = Vec::new();
        for (j, d) in neighbours_of(h, &self.reg, &self.center_at, v, tv, NONE) {
            let tj = out.theta[j];
            if slack(d, tv, tj, tau) <= 0.0 || d <= tv || d <= tj {
                return Err(j);
            }
            if d <= 10.0 * tv + 10.0 * tj {
                forbidden.push(out.family[j]);
            }
        }
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
        Ok(f)
    }

    fn relocate(&mut self, h: &DiscreteHypersurface, skin: &SkinField, out: &mut BallCover, i: usize, v: usize) {
        let (c, t0) = (out.centers[i], out.theta[i]);
        self.reg.remove(h, i, c, t0);
        self.center_at.remove(&c);
        out.centers[i] = v;
        out.theta[i] = out.xi * skin.delta[v];
        self.reg.insert(h, i, v, out.theta[i]);
        self.center_at.insert(v, i);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    /// Pairs with meeting doubled balls.
    pub pairs: usize,
    /// Smallest opening ω over those pairs; `None` when no doubled balls meet.
    pub min_omega: Option<f64>,
    pub worst_pair: Option<(usize, usize)>,
}

/// Largest ω with the open ω·min(Θp, Θq) tube around a shortest p–q path inside
/// B_{2Θ(p)}(p) ∪ B_{2Θ(q)}(q), minimized over pairs whose doubled balls meet.
pub fn tube_opening_check(h: &DiscreteHypersurface, cover: &BallCover) -> TubeReport {
    let pairs: Vec<(usize, usize, f64)> = interacting_pairs(h, cover, 0.0)
        .into_iter()
        .filter(|&(i, j, d)| d < 2.0 * (cover.theta[i] + cover.theta[j]))
        .collect();
    let results: Vec<((usize, usize), f64)> =
        pairs.par_iter().map(|&(i, j, d)| ((i, j), pair_opening(h, cover, i, j, d))).collect();
    let worst = results.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    TubeReport { pairs: pairs.len(), min_omega: worst.map(|w| w.1), worst_pair: worst.map(|w| w.0) }
}

pub(crate) fn pair_opening(h: &DiscreteHypersurface, cover: &BallCover, i: usize, j: usize, d: f64) -> f64 {
    let (p, q) = (cover.centers[i], cover.centers[j]);
    let (tp, tq) = (cover.theta[i], cover.theta[j]);
    let tmin = tp.min(tq);
    let from_p: HashMap<usize, f64> = ball(h, p, 2.0 * tp + 2.0 * tq + d).into_iter().collect();
    let from_q: HashMap<usize, f64> = ball(h, q, 2.0 * tp + 2.0 * tq + d).into_iter().collect();
    let inside =
        |v: usize| from_p.get(&v).is_some_and(|&x| x < 2.0 * tp) || from_q.get(&v).is_some_and(|&x| x < 2.0 * tq);
    // Shortest path from p to q, recovered by walking down the distance field from q.
    let mut path = vec![q];
    let mut cur = q;
    while cur != p {
        let dc = from_p[&cur];
        let next = h
            .graph()
            .neighbors(cur)
            .filter(|&(w, _, len)| from_p.get(&w).is_some_and(|&dw| dw + len == dc))
            .map(|(w, _, _)| w)
            .min();
        match next {
            Some(w) => {
                path.push(w);
                cur = w;
            }
            None => break,
        }
    }
    if path.iter().any(|&v| !inside(v)) {
        return 0.0;
    }
    let reach = 4.0 * tp.max(tq);
    let src: Vec<(usize, f64)> = path.iter().map(|&v| (v, 0.0)).collect();
    let mut near = bounded(h, &src, reach);
    near.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    match near.into_iter().find(|&(v, _)| !inside(v)) {
        Some((_, dist)) => dist / tmin,
        None => reach / tmin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{check_cover, cover_from_centers};
    use crate::skinfield::metric_skin_transform;
    use crate::surface::{generate_hyperplane, DiscreteHypersurface, SurfaceKind};

    fn constant_patch(res: usize, a: f64) -> DiscreteHypersurface {
        let flat = generate_hyperplane(1.0, res).unwrap();
        DiscreteHypersurface::new(
            SurfaceKind::Loaded,
            2,
            flat.vertices.clone(),
            flat.edges.clone(),
            vec![a; res * res],
            vec![],
            vec![],
            1.0,
            None,
        )
        .unwrap()
    }

    /// Square lattice of spacing 4 grid steps on a 41×41 patch with δ ≡ 1 and ξ = 0.16,
    /// so Θ = 3.2 steps; every center in its own family.
    fn lattice(h: &DiscreteHypersurface, skin: &SkinField, planted: Option<usize>) -> BallCover {
        let res = 41;
        let mut centers: Vec<usize> = (0..res)
            .step_by(4)
            .flat_map(|y| (0..res).step_by(4).map(move |x| y * res + x))
            .filter(|&c| Some(c) != planted.map(|_| 20 * res + 20))
            .collect();
        centers.extend(planted);
        let family = (1..=centers.len()).collect();
        cover_from_centers(h, skin, 0.16, centers, family, 256).unwrap()
    }

    #[test]
    fn qt_cover_is_left_unchanged() {
        let h = constant_patch(41, 1.0);
        let skin = metric_skin_transform(&h, 1.0).unwrap();
        let cover = lattice(&h, &skin, None);
        assert!(check_cover(&h, &skin, &cover).ok());
        let cfg = QtConfig { family_bound: 256, ..QtConfig::default() };
        let (out, report) = qt_perturb(&h, &skin, &cover, cfg).unwrap();
        assert_eq!(out.centers, cover.centers);
        assert_eq!((report.moved, report.added), (0, 0));
        assert_eq!(out.qt_margin, Some(cfg.tau_target));
    }

    #[test]
    fn planted_shell_pair_is_moved() {
        // Shifting the (20, 20) lattice center to (21, 21) puts it 6 + 5√2 ≈ 13.07 steps from
        // (32, 16) and (16, 32), inside the shell |d − 12.8| ≤ 0.32 around 4Θ.
        let res = 41;
        let h = constant_patch(res, 1.0);
        let skin = metric_skin_transform(&h, 1.0).unwrap();
        let cover = lattice(&h, &skin, Some(21 * res + 21));
        assert!(check_cover(&h, &skin, &cover).ok());
        let pre = verify_qt(&h, &cover, 0.05);
        assert!(!pre.pass);
        let cfg = QtConfig { family_bound: 256, ..QtConfig::default() };
        let (out, report) = qt_perturb(&h, &skin, &cover, cfg).unwrap();
        assert!(report.moved >= 1);
        assert!(report.max_move_ratio <= cfg.epsilon);
        assert!(verify_qt(&h, &out, 0.05).pass);
        assert!(check_cover(&h, &skin, &out).ok());
        assert_eq!(out.qt_margin, Some(0.05));
    }

    #[test]
    fn disjoint_doubled_balls_are_vacuous() {
        let h = constant_patch(21, 1.0);
        let skin = metric_skin_transform(&h, 1.0).unwrap();
        let cover = cover_from_centers(&h, &skin, 0.01, vec![0, 440], vec![1, 1], 64).unwrap();
        let tube = tube_opening_check(&h, &cover);
        assert_eq!(tube.pairs, 0);
        assert_eq!(tube.min_omega, None);
        assert!(verify_qt(&h, &cover, 0.1).pass);
    }

    #[test]
    fn flat_two_disk_opening() {
        // Θ = 0.25, centers 0.6 apart: circles of radius 0.5 meet at height sqrt(0.25 − 0.09) = 0.4.
        let res = 81;
        let h = constant_patch(res, 1.0);
        let skin = metric_skin_transform(&h, 1.0).unwrap();
        let p = 40 * res + 28;
        let q = 40 * res + 52;
        let cover = cover_from_centers(&h, &skin, 0.25, vec![p, q], vec![1, 2], 64).unwrap();
        let tube = tube_opening_check(&h, &cover);
        assert_eq!(tube.pairs, 1);
        let omega = tube.min_omega.unwrap();
        let analytic = 0.4 / 0.25;
        assert!((omega - analytic).abs() < 0.2 * analytic, "ω = {omega}, analytic {analytic}");
    }
}
