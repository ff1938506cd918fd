//! Discrete Hardy quadratic forms and their smallest generalized eigenvalues, plus the
//! skin and quasi-hyperbolic metrics in [`metric`].

pub mod metric;

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NONE;
use crate::skinfield::SkinField;
use crate::surface::{dist_to_sigma, DiscreteHypersurface};

pub use metric::{
    four_point_delta, metric_matrix, quasi_hyperbolic_distances, sample_vertices, skin_metric_distances,
    HyperbolicityReport, MetricKind, SampledMetric,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterCondition {
    Dirichlet,
    Neumann,
}

impl FromStr for OuterCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(OuterCondition::Dirichlet),
            "neumann" => Ok(OuterCondition::Neumann),
            _ => Err(Error::InvalidParameter(format!("unknown outer condition '{s}'"))),
        }
    }
}

/// How a vertex takes part in the forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Free,
    /// Pinned to zero; its edges still act on free neighbours.
    Dirichlet,
    /// Outside the domain; its edges are dropped (natural boundary).
    Excluded,
}

/// N(f) = Σ_e w_e (f(u) − f(v))² + Σ_v m_v |A|²(v) f(v)² and D(f) = Σ_v m_v W(v) f(v)²,
/// with W = ⟨A⟩² for the Hardy form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForms {
    pub surface_id: String,
    pub masses: Vec<f64>,
    /// (u, v, w_e) in mesh edge order.
    pub conductances: Vec<(usize, usize, f64)>,
    /// |A|² per vertex.
    pub potential: Vec<f64>,
    /// Denominator weight W per vertex.
    pub weight: Vec<f64>,
    pub role: Vec<Role>,
    pub band: f64,
    /// Ring count of cone meshes.
    pub refinement: Option<usize>,
}

impl QuadraticForms {
    fn at(&self, f: &[f64], v: usize) -> f64 {
        if self.role[v] == Role::Free {
            f[v]
        } else {
            0.0
        }
    }

    /// N(f), reading Dirichlet and excluded entries as zero.
    pub fn numerator(&self, f: &[f64]) -> f64 {
        let grad: f64 = self
            .conductances
            .iter()
            .filter(|&&(u, v, _)| self.role[u] != Role::Excluded && self.role[v] != Role::Excluded)
            .map(|&(u, v, w)| {
                let d = self.at(f, u) - self.at(f, v);
                w * d * d
            })
            .sum();
        let pot: f64 = (0..self.masses.len())
            .map(|v| {
                let x = self.at(f, v);
                self.masses[v] * self.potential[v] * x * x
            })
            .sum();
        grad + pot
    }

    pub fn denominator(&self, f: &[f64]) -> f64 {
        (0..self.masses.len())
            .map(|v| {
                let x = self.at(f, v);
                self.masses[v] * self.weight[v] * x * x
            })
            .sum()
    }

    pub fn rayleigh(&self, f: &[f64]) -> f64 {
        self.numerator(f) / self.denominator(f)
    }

    pub fn free_count(&self) -> usize {
        self.role.iter().filter(|&&r| r == Role::Free).count()
    }

    /// The same forms on the vertices with `keep[v]`, every other vertex excluded.
    pub fn restricted(&self, keep: &[bool]) -> QuadraticForms {
        let mut out = self.clone();
        for (r, &k) in out.role.iter_mut().zip(keep) {
            *r = if k { Role::Free } else { Role::Excluded };
        }
        out
    }
}

/// Lumped vertex masses m_v = l̄_v^n (l̄_v the mean incident edge length) and edge
/// conductances w_e = n·(m_u/deg_u + m_v/deg_v)/len². On an axis grid with uniform
/// spacing (deg = 2n) these reproduce ∫|∇f|² exactly for linear f.
pub fn lumped_masses(h: &DiscreteHypersurface) -> (Vec<f64>, Vec<(usize, usize, f64)>) {
    let g = h.graph();
    let n = h.dim as i32;
    let masses: Vec<f64> = (0..h.vertex_count())
        .into_par_iter()
        .map(|v| {
            let deg = g.degree(v);
            if deg == 0 {
                return 0.0;
            }
            let mean = g.neighbors(v).map(|(_, _, l)| l).sum::<f64>() / deg as f64;
            mean.powi(n)
        })
        .collect();
    let share = |v: usize| masses[v] / g.degree(v) as f64;
    let cond = h.edges.iter().map(|&(u, v, len)| (u, v, h.dim as f64 * (share(u) + share(v)) / (len * len))).collect();
    (masses, cond)
}

/// Hardy forms of `skin`: D weight ⟨A⟩². Dirichlet set: proxy vertices, vertices with
/// dist(·, Σ) ≤ `band`, and the outer boundary when `outer` is Dirichlet.
pub fn assemble_forms(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    band: f64,
    outer: OuterCondition,
) -> Result<QuadraticForms> {
    if skin.surface_id != h.id() {
        return Err(Error::Mismatch("skin field does not belong to the surface".into()));
    }
    let weight = skin.values.iter().map(|a| a * a).collect();
    assemble_weighted(h, weight, band, outer)
}

/// Forms with an arbitrary non-negative denominator weight W per vertex.
pub fn assemble_weighted(
    h: &DiscreteHypersurface,
    weight: Vec<f64>,
    band: f64,
    outer: OuterCondition,
) -> Result<QuadraticForms> {
    if !(band >= 0.0) {
        return Err(Error::InvalidParameter(format!("band {band} must be ≥ 0")));
    }
    let n = h.vertex_count();
    if weight.len() != n {
        return Err(Error::Mismatch(format!("{} weights for {n} vertices", weight.len())));
    }
    if let Some(w) = weight.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("denominator weight {w} must be finite and ≥ 0")));
    }
    let dist = dist_to_sigma(h).values;
    let role: Vec<Role> = (0..n)
        .map(|v| {
            let pinned = h.is_proxy(v) || dist[v] <= band || (outer == OuterCondition::Dirichlet && h.is_outer(v));
            if pinned {
                Role::Dirichlet
            } else {
                Role::Free
            }
        })
        .collect();
    if !role.contains(&Role::Free) {
        return Err(Error::Empty(format!("band {band} leaves no free vertices")));
    }
    if let Some(v) = (0..n).find(|&v| role[v] == Role::Free && h.graph().degree(v) == 0) {
        return Err(Error::Malformed(format!("free vertex {v} has no edges")));
    }
    let (masses, conductances) = lumped_masses(h);
    Ok(QuadraticForms {
        surface_id: h.id(),
        masses,
        conductances,
        potential: h.a_norm.iter().map(|a| a * a).collect(),
        weight,
        role,
        band,
        refinement: h.layout.as_ref().map(|l| l.rings.len()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Bound on ‖N v − λ D v‖ relative to ‖v‖, both in the Jacobi norm of N.
    pub tol: f64,
    pub max_iter: usize,
    pub max_cg: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-10, max_iter: 1000, max_cg: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub surface_id: String,
    pub lambda_min: f64,
    pub iterations: usize,
    pub cg_iterations: usize,
    pub residual: f64,
    pub band: f64,
    pub refinement: Option<usize>,
    pub free_vertices: usize,
}

impl SpectralReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub report: SpectralReport,
    /// Eigenvector on all vertices, zero off the free set, normalized to D(v) = 1.
    pub vector: Vec<f64>,
}

const CHUNK: usize = 4096;

/// Chunked sum with fixed chunk boundaries, so the result does not depend on the
/// thread count.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// N on the free vertices in compressed rows, with the diagonal D.
struct System {
    free: Vec<usize>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    dw: Vec<f64>,
}

impl System {
    fn new(forms: &QuadraticForms) -> Self {
        let n = forms.masses.len();
        let free: Vec<usize> = (0..n).filter(|&v| forms.role[v] == Role::Free).collect();
        let mut index = vec![NONE; n];
        for (i, &v) in free.iter().enumerate() {
            index[v] = i;
        }
        let nf = free.len();
        let mut diag: Vec<f64> = free.iter().map(|&v| forms.masses[v] * forms.potential[v]).collect();
        let dw = free.iter().map(|&v| forms.masses[v] * forms.weight[v]).collect();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nf];
        for &(u, v, w) in &forms.conductances {
            let (iu, iv) = (index[u], index[v]);
            if iu != NONE && forms.role[v] != Role::Excluded {
                diag[iu] += w;
            }
            if iv != NONE && forms.role[u] != Role::Excluded {
                diag[iv] += w;
            }
            if iu != NONE && iv != NONE {
                rows[iu].push((iv, -w));
                rows[iv].push((iu, -w));
            }
        }
        let mut offsets = Vec::with_capacity(nf + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, w) in row {
                cols.push(c);
                vals.push(w);
            }
            offsets.push(cols.len());
        }
        System { free, offsets, cols, vals, diag, dw }
    }

    fn len(&self) -> usize {
        self.free.len()
    }

    /// y = (N − σD) x.
    fn apply(&self, sigma: f64, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = (self.diag[i] - sigma * self.dw[i]) * x[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        });
    }

    fn d_norm(&self, x: &[f64]) -> f64 {
        let dx: Vec<f64> = x.iter().zip(&self.dw).map(|(a, d)| a * d).collect();
        dot(x, &dx).sqrt()
    }

    /// ‖N v − λ D v‖ / ‖v‖ in the Jacobi norm of N.
    fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        let mut r = vec![0.0; self.len()];
        self.apply(lambda, v, &mut r);
        let rr: Vec<f64> = r.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        let vv: Vec<f64> = v.iter().zip(&self.diag).map(|(a, d)| a * d).collect();
        (dot(&r, &rr) / dot(v, &vv)).sqrt()
    }
}

enum CgFailure {
    /// Non-positive curvature: the shift is above the smallest eigenvalue.
    Indefinite,
}

/// Jacobi-preconditioned CG on (N − σD) x = b, from the initial `x`, until the
/// preconditioned residual drops by `rel`. Returns the iteration count.
fn pcg(
    sys: &System,
    sigma: f64,
    b: &[f64],
    x: &mut [f64],
    rel: f64,
    max: usize,
) -> std::result::Result<usize, CgFailure> {
    let nf = sys.len();
    let pre: Vec<f64> = (0..nf).map(|i| 1.0 / (sys.diag[i] - sigma * sys.dw[i])).collect();
    if pre.iter().any(|p| !(*p > 0.0)) {
        return Err(CgFailure::Indefinite);
    }
    let bb: Vec<f64> = b.iter().zip(&pre).map(|(a, p)| a * p).collect();
    let target = rel * dot(b, &bb).sqrt();
    let mut ap = vec![0.0; nf];
    sys.apply(sigma, x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(a, c)| a - c).collect();
    let mut z: Vec<f64> = r.iter().zip(&pre).map(|(a, p)| a * p).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for k in 0..max {
        if rz.sqrt() <= target {
            return Ok(k);
        }
        sys.apply(sigma, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(CgFailure::Indefinite);
        }
        let a = rz / pap;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += a * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= a * api);
        z.par_iter_mut().zip(&r).zip(&pre).for_each(|((zi, ri), pi)| *zi = ri * pi);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok(max)
}

/// Smallest generalized eigenvalue of (N, D) on the free vertices by shifted inverse
/// iteration from the all-ones vector. The shift stays at a small negative value until
/// the Rayleigh quotient settles, then follows 0.9·λ; a CG breakdown (shift above the
/// spectrum bottom) drops it back for good.
pub fn hardy_constant(forms: &QuadraticForms, config: SolverConfig) -> Result<Eigenpair> {
    let sys = System::new(forms);
    let nf = sys.len();
    if nf == 0 {
        return Err(Error::Empty("no free vertices".into()));
    }
    if sys.dw.iter().all(|&d| d == 0.0) {
        return Err(Error::InvalidParameter("denominator weight vanishes on every free vertex".into()));
    }
    let mut v = vec![1.0; nf];
    let s = sys.d_norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut nv = vec![0.0; nf];
    sys.apply(0.0, &v, &mut nv);
    let mut lambda = dot(&v, &nv);
    let base = 1e-2 * lambda;
    let (mut shifted, mut may_shift) = (false, true);
    let mut residual = sys.residual(&v, lambda);
    let (mut iterations, mut cg_iterations) = (0, 0);
    while residual > config.tol && lambda > 0.0 {
        if iterations == config.max_iter {
            return Err(Error::NoConvergence { iterations, residual });
        }
        iterations += 1;
        let sigma = if shifted { 0.9 * lambda - base } else { -base };
        let b: Vec<f64> = v.iter().zip(&sys.dw).map(|(x, d)| x * d).collect();
        let mut x: Vec<f64> = v.iter().map(|a| a / (lambda - sigma)).collect();
        let rel = (0.1 * residual).clamp(1e-14, 1e-2);
        match pcg(&sys, sigma, &b, &mut x, rel, config.max_cg) {
            Ok(k) => cg_iterations += k,
            Err(CgFailure::Indefinite) if shifted => {
                shifted = false;
                may_shift = false;
                continue;
            }
            Err(CgFailure::Indefinite) => return Err(Error::NoConvergence { iterations, residual }),
        }
        let s = sys.d_norm(&x);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::NoConvergence { iterations, residual });
        }
        v = x.into_iter().map(|a| a / s).collect();
        sys.apply(0.0, &v, &mut nv);
        let next = dot(&v, &nv);
        if may_shift && (lambda - next).abs() <= 1e-3 * next {
            shifted = true;
        }
        lambda = next;
        residual = sys.residual(&v, lambda);
    }
    let mut vector = vec![0.0; forms.masses.len()];
    for (i, &u) in sys.free.iter().enumerate() {
        vector[u] = v[i];
    }
    Ok(Eigenpair {
        report: SpectralReport {
            surface_id: forms.surface_id.clone(),
            lambda_min: lambda,
            iterations,
            cg_iterations,
            residual,
            band: forms.band,
            refinement: forms.refinement,
            free_vertices: nf,
        },
        vector,
    })
}

/// The Hardy problem with D weight 1/dist(·, Σ)².
pub fn hardy_dist_variant(
    h: &DiscreteHypersurface,
    band: f64,
    outer: OuterCondition,
    config: SolverConfig,
) -> Result<Eigenpair> {
    if !h.is_singular() {
        return Err(Error::RegularSurface);
    }
    let weight = dist_to_sigma(h).values.iter().map(|d| 1.0 / (d * d)).collect();
    hardy_constant(&assemble_weighted(h, weight, band, outer)?, config)
}

/// Smallest eigenvalue of the Hardy forms restricted to the graph ball of radius
/// μ·α·δ(center), with a free boundary.
pub fn neumann_ball_eigenvalue(
    h: &DiscreteHypersurface,
    skin: &SkinField,
    center: usize,
    mu: f64,
    config: SolverConfig,
) -> Result<Eigenpair> {
    if center >= h.vertex_count() {
        return Err(Error::InvalidParameter(format!("center {center} out of range")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("μ = {mu} must be positive")));
    }
    let radius = mu * skin.alpha * skin.delta[center];
    if !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("ball radius at vertex {center} is unbounded")));
    }
    let forms = assemble_forms(h, skin, 0.0, OuterCondition::Neumann)?;
    ball_eigenvalue(h, &forms, center, radius, config)
}

/// Ball eigenvalue on precomputed whole-mesh forms, for scans over many centers.
pub fn ball_eigenvalue(
    h: &DiscreteHypersurface,
    forms: &QuadraticForms,
    center: usize,
    radius: f64,
    config: SolverConfig,
) -> Result<Eigenpair> {
    let g = h.graph();
    let dist = crate::graph::dijkstra(g, &[(center, 0.0)], g.edge_lengths(), None, radius).dist;
    let keep: Vec<bool> = dist.iter().map(|d| d.is_finite()).collect();
    let count = keep.iter().filter(|&&k| k).count();
    if count < 4 {
        return Err(Error::DegenerateResolution(format!(
            "ball of radius {radius:.3e} at vertex {center} holds {count} vertices"
        )));
    }
    if h.outer_boundary.iter().any(|&v| keep[v]) {
        return Err(Error::InvalidParameter(format!("ball at vertex {center} reaches the outer boundary")));
    }
    hardy_constant(&forms.restricted(&keep), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skinfield::metric_skin_transform;
    use crate::surface::{generate_hyperplane, generate_lawson_cone, scale_surface, SurfaceKind};
    use nalgebra::{DMatrix, SymmetricEigen};

    fn cone(radial: usize) -> (DiscreteHypersurface, SkinField) {
        let h = generate_lawson_cone(1, 2, 0.05, 2.0, 8, radial).unwrap();
        let s = metric_skin_transform(&h, 1.0).unwrap();
        (h, s)
    }

    /// Dense reference: eigenvalues of D^{-1/2} N D^{-1/2} on the free vertices.
    fn dense_lambda(forms: &QuadraticForms) -> f64 {
        let free: Vec<usize> = (0..forms.masses.len()).filter(|&v| forms.role[v] == Role::Free).collect();
        let k = free.len();
        let mut m = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                let mut e = vec![0.0; forms.masses.len()];
                e[free[i]] += 1.0;
                e[free[j]] += 1.0;
                let both = forms.numerator(&e);
                let mut ei = vec![0.0; forms.masses.len()];
                ei[free[i]] = 1.0;
                let mut ej = vec![0.0; forms.masses.len()];
                ej[free[j]] = 1.0;
                let nij = if i == j {
                    forms.numerator(&ei)
                } else {
                    (both - forms.numerator(&ei) - forms.numerator(&ej)) / 2.0
                };
                let di = (forms.masses[free[i]] * forms.weight[free[i]]).sqrt();
                let dj = (forms.masses[free[j]] * forms.weight[free[j]]).sqrt();
                m[(i, j)] = nij / (di * dj);
            }
        }
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn constants_are_in_the_flat_kernel() {
        let h = generate_hyperplane(1.0, 6).unwrap();
        let weight = vec![1.0; h.vertex_count()];
        let forms = assemble_weighted(&h, weight, 0.0, OuterCondition::Neumann).unwrap();
        assert_eq!(forms.numerator(&vec![1.0; h.vertex_count()]), 0.0);
        let pair = hardy_constant(&forms, SolverConfig::default()).unwrap();
        assert!(pair.report.lambda_min.abs() <= 1e-12);
    }

    #[test]
    fn single_vertex_quotient_is_closed_form() {
        let (h, s) = cone(12);
        let forms = assemble_forms(&h, &s, 0.0, OuterCondition::Dirichlet).unwrap();
        let v = 5 * h.layout.as_ref().unwrap().link_size + 3;
        let mut f = vec![0.0; h.vertex_count()];
        f[v] = 1.0;
        let w: f64 = forms.conductances.iter().filter(|e| e.0 == v || e.1 == v).map(|e| e.2).sum();
        let m = forms.masses[v];
        let expect = (w + m * h.a_norm[v].powi(2)) / (m * s.values[v].powi(2));
        assert!((forms.rayleigh(&f) - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn linear_functions_on_grids_have_exact_energy() {
        // 8-neighbour grid: the eight directions form a tight frame, so N of a linear
        // function equals m·|∇f|² per vertex away from the rim.
        let h = generate_hyperplane(1.0, 9).unwrap();
        let (m, cond) = lumped_masses(&h);
        let f: Vec<f64> = h.vertices.iter().map(|x| 2.0 * x[0] - x[1]).collect();
        let g = h.graph();
        let centre = 4 * 9 + 4;
        let local: f64 = g.neighbors(centre).map(|(w, e, _)| cond[e].2 * (f[w] - f[centre]).powi(2)).sum::<f64>() / 2.0;
        // Diagonal lengths are quantized, so agreement is to ~1e-11.
        assert!((local - m[centre] * 5.0).abs() <= 1e-9 * local);
    }

    #[test]
    fn iterative_matches_dense_solver() {
        let h = generate_lawson_cone(1, 1, 0.1, 2.0, 6, 10).unwrap();
        let s = metric_skin_transform(&h, 1.0).unwrap();
        let forms = assemble_forms(&h, &s, 0.0, OuterCondition::Dirichlet).unwrap();
        let pair = hardy_constant(&forms, SolverConfig::default()).unwrap();
        let dense = dense_lambda(&forms);
        assert!((pair.report.lambda_min - dense).abs() <= 1e-8 * dense, "{} vs {dense}", pair.report.lambda_min);
        assert!((forms.rayleigh(&pair.vector) - pair.report.lambda_min).abs() <= 1e-9 * dense);
    }

    #[test]
    fn cone_hardy_constant_is_positive_and_scale_free() {
        let (h, s) = cone(40);
        let forms = assemble_forms(&h, &s, 0.0, OuterCondition::Dirichlet).unwrap();
        let pair = hardy_constant(&forms, SolverConfig::default()).unwrap();
        assert!(pair.report.lambda_min > 0.0);
        assert!(pair.report.residual <= 1e-10);
        let hs = scale_surface(&h, 3.0).unwrap();
        let ss = metric_skin_transform(&hs, 1.0).unwrap();
        let fs = assemble_forms(&hs, &ss, 0.0, OuterCondition::Dirichlet).unwrap();
        let n = h.dim as i32;
        let (a, b) = (forms.numerator(&pair.vector), fs.numerator(&pair.vector));
        assert!((b / a - 3f64.powi(n - 2)).abs() <= 1e-9 * 3f64.powi(n - 2));
        let q = fs.rayleigh(&pair.vector);
        assert!((q - pair.report.lambda_min).abs() <= 1e-9 * q);
    }

    #[test]
    fn dirichlet_band_is_monotone() {
        let (h, s) = cone(40);
        let mut last = 0.0;
        for band in [0.0, 0.1, 0.2, 0.4] {
            let forms = assemble_forms(&h, &s, band, OuterCondition::Dirichlet).unwrap();
            let l = hardy_constant(&forms, SolverConfig::default()).unwrap().report.lambda_min;
            assert!(l >= last * (1.0 - 1e-9), "band {band}: {l} < {last}");
            last = l;
        }
        assert!(matches!(assemble_forms(&h, &s, 10.0, OuterCondition::Dirichlet), Err(Error::Empty(_))));
    }

    #[test]
    fn distance_weight_dominance() {
        let (h, s) = cone(40);
        let forms = assemble_forms(&h, &s, 0.0, OuterCondition::Dirichlet).unwrap();
        let tau = hardy_constant(&forms, SolverConfig::default()).unwrap().report.lambda_min;
        let kstar = hardy_dist_variant(&h, 0.0, OuterCondition::Dirichlet, SolverConfig::default()).unwrap();
        let dist = dist_to_sigma(&h).values;
        let m = (0..h.vertex_count())
            .filter(|&v| forms.role[v] == Role::Free)
            .map(|v| s.values[v] * dist[v])
            .fold(f64::INFINITY, f64::min);
        assert!(m >= s.alpha);
        // (α/dist)² ≤ ⟨A⟩² pointwise, so the quotient with the smaller weight is larger.
        assert!(kstar.report.lambda_min / (s.alpha * s.alpha) >= tau * (1.0 - 1e-9));
        assert!(kstar.report.lambda_min >= tau * m * m * (1.0 - 1e-9));
        let flat = generate_hyperplane(1.0, 5).unwrap();
        assert!(matches!(
            hardy_dist_variant(&flat, 0.0, OuterCondition::Dirichlet, SolverConfig::default()),
            Err(Error::RegularSurface)
        ));
    }

    #[test]
    fn neumann_ball_eigenvalues() {
        let (h, s) = cone(40);
        let ls = h.layout.as_ref().unwrap().link_size;
        let c = 20 * ls + 4;
        let nu = neumann_ball_eigenvalue(&h, &s, c, 2.0, SolverConfig::default()).unwrap().report.lambda_min;
        assert!(nu > 0.0);
        let hs = scale_surface(&h, 2.0).unwrap();
        let ss = metric_skin_transform(&hs, 1.0).unwrap();
        let nus = neumann_ball_eigenvalue(&hs, &ss, c, 2.0, SolverConfig::default()).unwrap().report.lambda_min;
        assert!((nu - nus).abs() <= 1e-9 * nu);

        // A flat region with bounded ⟨A⟩: constants have zero energy.
        let flat = generate_hyperplane(1.0, 11).unwrap();
        let h0 = DiscreteHypersurface::new(
            SurfaceKind::Loaded,
            2,
            flat.vertices.clone(),
            flat.edges.clone(),
            (0..121).map(|v| if v == 0 { 1.0 } else { 0.0 }).collect(),
            vec![],
            vec![],
            1.0,
            None,
        )
        .unwrap();
        let s0 = metric_skin_transform(&h0, 1.0).unwrap();
        let centre = 5 * 11 + 5;
        let nu0 = neumann_ball_eigenvalue(&h0, &s0, centre, 0.3, SolverConfig::default()).unwrap();
        assert!(nu0.report.lambda_min.abs() <= 1e-12);
        assert!(matches!(
            neumann_ball_eigenvalue(&h0, &s0, centre, 1e-6, SolverConfig::default()),
            Err(Error::DegenerateResolution(_))
        ));
    }
}
