//! Mesh generators for the analytic test surfaces.

use std::f64::consts::PI;

use super::oracle::{self, Catenoid, Parametrization};
use super::{quantize, ConeLayout, DiscreteHypersurface, SurfaceKind};
use crate::error::{Error, Result};

/// Sample points on the unit sphere S^p with their grid neighbour pairs.
///
/// S^1 is a regular polygon with `angular_res` points. For p ≥ 2 the points are the
/// boundary nodes of a cube grid with `angular_res / 4 + 1` nodes per edge
/// (rounded up), projected radially.
pub fn sphere_samples(p: usize, angular_res: usize) -> Result<(Vec<Vec<f64>>, Vec<(usize, usize)>)> {
    if angular_res < 3 {
        return Err(Error::DegenerateResolution(format!("angular resolution {angular_res} < 3")));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("sphere factor dimension must be ≥ 1".into()));
    }
    if p == 1 {
        let n = angular_res;
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let nb = (0..n).map(|k| (k.min((k + 1) % n), k.max((k + 1) % n))).collect();
        return Ok((pts, nb));
    }
    let m = angular_res.div_ceil(4) + 1;
    let d = p + 1;
    let total = m.pow(d as u32);
    let decode = |mut idx: usize| {
        let mut c = vec![0usize; d];
        for slot in c.iter_mut() {
            *slot = idx % m;
            idx /= m;
        }
        c
    };
    let on_boundary = |c: &[usize]| c.iter().any(|&k| k == 0 || k == m - 1);
    let mut id = vec![usize::MAX; total];
    let mut pts = Vec::new();
    for idx in 0..total {
        let c = decode(idx);
        if on_boundary(&c) {
            id[idx] = pts.len();
            let x: Vec<f64> = c.iter().map(|&k| -1.0 + 2.0 * k as f64 / (m - 1) as f64).collect();
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            pts.push(x.into_iter().map(|v| v / nrm).collect());
        }
    }
    let mut nb = Vec::new();
    let mut stride = 1;
    for axis in 0..d {
        for idx in 0..total {
            let c = decode(idx);
            if c[axis] + 1 < m {
                let j = idx + stride;
                if id[idx] != usize::MAX && id[j] != usize::MAX {
                    // Interior cube edges between two boundary nodes would cut through the ball.
                    let mid_on_face = c.iter().enumerate().any(|(ax, &k)| ax != axis && (k == 0 || k == m - 1));
                    if mid_on_face || m == 2 {
                        nb.push((id[idx], id[j]));
                    }
                }
            }
        }
        stride *= m;
    }
    nb.sort_unstable();
    Ok((pts, nb))
}

fn angle(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0).acos()
}

/// Geometric radial samples between `r_min` and `r_max`.
pub fn radial_samples(r_min: f64, r_max: f64, radial_res: usize) -> Vec<f64> {
    let ratio = (r_max / r_min).ln();
    (0..radial_res)
        .map(|i| if i + 1 == radial_res { r_max } else { r_min * (ratio * i as f64 / (radial_res - 1) as f64).exp() })
        .collect()
}

struct ProductLink {
    a: f64,
    b: f64,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// (link index i, link index j, intrinsic link distance)
    edges: Vec<(usize, usize, f64)>,
}

impl ProductLink {
    fn new(p: usize, q: usize, angular_res: usize) -> Result<Self> {
        let s = (p + q) as f64;
        let (a, b) = ((p as f64 / s).sqrt(), (q as f64 / s).sqrt());
        let (u, nu) = sphere_samples(p, angular_res)?;
        let (v, nv) = sphere_samples(q, angular_res)?;
        let nvn = v.len();
        let mut edges = Vec::new();
        for iu in 0..u.len() {
            for &(j, k) in &nv {
                edges.push((iu * nvn + j, iu * nvn + k, b * angle(&v[j], &v[k])));
            }
        }
        for &(i, k) in &nu {
            let s = a * angle(&u[i], &u[k]);
            for iv in 0..nvn {
                edges.push((i * nvn + iv, k * nvn + iv, s));
            }
        }
        edges.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        Ok(ProductLink { a, b, u, v, edges })
    }

    fn len(&self) -> usize {
        self.u.len() * self.v.len()
    }

    fn point(&self, idx: usize, r: f64) -> Vec<f64> {
        let (iu, iv) = (idx / self.v.len(), idx % self.v.len());
        self.u[iu].iter().map(|c| r * self.a * c).chain(self.v[iv].iter().map(|c| r * self.b * c)).collect()
    }
}

fn check_pq(p: usize, q: usize) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidParameter(format!("p = {p}, q = {q}: both must be ≥ 1")));
    }
    Ok(())
}

/// Truncated Lawson cone over S^p(a) x S^q(b), r ∈ [r_min, r_max].
pub fn generate_lawson_cone(
    p: usize,
    q: usize,
    r_min: f64,
    r_max: f64,
    angular_res: usize,
    radial_res: usize,
) -> Result<DiscreteHypersurface> {
    check_pq(p, q)?;
    if !(r_min > 0.0 && r_min.is_finite() && r_max.is_finite()) || r_min >= r_max {
        return Err(Error::InvalidParameter(format!("need 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}")));
    }
    if radial_res < 2 {
        return Err(Error::DegenerateResolution(format!("radial resolution {radial_res} < 2")));
    }
    let kappa = oracle::lawson_kappa(p, q)?;
    let link = ProductLink::new(p, q, angular_res)?;
    let rings = radial_samples(r_min, r_max, radial_res);
    let nl = link.len();
    let mut vertices = Vec::with_capacity(nl * rings.len());
    let mut a_norm = Vec::with_capacity(nl * rings.len());
    for &r in &rings {
        for l in 0..nl {
            vertices.push(link.point(l, r));
            a_norm.push(kappa / r);
        }
    }
    let mut edges = Vec::new();
    for (i, &r) in rings.iter().enumerate() {
        for &(j, k, s) in &link.edges {
            edges.push((i * nl + j, i * nl + k, quantize(2.0 * r * (s / 2.0).sin())));
        }
        if i + 1 < rings.len() {
            let dr = quantize(rings[i + 1] - r);
            for l in 0..nl {
                edges.push((i * nl + l, (i + 1) * nl + l, dr));
            }
        }
    }
    let off = quantize(r_min);
    let sigma_proxy = (0..nl).map(|l| (l, off)).collect();
    let last = (rings.len() - 1) * nl;
    let outer_boundary = (last..last + nl).collect();
    DiscreteHypersurface::new(
        SurfaceKind::LawsonCone { p, q },
        p + q + 1,
        vertices,
        edges,
        a_norm,
        sigma_proxy,
        outer_boundary,
        1.0,
        Some(ConeLayout { rings, link_size: nl, kappa, angular_res }),
    )
}

/// The link S^p(a) x S^q(b) ⊂ S^{p+q+1} with its intrinsic product metric.
pub fn generate_link(p: usize, q: usize, angular_res: usize) -> Result<DiscreteHypersurface> {
    check_pq(p, q)?;
    let kappa = oracle::lawson_kappa(p, q)?;
    let link = ProductLink::new(p, q, angular_res)?;
    let nl = link.len();
    let vertices = (0..nl).map(|l| link.point(l, 1.0)).collect();
    let edges = link.edges.iter().map(|&(j, k, s)| (j, k, quantize(s))).collect();
    DiscreteHypersurface::new(
        SurfaceKind::Link { p, q },
        p + q,
        vertices,
        edges,
        vec![kappa; nl],
        Vec::new(),
        Vec::new(),
        1.0,
        Some(ConeLayout { rings: vec![1.0], link_size: nl, kappa, angular_res }),
    )
}

/// Square patch [-extent, extent]² of the plane x₃ = 0 in R³, 8-neighbour grid.
pub fn generate_hyperplane(extent: f64, res: usize) -> Result<DiscreteHypersurface> {
    if res < 2 {
        return Err(Error::DegenerateResolution(format!("grid resolution {res} < 2")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidParameter(format!("extent {extent} must be positive")));
    }
    let h = 2.0 * extent / (res - 1) as f64;
    let idx = |i: usize, j: usize| i * res + j;
    let mut vertices = Vec::with_capacity(res * res);
    for i in 0..res {
        for j in 0..res {
            vertices.push(vec![-extent + h * i as f64, -extent + h * j as f64, 0.0]);
        }
    }
    let (hs, hd) = (quantize(h), quantize(h * 2f64.sqrt()));
    let mut edges = Vec::new();
    for i in 0..res {
        for j in 0..res {
            if j + 1 < res {
                edges.push((idx(i, j), idx(i, j + 1), hs));
            }
            if i + 1 < res {
                edges.push((idx(i, j), idx(i + 1, j), hs));
                if j + 1 < res {
                    edges.push((idx(i, j), idx(i + 1, j + 1), hd));
                }
                if j > 0 {
                    edges.push((idx(i, j), idx(i + 1, j - 1), hd));
                }
            }
        }
    }
    let outer = (0..res * res)
        .filter(|&v| {
            let (i, j) = (v / res, v % res);
            i == 0 || j == 0 || i + 1 == res || j + 1 == res
        })
        .collect();
    DiscreteHypersurface::new(
        SurfaceKind::Hyperplane,
        2,
        vertices,
        edges,
        vec![0.0; res * res],
        Vec::new(),
        outer,
        1.0,
        None,
    )
}

/// Catenoid `(cosh t cos θ, cosh t sin θ, t)` for |t| ≤ height; `res` rows and columns.
///
/// A regular, non-flat minimal surface. It is not globally area minimizing and serves
/// only as a smoke test for the machinery.
pub fn generate_catenoid(height: f64, res: usize) -> Result<DiscreteHypersurface> {
    if res < 3 {
        return Err(Error::DegenerateResolution(format!("grid resolution {res} < 3")));
    }
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::InvalidParameter(format!("height {height} must be positive")));
    }
    let rows = res;
    let cols = res;
    let idx = |i: usize, j: usize| i * cols + (j % cols);
    let mut params = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let t = -height + 2.0 * height * i as f64 / (rows - 1) as f64;
        for j in 0..cols {
            params.push([t, 2.0 * PI * j as f64 / cols as f64]);
        }
    }
    let vertices: Vec<Vec<f64>> = params.iter().map(|u| Catenoid.eval(u)).collect();
    let a_norm = params
        .iter()
        .map(|u| oracle::second_fundamental_oracle(&Catenoid, u).map(|o| o.value))
        .collect::<Result<Vec<f64>>>()?;
    let chord = |a: usize, b: usize| {
        let d: f64 = vertices[a].iter().zip(&vertices[b]).map(|(x, y)| (x - y) * (x - y)).sum();
        quantize(d.sqrt())
    };
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = idx(i, j);
            edges.push((v.min(idx(i, j + 1)), v.max(idx(i, j + 1)), chord(v, idx(i, j + 1))));
            if i + 1 < rows {
                for w in [idx(i + 1, j), idx(i + 1, j + 1), idx(i + 1, j + cols - 1)] {
                    edges.push((v, w, chord(v, w)));
                }
            }
        }
    }
    let outer = (0..cols).chain((rows - 1) * cols..rows * cols).collect();
    DiscreteHypersurface::new(SurfaceKind::Catenoid, 2, vertices, edges, a_norm, Vec::new(), outer, 1.0, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tesseract_sampling_of_s3() {
        let (pts, nb) = sphere_samples(3, 4).unwrap();
        assert_eq!(pts.len(), 16);
        assert_eq!(nb.len(), 32);
        for &(i, j) in &nb {
            assert!((angle(&pts[i], &pts[j]) - PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn finer_cube_sphere_has_only_boundary_nodes() {
        let (pts, nb) = sphere_samples(2, 8).unwrap();
        // m = 3: 27 - 1 nodes.
        assert_eq!(pts.len(), 26);
        for &(i, j) in &nb {
            assert!(angle(&pts[i], &pts[j]) < PI / 3.0 + 1e-12);
        }
    }

    #[test]
    fn circle_sampling_is_a_cycle() {
        let (pts, nb) = sphere_samples(1, 6).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(nb.len(), 6);
    }

    #[test]
    fn low_resolution_rejected() {
        assert!(matches!(generate_lawson_cone(3, 3, 0.1, 1.0, 2, 10), Err(Error::DegenerateResolution(_))));
        assert!(matches!(generate_lawson_cone(3, 3, 1.0, 1.0, 4, 10), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn radial_samples_hit_both_ends() {
        let r = radial_samples(0.05, 4.0, 30);
        assert_eq!(r[0], 0.05);
        assert_eq!(r[29], 4.0);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
    }
}
