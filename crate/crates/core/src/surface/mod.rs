//! Discretized hypersurfaces: a vertex-weighted metric graph standing in for H ∖ Σ,
//! with |A| per vertex and an excised singular set carried as offsets on a proxy ring.

mod generate;
pub mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{self, Graph};

pub use generate::{
    generate_catenoid, generate_hyperplane, generate_lawson_cone, generate_link, radial_samples, sphere_samples,
};
pub use oracle::{second_fundamental_oracle, OracleValue, Parametrization};

/// Generated edge lengths and offsets are rounded to this grid so that every
/// path sum is exact in double precision, and so are power-of-two rescalings.
pub const LENGTH_QUANTUM: f64 = 1.0 / (1u64 << 36) as f64;

pub fn quantize(x: f64) -> f64 {
    let q = (x / LENGTH_QUANTUM).round() * LENGTH_QUANTUM;
    if q > 0.0 || x <= 0.0 {
        q
    } else {
        LENGTH_QUANTUM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Hyperplane,
    LawsonCone { p: usize, q: usize },
    Link { p: usize, q: usize },
    Catenoid,
    Loaded,
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceKind::Hyperplane => write!(f, "hyperplane"),
            SurfaceKind::LawsonCone { p, q } => write!(f, "lawson_cone({p},{q})"),
            SurfaceKind::Link { p, q } => write!(f, "link({p},{q})"),
            SurfaceKind::Catenoid => write!(f, "catenoid"),
            SurfaceKind::Loaded => write!(f, "loaded"),
        }
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let pq = |inner: &str| -> Result<(usize, usize)> {
            let bad = || Error::Malformed(format!("bad surface kind '{s}'"));
            let inner = inner.strip_suffix(')').ok_or_else(bad)?;
            let (p, q) = inner.split_once(',').ok_or_else(bad)?;
            Ok((p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?))
        };
        match s {
            "hyperplane" => Ok(SurfaceKind::Hyperplane),
            "catenoid" => Ok(SurfaceKind::Catenoid),
            "loaded" => Ok(SurfaceKind::Loaded),
            _ => {
                if let Some(rest) = s.strip_prefix("lawson_cone(") {
                    let (p, q) = pq(rest)?;
                    Ok(SurfaceKind::LawsonCone { p, q })
                } else if let Some(rest) = s.strip_prefix("link(") {
                    let (p, q) = pq(rest)?;
                    Ok(SurfaceKind::Link { p, q })
                } else {
                    Err(Error::Malformed(format!("unknown surface kind '{s}'")))
                }
            }
        }
    }
}

impl Serialize for SurfaceKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SurfaceKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ring structure of cone and link meshes: vertex `v` sits on ring `v / link_size`
/// at link point `v % link_size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeLayout {
    pub rings: Vec<f64>,
    pub link_size: usize,
    /// r·|A| measured by the curvature oracle at radius 1.
    pub kappa: f64,
    /// Angular resolution used to sample the link, for regeneration.
    pub angular_res: usize,
}

/// Serialized form; field order is part of the file format.
#[derive(Serialize, Deserialize)]
struct MeshFile {
    kind: SurfaceKind,
    dim: usize,
    vertices: Vec<Vec<f64>>,
    edges: Vec<(usize, usize, f64)>,
    a_norm: Vec<f64>,
    sigma_proxy: Vec<(usize, f64)>,
    outer_boundary: Vec<usize>,
    scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<ConeLayout>,
}

#[derive(Debug, Clone)]
pub struct DiscreteHypersurface {
    pub kind: SurfaceKind,
    /// Intrinsic dimension n.
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
    pub a_norm: Vec<f64>,
    pub sigma_proxy: Vec<(usize, f64)>,
    pub outer_boundary: Vec<usize>,
    pub scale: f64,
    pub layout: Option<ConeLayout>,
    graph: Graph,
    outer_mask: Vec<bool>,
    proxy_mask: Vec<bool>,
    id: String,
}

/// Per-vertex real numbers tied to a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub name: String,
    pub surface_id: String,
    pub values: Vec<f64>,
}

/// Result of a connectivity query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    /// Component sizes in order of their smallest vertex.
    pub components: Vec<usize>,
}

impl DiscreteHypersurface {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: SurfaceKind,
        dim: usize,
        vertices: Vec<Vec<f64>>,
        edges: Vec<(usize, usize, f64)>,
        a_norm: Vec<f64>,
        sigma_proxy: Vec<(usize, f64)>,
        outer_boundary: Vec<usize>,
        scale: f64,
        layout: Option<ConeLayout>,
    ) -> Result<Self> {
        let n = vertices.len();
        if n == 0 {
            return Err(Error::Malformed("no vertices".into()));
        }
        if a_norm.len() != n {
            return Err(Error::Malformed(format!("{} a_norm values for {n} vertices", a_norm.len())));
        }
        if let Some(v) = a_norm.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Malformed(format!("a_norm value {v} is not a finite non-negative number")));
        }
        for &(u, v, len) in &edges {
            if u >= n || v >= n || u == v {
                return Err(Error::Malformed(format!("bad edge ({u}, {v})")));
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::Malformed(format!("edge ({u}, {v}) has length {len}")));
            }
        }
        for &(v, off) in &sigma_proxy {
            if v >= n || !(off >= 0.0 && off.is_finite()) {
                return Err(Error::Malformed(format!("bad singular proxy entry ({v}, {off})")));
            }
        }
        if let Some(&v) = outer_boundary.iter().find(|&&v| v >= n) {
            return Err(Error::Malformed(format!("outer boundary vertex {v} out of range")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Malformed(format!("scale {scale} must be positive")));
        }
        let graph = Graph::from_edges(n, &edges);
        let mut outer_mask = vec![false; n];
        for &v in &outer_boundary {
            outer_mask[v] = true;
        }
        let mut proxy_mask = vec![false; n];
        for &(v, _) in &sigma_proxy {
            proxy_mask[v] = true;
        }
        let mut h = DiscreteHypersurface {
            kind,
            dim,
            vertices,
            edges,
            a_norm,
            sigma_proxy,
            outer_boundary,
            scale,
            layout,
            graph,
            outer_mask,
            proxy_mask,
            id: String::new(),
        };
        h.id = crate::content_id(h.to_json().as_bytes());
        Ok(h)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_outer(&self, v: usize) -> bool {
        self.outer_mask[v]
    }

    pub fn is_proxy(&self, v: usize) -> bool {
        self.proxy_mask[v]
    }

    pub fn is_singular(&self) -> bool {
        !self.sigma_proxy.is_empty()
    }

    pub fn is_totally_geodesic(&self) -> bool {
        self.a_norm.iter().all(|&a| a == 0.0)
    }

    /// Distance of the vertex from the origin in the ambient space.
    pub fn radius(&self, v: usize) -> f64 {
        self.vertices[v].iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Ring index of a cone or link vertex.
    pub fn ring_of(&self, v: usize) -> Option<usize> {
        self.layout.as_ref().map(|l| v / l.link_size)
    }

    /// Stable content hash of the serialized mesh.
    pub fn id(&self) -> String {
        self.id.clone()
    }

    fn to_file(&self) -> MeshFile {
        MeshFile {
            kind: self.kind,
            dim: self.dim,
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            a_norm: self.a_norm.clone(),
            sigma_proxy: self.sigma_proxy.clone(),
            outer_boundary: self.outer_boundary.clone(),
            scale: self.scale,
            layout: self.layout.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("mesh serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: MeshFile = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::new(f.kind, f.dim, f.vertices, f.edges, f.a_norm, f.sigma_proxy, f.outer_boundary, f.scale, f.layout)
    }

    fn field(&self, name: &str, values: Vec<f64>) -> ScalarField {
        ScalarField { name: name.into(), surface_id: self.id(), values }
    }
}

/// Rescale positions, lengths and offsets by λ and |A| by 1/λ.
pub fn scale_surface(h: &DiscreteHypersurface, lambda: f64) -> Result<DiscreteHypersurface> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale factor {lambda} must be positive")));
    }
    let layout = h.layout.as_ref().map(|l| ConeLayout {
        rings: l.rings.iter().map(|r| r * lambda).collect(),
        link_size: l.link_size,
        kappa: l.kappa,
        angular_res: l.angular_res,
    });
    DiscreteHypersurface::new(
        h.kind,
        h.dim,
        h.vertices.iter().map(|x| x.iter().map(|c| c * lambda).collect()).collect(),
        h.edges.iter().map(|&(u, v, l)| (u, v, l * lambda)).collect(),
        h.a_norm.iter().map(|a| a / lambda).collect(),
        h.sigma_proxy.iter().map(|&(v, o)| (v, o * lambda)).collect(),
        h.outer_boundary.clone(),
        h.scale * lambda,
        layout,
    )
}

/// The same cone generated at radii ×λ, vertex for vertex; `None` for other kinds.
/// Power-of-two λ reproduces `scale_surface` bit for bit.
pub fn regenerate_scaled_cone(h: &DiscreteHypersurface, lambda: f64) -> Result<Option<DiscreteHypersurface>> {
    let (SurfaceKind::LawsonCone { p, q }, Some(l)) = (h.kind, &h.layout) else {
        return Ok(None);
    };
    let rings = &l.rings;
    generate_lawson_cone(p, q, lambda * rings[0], lambda * rings[rings.len() - 1], l.angular_res, rings.len()).map(Some)
}

/// Multi-source graph distance; unreachable vertices get +∞.
pub fn geodesic_distance(h: &DiscreteHypersurface, sources: &[usize]) -> Result<ScalarField> {
    if sources.is_empty() {
        return Err(Error::Empty("geodesic distance needs at least one source".into()));
    }
    if let Some(&s) = sources.iter().find(|&&s| s >= h.vertex_count()) {
        return Err(Error::InvalidParameter(format!("source vertex {s} out of range")));
    }
    let src: Vec<(usize, f64)> = sources.iter().map(|&s| (s, 0.0)).collect();
    Ok(h.field("geodesic_distance", graph::geodesic(h.graph(), &src).dist))
}

/// min over proxy vertices of (graph distance + offset); +∞ on regular surfaces.
pub fn dist_to_sigma(h: &DiscreteHypersurface) -> ScalarField {
    let values = if h.sigma_proxy.is_empty() {
        vec![f64::INFINITY; h.vertex_count()]
    } else {
        graph::geodesic(h.graph(), &h.sigma_proxy).dist
    };
    h.field("dist_to_sigma", values)
}

/// Connectivity of the graph with `exclude` removed.
pub fn check_connectivity(h: &DiscreteHypersurface, exclude: &[usize]) -> Connectivity {
    let mut keep = vec![true; h.vertex_count()];
    for &v in exclude {
        if v < keep.len() {
            keep[v] = false;
        }
    }
    let (_, components) = h.graph().components(&keep);
    Connectivity { connected: components.len() <= 1, components }
}
