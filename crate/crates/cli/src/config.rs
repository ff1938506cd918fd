use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use skinlab::surface::{
    generate_catenoid, generate_hyperplane, generate_lawson_cone, generate_link, DiscreteHypersurface,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Lawson,
    Link,
    Hyperplane,
    Catenoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceParams {
    pub shape: Shape,
    pub p: usize,
    pub q: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub angular_res: usize,
    pub radial_res: usize,
    /// Half side of the hyperplane patch.
    pub extent: f64,
    /// Catenoid half height.
    pub height: f64,
    /// Grid resolution for the hyperplane and catenoid.
    pub res: usize,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        SurfaceParams {
            shape: Shape::Lawson,
            p: 3,
            q: 3,
            r_min: 0.05,
            r_max: 4.0,
            angular_res: 4,
            radial_res: 300,
            extent: 1.0,
            height: 1.0,
            res: 60,
        }
    }
}

impl SurfaceParams {
    pub fn generate(&self) -> Result<DiscreteHypersurface> {
        let h = match self.shape {
            Shape::Lawson => {
                generate_lawson_cone(self.p, self.q, self.r_min, self.r_max, self.angular_res, self.radial_res)?
            }
            Shape::Link => generate_link(self.p, self.q, self.angular_res)?,
            Shape::Hyperplane => generate_hyperplane(self.extent, self.res)?,
            Shape::Catenoid => generate_catenoid(self.height, self.res)?,
        };
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub curve_pairs: usize,
    pub proxy_pairs: usize,
    pub link_pairs: usize,
    pub domain_pairs: usize,
    pub metric_pairs: usize,
    pub samples: usize,
    pub quadruples: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            curve_pairs: 100,
            proxy_pairs: 128,
            link_pairs: 15,
            domain_pairs: 20,
            metric_pairs: 100,
            samples: 32,
            quadruples: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub oracle: f64,
    pub closed_form: f64,
    pub scaling: f64,
    pub qt_margin: f64,
    pub hardy_drift: f64,
    pub blow_up: f64,
    pub search_slack: f64,
    pub kappa_spread: f64,
    pub dyadic: f64,
    pub family_bound: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle: 1e-12,
            closed_form: 0.05,
            scaling: 1e-9,
            qt_margin: 0.02,
            hardy_drift: 0.10,
            blow_up: 1e-6,
            search_slack: 1e-9,
            kappa_spread: 3.0,
            dyadic: 0.10,
            family_bound: 64,
        }
    }
}

/// Defaults for every subcommand; explicit flags override them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub surface: SurfaceParams,
    pub alphas: Vec<f64>,
    pub xi: f64,
    pub tau_target: f64,
    pub bands: Vec<f64>,
    /// Radial resolutions compared against the mesh's own in the Hardy drift check.
    pub refinements: Vec<usize>,
    pub domain_levels: Vec<f64>,
    pub budgets: Budgets,
    pub tolerances: Tolerances,
    /// Always on; every ordering in the pipeline is fixed and no randomness is used.
    pub deterministic: bool,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surface: SurfaceParams::default(),
            alphas: vec![0.01, 0.1, 1.0, 10.0, 100.0],
            xi: 0.12,
            tau_target: 0.05,
            bands: vec![0.0, 0.1, 0.2],
            refinements: vec![150],
            domain_levels: vec![0.4, 0.2, 0.1],
            budgets: Budgets::default(),
            tolerances: Tolerances::default(),
            deterministic: true,
            output_dir: PathBuf::from("."),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("{name} = {x} must be positive and finite");
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.surface;
        positive("surface.r_min", s.r_min)?;
        positive("surface.r_max", s.r_max)?;
        positive("surface.extent", s.extent)?;
        positive("surface.height", s.height)?;
        if s.r_min >= s.r_max {
            bail!("surface.r_min must be below surface.r_max");
        }
        if s.p == 0 || s.q == 0 {
            bail!("surface.p and surface.q must be at least 1");
        }
        for &a in &self.alphas {
            positive("alpha", a)?;
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            bail!("xi = {} must lie in (0, 1)", self.xi);
        }
        if !(self.tau_target > 0.0 && self.tau_target < 1.0) {
            bail!("tau_target = {} must lie in (0, 1)", self.tau_target);
        }
        if let Some(b) = self.bands.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            bail!("band {b} must be finite and ≥ 0");
        }
        for &a in &self.domain_levels {
            positive("domain level", a)?;
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("oracle", t.oracle),
            ("closed_form", t.closed_form),
            ("scaling", t.scaling),
            ("qt_margin", t.qt_margin),
            ("hardy_drift", t.hardy_drift),
            ("blow_up", t.blow_up),
            ("search_slack", t.search_slack),
            ("kappa_spread", t.kappa_spread),
            ("dyadic", t.dyadic),
        ] {
            positive(&format!("tolerances.{name}"), x)?;
        }
        if !self.deterministic {
            bail!("deterministic cannot be switched off");
        }
        Ok(())
    }
}
