use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use skinlab::content_id;
use skinlab::cover::{
    build_skin_cover, check_cover, covering_number_stats, qt_perturb, verify_qt, CoverConfig, QtConfig, XiMode,
};
use skinlab::skinfield::{
    brute_force_skin_oracle, metric_skin_transform, regularity_scale, relative_residual, verify_axioms, whitney_smooth,
    AxiomTolerances, SkinField, DEFAULT_ORACLE_CAP,
};
use skinlab::spectral::{
    assemble_forms, four_point_delta, hardy_constant, hardy_dist_variant, metric_matrix, quasi_hyperbolic_distances,
    sample_vertices, skin_metric_distances, MetricKind, OuterCondition, SolverConfig,
};
use skinlab::surface::{
    check_connectivity, dist_to_sigma, regenerate_scaled_cone, scale_surface, DiscreteHypersurface,
};
use skinlab::uniformity::{
    blow_up_invariance_check, bubbled_hull, build_link_space, deterministic_pairs, proxy_pairs, skin_uniform_curve,
    verify_domain, CurveMethod,
};

use crate::artifact::{embed, load_cover, load_mesh, load_skin, read, Artifact, Check, Loaded};
use crate::config::{RunConfig, SurfaceParams};

pub struct Ctx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn output(&self, explicit: &Option<PathBuf>, kind: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join(format!("{kind}.json")))
    }
}

fn inputs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// The surface at λ times the size: regenerated for cones, rescaled otherwise.
fn scaled(h: &DiscreteHypersurface, lambda: f64) -> Result<DiscreteHypersurface> {
    Ok(match regenerate_scaled_cone(h, lambda)? {
        Some(g) => g,
        None => scale_surface(h, lambda)?,
    })
}

/// Cone vertices whose closed-form minimizer κr/(α+κ) lies inside the mesh.
fn cone_interior(h: &DiscreteHypersurface, alpha: f64) -> Option<(f64, Vec<usize>)> {
    let layout = h.layout.as_ref().filter(|_| h.is_singular())?;
    let (kappa, r_min) = (layout.kappa, layout.rings[0]);
    let vs = (0..h.vertex_count())
        .filter(|&v| !h.is_proxy(v) && !h.is_outer(v) && kappa * h.radius(v) / (alpha + kappa) >= r_min)
        .collect();
    Some((kappa, vs))
}

pub fn generate(params: &SurfaceParams) -> Result<(Artifact, DiscreteHypersurface)> {
    let h = params.generate()?;
    let mut checks = Vec::new();
    if h.is_singular() {
        let proxy: Vec<usize> = h.sigma_proxy.iter().map(|&(v, _)| v).collect();
        let c = check_connectivity(&h, &proxy);
        checks.push(Check::new(14, "connected_off_sigma", c.connected, json!({"components": c.components.len()})));
    }
    let params = serde_json::to_string(params)?;
    let artifact =
        Artifact::new("mesh", inputs(&[("parameters", &content_id(params.as_bytes()))]), checks, embed(&h.to_json()));
    Ok((artifact, h))
}

pub fn skin(ctx: &Ctx, mesh: &Path, alpha: f64, oracle: bool) -> Result<(Artifact, DiscreteHypersurface)> {
    let Loaded { value: h, id } = load_mesh(mesh)?;
    let tol = &ctx.config.tolerances;
    let s = metric_skin_transform(&h, alpha)?;
    let mut checks = vec![Check::new(
        3,
        "lipschitz",
        s.lipschitz_bound <= 1.0 / alpha,
        json!({"measured": s.lipschitz_bound, "bound": 1.0 / alpha}),
    )];
    if alpha == 1.0 {
        let rh = regularity_scale(&h).values;
        let mismatches = s.delta.iter().zip(&rh).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
        checks.push(Check::new(2, "regularity_scale_identity", mismatches == 0, json!({"mismatches": mismatches})));
    }
    if oracle {
        let slow = brute_force_skin_oracle(&h, alpha, DEFAULT_ORACLE_CAP)?;
        let r = relative_residual(&s.values, &slow.values);
        checks.push(Check::new(
            1,
            "oracle_equivalence",
            r <= tol.oracle,
            json!({"residual": r, "tolerance": tol.oracle}),
        ));
    }
    if let Some((kappa, vs)) = cone_interior(&h, alpha) {
        let worst = vs.iter().map(|&v| (s.values[v] * h.radius(v) / (alpha + kappa) - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::new(
            4,
            "closed_form",
            worst <= tol.closed_form,
            json!({"max_deviation": worst, "kappa": kappa, "vertices": vs.len()}),
        ));
    }
    Ok((Artifact::new("skin", inputs(&[("mesh", &id)]), checks, embed(&s.to_json())), h))
}

pub fn axioms(ctx: &Ctx, mesh: &Path, skin: &Path, sweep: &[f64]) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let tol = &ctx.config.tolerances;
    let rep = verify_axioms(&h, &s, AxiomTolerances { lipschitz_slack: 0.0, scaling: tol.scaling })?;
    let mut checks = vec![
        Check::new(0, "s1_degeneracy", rep.s1_pass, ()),
        Check::new(3, "s4_lipschitz", rep.s4_pass, json!({"measured": rep.s4_lipschitz_constant})),
        Check::new(6, "s2_dominance_and_scaling", rep.s2_pass, json!({"residual": rep.s2_scaling_residual})),
        Check::new(6, "s5_naturality", rep.s5_pass, json!({"residual": rep.s5_scaling_residual})),
    ];
    let mut worst = 0.0f64;
    for lambda in [0.5, 2.0, 8.0] {
        let t = metric_skin_transform(&scaled(&h, lambda)?, s.alpha)?;
        let back: Vec<f64> = t.values.iter().map(|x| x * lambda).collect();
        worst = worst.max(relative_residual(&back, &s.values));
    }
    checks.push(Check::new(
        6,
        "scaling_anticommutation",
        worst <= tol.scaling,
        json!({"residual": worst, "lambdas": [0.5, 2.0, 8.0]}),
    ));

    let mut sweep_result = Value::Null;
    if !sweep.is_empty() {
        let mut alphas = sweep.to_vec();
        alphas.sort_by(f64::total_cmp);
        let fields: Vec<SkinField> = alphas.iter().map(|&a| metric_skin_transform(&h, a)).collect::<Result<_, _>>()?;
        let breaks: usize =
            fields.windows(2).map(|w| w[0].values.iter().zip(&w[1].values).filter(|(a, b)| a > b).count()).sum();
        checks.push(Check::new(5, "monotone_in_alpha", breaks == 0, json!({"violations": breaks})));
        if let (Some((_, low_vs)), Some((_, high_vs))) =
            (cone_interior(&h, alphas[0]), cone_interior(&h, *alphas.last().unwrap()))
        {
            let (lo, hi) = (&fields[0], fields.last().unwrap());
            let (a_lo, a_hi) = (alphas[0], *alphas.last().unwrap());
            let dist = dist_to_sigma(&h).values;
            let low = low_vs.iter().map(|&v| (lo.values[v] - h.a_norm[v]).abs() / h.a_norm[v]).fold(0.0, f64::max);
            let high = high_vs.iter().map(|&v| (hi.values[v] * dist[v] / a_hi - 1.0).abs()).fold(0.0, f64::max);
            checks.push(Check::new(
                5,
                "small_alpha_limit",
                low <= tol.closed_form,
                json!({"alpha": a_lo, "max_deviation": low}),
            ));
            checks.push(Check::new(
                5,
                "large_alpha_limit",
                high <= tol.closed_form,
                json!({"alpha": a_hi, "max_deviation": high}),
            ));
        }
        sweep_result = json!({"alphas": alphas, "max_value": fields.iter().map(|f| f.values.iter().cloned().fold(0.0, f64::max)).collect::<Vec<_>>()});
    }
    let result = json!({"report": rep, "sweep": sweep_result});
    Ok(Artifact::new("axioms", inputs(&[("mesh", &mesh_id), ("skin", &skin_id)]), checks, result))
}

pub fn cover(ctx: &Ctx, mesh: &Path, skin: &Path, xi: f64, strict: bool) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let bound = ctx.config.tolerances.family_bound;
    let mode = if strict { XiMode::Strict } else { XiMode::Relaxed { xi0: 0.5 } };
    let config = CoverConfig { mode, family_bound: bound };
    let c = build_skin_cover(&h, &s, xi, config)?;
    let check = check_cover(&h, &s, &c);
    let again = build_skin_cover(&h, &s, xi, config)?;
    let rho1 = covering_number_stats(&h, &c, 1.0)?.into_iter().max().unwrap_or(0);
    let checks = vec![
        Check::new(
            7,
            "invariants",
            check.ok(),
            json!({
                "uncovered": check.uncovered.len(),
                "family_overlaps": check.family_overlaps.len(),
                "center_inclusions": check.center_inclusions.len(),
                "theta_mismatches": check.theta_mismatches,
            }),
        ),
        Check::new(
            7,
            "family_bound",
            c.family_count() <= bound && rho1 <= bound,
            json!({
                "families": c.family_count(), "covering_max": rho1, "bound": bound,
            }),
        ),
        Check::new(7, "stable", again == c, ()),
    ];
    Ok(Artifact::new("cover", inputs(&[("mesh", &mesh_id), ("skin", &skin_id)]), checks, embed(&c.to_json())))
}

pub fn qt(ctx: &Ctx, mesh: &Path, skin: &Path, cover: &Path, tau: f64, epsilon: Option<f64>) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let Loaded { value: c, id: cover_id } = load_cover(cover, &h)?;
    let ids = inputs(&[("mesh", &mesh_id), ("skin", &skin_id), ("cover", &cover_id)]);
    let mut config =
        QtConfig { tau_target: tau, family_bound: ctx.config.tolerances.family_bound, ..QtConfig::default() };
    if let Some(e) = epsilon {
        config.epsilon = e;
    }
    let (moved, rep) = match qt_perturb(&h, &s, &c, config) {
        Ok(r) => r,
        Err(e @ skinlab::Error::NoAdmissibleMove { .. }) => {
            let check = Check::new(8, "qt_margin", false, json!({"error": e.to_string()}));
            return Ok(Artifact::new("qt", ids, vec![check], Value::Null));
        }
        Err(e) => return Err(e.into()),
    };
    let margin = moved.qt_margin.unwrap_or(0.0);
    let scan = verify_qt(&h, &moved, margin);
    let min_margin = ctx.config.tolerances.qt_margin;
    let checks = vec![
        Check::new(
            8,
            "qt_margin",
            rep.pass && margin >= min_margin && scan.violations == 0,
            json!({
                "margin": margin, "required": min_margin, "rescan": scan, "perturbation": rep,
            }),
        ),
        Check::new(7, "invariants_after_perturbation", check_cover(&h, &s, &moved).ok(), ()),
    ];
    Ok(Artifact::new("qt", ids, checks, embed(&moved.to_json())))
}

pub fn smooth(mesh: &Path, skin: &Path, cover: &Path) -> Result<(Artifact, DiscreteHypersurface)> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let Loaded { value: c, id: cover_id } = load_cover(cover, &h)?;
    let (field, rep) = whitney_smooth(&h, &s, &c)?;
    let rho2 = covering_number_stats(&h, &c, 2.0)?.into_iter().max().unwrap_or(0) as f64;
    let grad = h
        .edges
        .iter()
        .filter(|&&(u, v, _)| !h.is_outer(u) && !h.is_outer(v))
        .map(|&(u, v, l)| (field.delta[u] - field.delta[v]).abs() / l)
        .fold(0.0, f64::max);
    let checks = vec![
        Check::new(
            9,
            "sandwich",
            rep.c1 > 0.0 && rep.c1 <= rep.c2 && rep.c2.is_finite() && rep.c2 / rep.c1 <= rho2,
            json!({"report": rep, "ratio": rep.c2 / rep.c1, "covering_max": rho2}),
        ),
        Check::new(9, "gradient", grad <= rep.c3 * (1.0 + 1e-12), json!({"recomputed": grad, "c3": rep.c3})),
    ];
    let ids = inputs(&[("mesh", &mesh_id), ("skin", &skin_id), ("cover", &cover_id)]);
    Ok((Artifact::new("smooth", ids, checks, embed(&field.to_json())), h))
}

pub enum Methods {
    Pipeline,
    Search,
    Both,
}

pub struct CurveRequest {
    pub pairs: Vec<(usize, usize)>,
    pub methods: Methods,
    pub blow_up: Vec<f64>,
    pub proxy_pairs: usize,
}

pub fn curve(ctx: &Ctx, mesh: &Path, skin: &Path, pair_count: Option<usize>, req: CurveRequest) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let tol = &ctx.config.tolerances;
    let pairs = if req.pairs.is_empty() {
        deterministic_pairs(&h, pair_count.unwrap_or(ctx.config.budgets.curve_pairs))
    } else {
        req.pairs
    };
    let methods: &[CurveMethod] = match req.methods {
        Methods::Pipeline => &[CurveMethod::Pipeline],
        Methods::Search => &[CurveMethod::ConstrainedSearch],
        Methods::Both => &[CurveMethod::Pipeline, CurveMethod::ConstrainedSearch],
    };
    let mut certificates = Vec::new();
    let mut excess = f64::NEG_INFINITY;
    for &(p, q) in &pairs {
        let certs: Vec<_> = methods.iter().map(|&m| skin_uniform_curve(&h, &s, p, q, m)).collect::<Result<_, _>>()?;
        if certs.len() == 2 {
            excess = excess.max(certs[1].c - certs[0].c);
        }
        for c in certs {
            certificates.push(json!({
                "p": c.p, "q": c.q, "method": c.method, "d": c.length / c.c_quasi, "length": c.length,
                "c_quasi": c.c_quasi, "c_cone": c.c_cone, "c": c.c, "path": c.path,
            }));
        }
    }
    let infinite = certificates.iter().filter(|c| !c["c"].is_f64()).count();
    let mut checks = vec![Check::new(
        11,
        "finite_certificates",
        infinite == 0 && !pairs.is_empty(),
        json!({
            "pairs": pairs.len(), "non_finite": infinite,
        }),
    )];
    if methods.len() == 2 {
        checks.push(Check::new(11, "search_not_worse", excess <= tol.search_slack, json!({"max_excess": excess})));
    }
    let mut blow_up = Value::Null;
    if !req.blow_up.is_empty() {
        let rep = blow_up_invariance_check(&h, &s, &req.blow_up, &pairs, methods[0])?;
        checks.push(Check::new(
            11,
            "blow_up_invariance",
            rep.max_deviation <= tol.blow_up,
            json!({
                "max_deviation": rep.max_deviation, "lambdas": rep.lambdas, "link_c": rep.link_c,
            }),
        ));
        blow_up = json!({"max_deviation": rep.max_deviation, "link_c": rep.link_c});
    }
    if req.proxy_pairs > 0 && h.is_singular() {
        let singular = proxy_pairs(&h, req.proxy_pairs);
        let ok = singular
            .iter()
            .filter(|&&(p, q)| {
                skin_uniform_curve(&h, &s, p, q, CurveMethod::Pipeline)
                    .map(|c| c.c.is_finite() && c.path[1..c.path.len() - 1].iter().all(|&v| !h.is_proxy(v)))
                    .unwrap_or(false)
            })
            .count();
        checks.push(Check::new(
            11,
            "singular_endpoints",
            ok == singular.len(),
            json!({"pairs": singular.len(), "ok": ok}),
        ));
    }
    let result = json!({"certificates": certificates, "blow_up": blow_up});
    Ok(Artifact::new("curve", inputs(&[("mesh", &mesh_id), ("skin", &skin_id)]), checks, result))
}

pub fn domain(
    ctx: &Ctx,
    mesh: &Path,
    skin: &Path,
    cover: &Path,
    levels: &[f64],
    link_budget: usize,
    pair_budget: usize,
) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let Loaded { value: c, id: cover_id } = load_cover(cover, &h)?;
    if levels.is_empty() {
        bail!("no domain levels given");
    }
    let mut checks = Vec::new();
    let mut results = Vec::new();
    let mut kappas = Vec::new();
    for &a in levels {
        let link = build_link_space(&h, &s, a, link_budget)?;
        let mut d = bubbled_hull(&h, &s, &c, &link)?;
        let rep = verify_domain(&h, &s, &mut d, pair_budget)?;
        checks.push(Check::new(
            12,
            &format!("domain_a={a}"),
            rep.pass && rep.iota < 1.0 && rep.kappa.is_finite(),
            &rep,
        ));
        kappas.push(rep.kappa);
        results.push(json!({
            "a": a, "members": d.members.len(), "centers": d.centers.len(), "link_curves": d.link_curves,
            "worst_c": d.worst_c, "alpha_prime": d.alpha_prime, "report": rep,
        }));
    }
    let spread = kappas.iter().cloned().fold(0.0, f64::max) / kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    if levels.len() > 1 {
        let limit = ctx.config.tolerances.kappa_spread;
        checks.push(Check::new(12, "kappa_spread", spread <= limit, json!({"spread": spread, "limit": limit})));
    }
    let ids = inputs(&[("mesh", &mesh_id), ("skin", &skin_id), ("cover", &cover_id)]);
    Ok(Artifact::new("domain", ids, checks, json!({"levels": results, "kappa_spread": spread})))
}

pub struct HardyRequest {
    pub bands: Vec<f64>,
    pub outer: OuterCondition,
    pub refinements: Vec<usize>,
    pub dist_variant: bool,
    pub solver: SolverConfig,
}

pub fn hardy(ctx: &Ctx, mesh: &Path, skin: &Path, req: HardyRequest) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let Loaded { value: s, id: skin_id } = load_skin(skin, &h)?;
    let tol = &ctx.config.tolerances;
    let mut bands = req.bands.clone();
    if bands.is_empty() {
        bands.push(0.0);
    }
    bands.sort_by(f64::total_cmp);
    let mut sweep = Vec::new();
    let mut base = None;
    for &band in &bands {
        let forms = assemble_forms(&h, &s, band, req.outer)?;
        let pair = hardy_constant(&forms, req.solver)?;
        sweep.push(json!({
            "band": band, "lambda": pair.report.lambda_min, "iterations": pair.report.iterations,
            "residual": pair.report.residual, "free_vertices": pair.report.free_vertices,
        }));
        if base.is_none() {
            base = Some((forms, pair));
        }
    }
    let (forms, pair) = base.expect("at least one band");
    let lambda = pair.report.lambda_min;
    let lambdas: Vec<f64> = sweep.iter().map(|b| b["lambda"].as_f64().unwrap_or(f64::NAN)).collect();
    let mut checks = vec![Check::new(10, "positive", lambda > 0.0, json!({"lambda_min": lambda}))];
    if lambdas.len() > 1 {
        let monotone = lambdas.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
        checks.push(Check::new(10, "band_monotone", monotone, json!({"bands": bands, "lambdas": lambdas})));
    }

    let big = scaled(&h, 2.0)?;
    let big_skin = metric_skin_transform(&big, s.alpha)?;
    let big_forms = assemble_forms(&big, &big_skin, bands[0] * 2.0, req.outer)?;
    let q = forms.rayleigh(&pair.vector);
    let scale_residual = (big_forms.rayleigh(&pair.vector) - q).abs() / q;
    checks.push(Check::new(
        10,
        "quotient_scale_invariance",
        scale_residual <= tol.scaling,
        json!({"residual": scale_residual}),
    ));

    let mut refinements = Vec::new();
    if let (Some(layout), skinlab::surface::SurfaceKind::LawsonCone { p, q }) = (&h.layout, h.kind) {
        let rings = &layout.rings;
        refinements.push(json!({"refinement": rings.len(), "lambda": lambda}));
        let mut drift = 0.0f64;
        for &res in &req.refinements {
            let g = skinlab::surface::generate_lawson_cone(
                p,
                q,
                rings[0],
                rings[rings.len() - 1],
                layout.angular_res,
                res,
            )?;
            let gs = metric_skin_transform(&g, s.alpha)?;
            let l = hardy_constant(&assemble_forms(&g, &gs, bands[0], req.outer)?, req.solver)?.report.lambda_min;
            drift = drift.max((l - lambda).abs() / lambda);
            refinements.push(json!({"refinement": res, "lambda": l}));
        }
        if !req.refinements.is_empty() {
            checks.push(Check::new(
                10,
                "refinement_drift",
                drift <= tol.hardy_drift,
                json!({"drift": drift, "limit": tol.hardy_drift}),
            ));
        }
    }

    let mut dist_variant = Value::Null;
    if req.dist_variant {
        let k = hardy_dist_variant(&h, bands[0], req.outer, req.solver)?.report.lambda_min;
        let dist = dist_to_sigma(&h).values;
        let m = (0..h.vertex_count())
            .filter(|&v| forms.role[v] == skinlab::spectral::Role::Free)
            .map(|v| s.values[v] * dist[v])
            .fold(f64::INFINITY, f64::min);
        let bound = lambda * m * m;
        checks.push(Check::new(
            10,
            "dist_variant_consistency",
            k > 0.0 && k >= bound * (1.0 - 1e-8),
            json!({
                "k_star": k, "bound": bound, "min_a_dist": m,
            }),
        ));
        dist_variant = json!({"k_star": k, "bound": bound});
    }
    let result = json!({
        "outer": req.outer, "bands": sweep, "refinements": refinements,
        "quotient_scale_residual": scale_residual, "dist_variant": dist_variant, "report": pair.report,
    });
    Ok(Artifact::new("hardy", inputs(&[("mesh", &mesh_id), ("skin", &skin_id)]), checks, result))
}

pub fn metric(ctx: &Ctx, mesh: &Path, skin: Option<&Path>, kinds: &[MetricKind], count: usize) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let mut ids = vec![("mesh", mesh_id.clone())];
    let s = match skin {
        Some(p) => {
            let l = load_skin(p, &h)?;
            ids.push(("skin", l.id));
            Some(l.value)
        }
        None => None,
    };
    let tol = &ctx.config.tolerances;
    let pairs = deterministic_pairs(&h, count);
    let mut checks = Vec::new();
    let mut d_skin = None;
    let mut d_qh = None;
    for kind in kinds {
        match kind {
            MetricKind::Skin => {
                let s = s.as_ref().context("the skin metric needs --skin")?;
                let d = skin_metric_distances(&h, s, &pairs)?;
                let big = scaled(&h, 2.0)?;
                let d2 = skin_metric_distances(&big, &metric_skin_transform(&big, s.alpha)?, &pairs)?;
                let r = relative_residual(&d, &d2);
                checks.push(Check::new(13, "skin_metric_scale_invariance", r <= tol.scaling, json!({"residual": r})));
                d_skin = Some(d);
            }
            MetricKind::QuasiHyperbolic => {
                d_qh = Some(quasi_hyperbolic_distances(&h, &pairs)?);
                if let Some(layout) = &h.layout {
                    let near = |r: f64| {
                        (0..layout.rings.len() - 1)
                            .min_by(|&a, &b| {
                                (layout.rings[a] / r).ln().abs().total_cmp(&(layout.rings[b] / r).ln().abs())
                            })
                            .unwrap_or(0)
                    };
                    let top_r = layout.rings[layout.rings.len() / 2].max(layout.rings[layout.rings.len() - 2] / 2.0);
                    let top = near(top_r);
                    let radial: Vec<(usize, usize)> = (1..=5)
                        .map(|j| (top * layout.link_size, near(top_r / f64::powi(2.0, j)) * layout.link_size))
                        .filter(|(u, v)| u != v)
                        .collect();
                    let k = quasi_hyperbolic_distances(&h, &radial)?;
                    let per_halving: Vec<f64> =
                        radial.iter().zip(&k).map(|(&(u, v), &d)| d / (h.radius(u) / h.radius(v)).log2()).collect();
                    let worst =
                        per_halving.iter().map(|x| (x / std::f64::consts::LN_2 - 1.0).abs()).fold(0.0, f64::max);
                    checks.push(Check::new(
                        13,
                        "dyadic_growth",
                        worst <= tol.dyadic && !radial.is_empty(),
                        json!({
                            "per_halving": per_halving, "max_deviation": worst,
                        }),
                    ));
                }
            }
        }
    }
    if let (Some(d), Some(k), Some(s)) = (&d_skin, &d_qh, &s) {
        let breaks = d.iter().zip(k).filter(|(d, k)| **d < s.alpha * **k * (1.0 - 1e-12)).count();
        checks.push(Check::new(13, "weight_dominance", breaks == 0, json!({"violations": breaks, "pairs": d.len()})));
    }
    let result = json!({"pairs": pairs, "skin": d_skin, "quasi_hyperbolic": d_qh});
    let ids: Vec<(&str, &str)> = ids.iter().map(|(k, v)| (*k, v.as_str())).collect();
    Ok(Artifact::new("metric", inputs(&ids), checks, result))
}

pub fn hyperbolicity(
    ctx: &Ctx,
    mesh: &Path,
    skin: Option<&Path>,
    kind: MetricKind,
    samples: usize,
    budget: usize,
) -> Result<Artifact> {
    let Loaded { value: h, id: mesh_id } = load_mesh(mesh)?;
    let mut ids = vec![("mesh", mesh_id.clone())];
    let s = match skin {
        Some(p) => {
            let l = load_skin(p, &h)?;
            ids.push(("skin", l.id));
            Some(l.value)
        }
        None => None,
    };
    if kind == MetricKind::Skin && s.is_none() {
        bail!("the skin metric needs --skin");
    }
    let pts = sample_vertices(&h, samples);
    let rep = four_point_delta(&metric_matrix(&h, s.as_ref(), kind, &pts)?, budget)?;
    let big = scaled(&h, 2.0)?;
    let big_skin = s.as_ref().map(|s| metric_skin_transform(&big, s.alpha)).transpose()?;
    let rep2 = four_point_delta(&metric_matrix(&big, big_skin.as_ref(), kind, &pts)?, budget)?;
    let r = (rep.delta - rep2.delta).abs() / rep.delta.max(f64::MIN_POSITIVE);
    let tol = ctx.config.tolerances.scaling;
    let checks = vec![Check::new(13, "hyperbolicity_scale_invariance", r <= tol, json!({"residual": r}))];
    let ids: Vec<(&str, &str)> = ids.iter().map(|(k, v)| (*k, v.as_str())).collect();
    Ok(Artifact::new("hyperbolicity", inputs(&ids), checks, json!({"samples": pts, "report": rep})))
}

const CRITERIA: [&str; 14] = [
    "oracle equivalence",
    "regularity-scale identity",
    "Lipschitz axiom",
    "closed-form cone value",
    "interpolation limits",
    "scaling anticommutation",
    "cover invariants",
    "QT certification",
    "Whitney smoothing",
    "Hardy tightness",
    "uniform curves",
    "domains",
    "metrics",
    "connectivity",
];

/// Aggregates every artifact in `dir` into one check per acceptance criterion.
pub fn report(dir: &Path, require_all: bool, skip: &Path) -> Result<Artifact> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p != skip)
        .collect();
    files.sort();
    let mut ids = BTreeMap::new();
    let mut per: BTreeMap<u8, Vec<Value>> = BTreeMap::new();
    let mut pass: BTreeMap<u8, bool> = BTreeMap::new();
    for f in &files {
        let Ok((a, id)) = read(f) else { continue };
        if a.kind == "report" {
            continue;
        }
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        for c in a.checks.iter().filter(|c| c.criterion > 0) {
            per.entry(c.criterion).or_default().push(json!({"artifact": name, "check": c.name, "pass": c.pass}));
            *pass.entry(c.criterion).or_insert(true) &= c.pass;
        }
        ids.insert(name, id);
    }
    let mut checks = Vec::new();
    let mut missing = Vec::new();
    for (i, title) in CRITERIA.iter().enumerate() {
        let k = i as u8 + 1;
        match pass.get(&k) {
            Some(&ok) => checks.push(Check::new(k, title, ok, &per[&k])),
            None => {
                missing.push(k);
                if require_all {
                    checks.push(Check::new(k, title, false, json!("no artifact covers this criterion")));
                }
            }
        }
    }
    let table: Vec<Value> = CRITERIA
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let k = i as u8 + 1;
            let status = match pass.get(&k) {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "missing",
            };
            json!({"criterion": k, "title": t, "status": status})
        })
        .collect();
    Ok(Artifact::new("report", ids, checks, json!({"criteria": table, "missing": missing})))
}
