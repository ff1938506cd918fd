//! Finite-difference second fundamental form of parametrized hypersurfaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A twice differentiable local chart of a hypersurface `R^n -> R^{n+1}`.
pub trait Parametrization: Sync {
    /// Intrinsic dimension n.
    fn dim(&self) -> usize;
    fn eval(&self, u: &[f64]) -> Vec<f64>;
}

/// Affine hyperplane `x_{n+1} = 0` in R^{n+1}.
pub struct Plane {
    pub n: usize,
}

impl Parametrization for Plane {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let mut x = u.to_vec();
        x.push(0.0);
        x
    }
}

/// Point on the unit sphere S^k in hyperspherical angles (k angles, k+1 coordinates).
pub fn hyperspherical(angles: &[f64]) -> Vec<f64> {
    let k = angles.len();
    let mut x = vec![0.0; k + 1];
    let mut prod = 1.0;
    for i in 0..k {
        x[i] = prod * angles[i].cos();
        prod *= angles[i].sin();
    }
    x[k] = prod;
    x
}

/// Round sphere S^n of radius `r` in R^{n+1}.
pub struct Sphere {
    pub n: usize,
    pub r: f64,
}

impl Parametrization for Sphere {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        hyperspherical(u).into_iter().map(|c| self.r * c).collect()
    }
}

/// Cone over S^p(a) x S^q(b) in R^{p+q+2} with a² = p/(p+q), b² = q/(p+q).
/// Coordinates: radius, p angles on S^p, q angles on S^q.
pub struct LawsonConeChart {
    pub p: usize,
    pub q: usize,
}

impl LawsonConeChart {
    pub fn radii(&self) -> (f64, f64) {
        let s = (self.p + self.q) as f64;
        ((self.p as f64 / s).sqrt(), (self.q as f64 / s).sqrt())
    }
}

impl Parametrization for LawsonConeChart {
    fn dim(&self) -> usize {
        self.p + self.q + 1
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let (a, b) = self.radii();
        let r = u[0];
        let mut x: Vec<f64> = hyperspherical(&u[1..=self.p]).into_iter().map(|c| r * a * c).collect();
        x.extend(hyperspherical(&u[self.p + 1..]).into_iter().map(|c| r * b * c));
        x
    }
}

/// Catenoid `(cosh t cos θ, cosh t sin θ, t)`, coordinates (t, θ).
pub struct Catenoid;

impl Parametrization for Catenoid {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let (t, th) = (u[0], u[1]);
        vec![t.cosh() * th.cos(), t.cosh() * th.sin(), t]
    }
}

/// Generic interior evaluation point for a Lawson cone chart at radius `r`,
/// away from the coordinate singularities of the angle charts.
pub fn cone_chart_point(p: usize, q: usize, r: f64) -> Vec<f64> {
    let mut u = vec![r];
    u.extend((0..p + q).map(|i| 0.9 + 0.13 * i as f64));
    u
}

fn shift(u: &[f64], steps: &[(usize, f64)]) -> Vec<f64> {
    let mut v = u.to_vec();
    for &(i, s) in steps {
        v[i] += s;
    }
    v
}

/// |A| at `u` with one fixed step size `h`.
pub fn a_norm_with_step(param: &dyn Parametrization, u: &[f64], h: f64) -> Result<f64> {
    let n = param.dim();
    let x0 = param.eval(u);
    let m = x0.len();
    if m != n + 1 {
        return Err(Error::InvalidParameter(format!(
            "chart of dimension {n} maps into R^{m}, expected codimension one"
        )));
    }
    let mut jac = DMatrix::<f64>::zeros(m, n);
    for i in 0..n {
        let xp = param.eval(&shift(u, &[(i, h)]));
        let xm = param.eval(&shift(u, &[(i, -h)]));
        for k in 0..m {
            jac[(k, i)] = (xp[k] - xm[k]) / (2.0 * h);
        }
    }
    let mut second = vec![vec![DVector::<f64>::zeros(m); n]; n];
    for i in 0..n {
        for j in i..n {
            let d = if i == j {
                let xp = param.eval(&shift(u, &[(i, h)]));
                let xm = param.eval(&shift(u, &[(i, -h)]));
                DVector::from_iterator(m, (0..m).map(|k| (xp[k] - 2.0 * x0[k] + xm[k]) / (h * h)))
            } else {
                let pp = param.eval(&shift(u, &[(i, h), (j, h)]));
                let pm = param.eval(&shift(u, &[(i, h), (j, -h)]));
                let mp = param.eval(&shift(u, &[(i, -h), (j, h)]));
                let mm = param.eval(&shift(u, &[(i, -h), (j, -h)]));
                DVector::from_iterator(m, (0..m).map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h * h)))
            };
            second[i][j] = d.clone();
            second[j][i] = d;
        }
    }
    let g = jac.transpose() * &jac;
    let eig = g.clone().symmetric_eigen();
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond < 1e10) {
        return Err(Error::IllConditioned(cond));
    }
    let normal = unit_normal(&jac);
    let h2 = DMatrix::from_fn(n, n, |i, j| second[i][j].dot(&normal));
    let ginv = g.try_inverse().ok_or(Error::IllConditioned(cond))?;
    let shape = &ginv * h2;
    let sq = &shape * &shape;
    Ok(sq.trace().max(0.0).sqrt())
}

/// Unit vector orthogonal to the column span of `jac` (Gram-Schmidt completion).
fn unit_normal(jac: &DMatrix<f64>) -> DVector<f64> {
    let (m, n) = jac.shape();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = jac.column(i).clone_owned();
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let nv = v.norm();
        basis.push(v / nv);
    }
    let mut best = DVector::zeros(m);
    let mut best_norm = -1.0;
    for k in 0..m {
        let mut v = DVector::zeros(m);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        let nv = v.norm();
        if nv > best_norm {
            best_norm = nv;
            best = v / nv;
        }
    }
    best
}

/// Outcome of the step-size sweep.
#[derive(Debug, Clone, Copy)]
pub struct OracleValue {
    pub value: f64,
    pub step: f64,
    /// Difference between the two finest consistent steps, an error estimate.
    pub spread: f64,
}

/// |A| at `u`, sweeping the finite-difference step and Richardson-extrapolating
/// the most stable consecutive pair.
pub fn second_fundamental_oracle(param: &dyn Parametrization, u: &[f64]) -> Result<OracleValue> {
    let scale = u.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let steps: Vec<f64> = (0..6).map(|k| scale * 2e-2 / 2f64.powi(k)).collect();
    let vals = steps.iter().map(|&h| a_norm_with_step(param, u, h)).collect::<Result<Vec<f64>>>()?;
    let mut best = OracleValue { value: vals[0], step: steps[0], spread: f64::INFINITY };
    for k in 0..vals.len() - 1 {
        let spread = (vals[k + 1] - vals[k]).abs();
        if spread < best.spread {
            // Central differences are second order in h.
            let value = (4.0 * vals[k + 1] - vals[k]) / 3.0;
            best = OracleValue { value: value.max(0.0), step: steps[k + 1], spread };
        }
    }
    Ok(best)
}

/// κ(p,q) = r·|A| of the Lawson cone, measured at radius 1.
pub fn lawson_kappa(p: usize, q: usize) -> Result<f64> {
    let chart = LawsonConeChart { p, q };
    Ok(second_fundamental_oracle(&chart, &cone_chart_point(p, q, 1.0))?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_is_flat() {
        let v = second_fundamental_oracle(&Plane { n: 3 }, &[0.2, -0.4, 1.1]).unwrap();
        assert!(v.value < 1e-9, "{}", v.value);
    }

    #[test]
    fn sphere_gives_sqrt_n_over_r() {
        for (n, r) in [(2usize, 1.0), (3, 2.5), (5, 0.5)] {
            let u: Vec<f64> = (0..n).map(|i| 0.8 + 0.1 * i as f64).collect();
            let v = second_fundamental_oracle(&Sphere { n, r }, &u).unwrap();
            let want = (n as f64).sqrt() / r;
            assert!((v.value - want).abs() < 1e-6 * want, "n={n} r={r}: {} vs {want}", v.value);
        }
    }

    #[test]
    fn cone_curvature_scales_inversely_with_radius() {
        let chart = LawsonConeChart { p: 3, q: 3 };
        let a1 = second_fundamental_oracle(&chart, &cone_chart_point(3, 3, 1.0)).unwrap().value;
        let a3 = second_fundamental_oracle(&chart, &cone_chart_point(3, 3, 3.0)).unwrap().value;
        assert!((a1 - 3.0 * a3).abs() < 1e-6 * a1);
        // Principal curvatures ±sqrt(q/p), ±sqrt(p/q) on the link, so κ² = p + q.
        assert!((a1 - 6f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn degenerate_chart_is_rejected() {
        struct Folded;
        impl Parametrization for Folded {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, u: &[f64]) -> Vec<f64> {
                vec![u[0] + u[1], u[0] + u[1], 0.0]
            }
        }
        assert!(matches!(second_fundamental_oracle(&Folded, &[0.1, 0.2]), Err(Error::IllConditioned(_))));
    }
}
