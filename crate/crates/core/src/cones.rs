//! Cone geometry in the plane for hidden regular variation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{MirgError, Result};
use crate::evt::Norm;
use crate::graph::DegreeMatrix;

/// A closed cone in the nonnegative quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeSpec {
    /// `{x1 = x2 >= 0}`
    DiagonalRay,
    /// `{a x1 <= x2 <= b x1, x1 >= 0}` with `0 < a < b`.
    Wedge { lower: f64, upper: f64 },
    /// `{0}`; distance is the plain norm.
    Origin,
}

impl ConeSpec {
    pub fn wedge(lower: f64, upper: f64) -> Result<Self> {
        let c = ConeSpec::Wedge { lower, upper };
        c.validate()?;
        Ok(c)
    }

    /// The wedge between slopes 2/3 and 3/2 on which the mixture weights
    /// concentrate.
    pub fn mixture_wedge() -> Self {
        ConeSpec::Wedge {
            lower: 2.0 / 3.0,
            upper: 1.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ConeSpec::Wedge { lower, upper } = *self {
            if !(lower > 0.0 && upper.is_finite() && lower < upper) {
                return Err(MirgError::param(format!(
                    "wedge slopes must satisfy 0 < a < b, got a = {lower}, b = {upper}"
                )));
            }
        }
        Ok(())
    }
}

/// Generalized polar coordinates relative to a cone.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarPoint {
    /// Distance to the cone.
    pub r: f64,
    /// `x / r`, a point at unit distance from the cone.
    pub angle: Vec<f64>,
}

/// Euclidean distance from `x` to the ray `{t (1, s) : t >= 0}`.
fn ray_distance(x: [f64; 2], s: f64) -> f64 {
    let norm = (1.0 + s * s).sqrt();
    let t = (x[0] + s * x[1]) / norm;
    if t < 0.0 {
        x[0].hypot(x[1])
    } else {
        (x[1] - s * x[0]).abs() / norm
    }
}

/// Distance from any point of the plane to the wedge cone.
fn wedge_distance(x: [f64; 2], a: f64, b: f64) -> f64 {
    if x[0] >= 0.0 && a * x[0] <= x[1] && x[1] <= b * x[0] {
        return 0.0;
    }
    ray_distance(x, a).min(ray_distance(x, b))
}

fn check_point(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(MirgError::param(format!(
            "point must be finite and nonnegative, got {x:?}"
        )));
    }
    Ok(())
}

fn planar(x: &[f64]) -> Result<[f64; 2]> {
    x.try_into()
        .map_err(|_| MirgError::Shape(format!("planar cone needs a 2-vector, got length {}", x.len())))
}

/// `d_p(x, C)`. Wedge and diagonal cones support only `p = 2`.
pub fn distance_to_cone(x: &[f64], cone: &ConeSpec, p: Norm) -> Result<f64> {
    check_point(x)?;
    cone.validate()?;
    match *cone {
        ConeSpec::Origin => Ok(p.eval(x.iter().copied())),
        _ if p != Norm::P(2.0) => Err(MirgError::Unsupported(format!(
            "distance to {cone:?} is only implemented for p = 2, got p = {p}"
        ))),
        ConeSpec::DiagonalRay => {
            let x = planar(x)?;
            Ok((x[0] - x[1]).abs() / std::f64::consts::SQRT_2)
        }
        ConeSpec::Wedge { lower, upper } => Ok(wedge_distance(planar(x)?, lower, upper)),
    }
}

/// `(d_p(x, C), x / d_p(x, C))`.
pub fn gpolar(x: &[f64], cone: &ConeSpec, p: Norm) -> Result<PolarPoint> {
    let r = distance_to_cone(x, cone, p)?;
    if r <= 0.0 {
        return Err(MirgError::OnCone(format!("{x:?} lies on {cone:?}")));
    }
    Ok(PolarPoint {
        r,
        angle: x.iter().map(|v| v / r).collect(),
    })
}

/// Per-node pairs `xi = d2 - slope d1`, `eta = d2 / d1` from a two-layer
/// degree matrix. `eta` is `+inf` when `d1 = 0 < d2`; rows with
/// `d1 = d2 = 0` are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct XiEta {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// Node index of each retained pair.
    pub nodes: Vec<usize>,
    pub excluded: usize,
}

pub fn xi_eta(d: &DegreeMatrix, slope: f64) -> Result<XiEta> {
    if d.layers() != 2 {
        return Err(MirgError::Shape(format!(
            "xi/eta needs exactly 2 layers, got {}",
            d.layers()
        )));
    }
    if !slope.is_finite() {
        return Err(MirgError::param(format!("slope must be finite, got {slope}")));
    }
    let mut out = XiEta {
        xi: Vec::with_capacity(d.n()),
        eta: Vec::with_capacity(d.n()),
        nodes: Vec::with_capacity(d.n()),
        excluded: 0,
    };
    for (i, row) in d.rows().enumerate() {
        let (d1, d2) = (row[0] as f64, row[1] as f64);
        if row[0] == 0 && row[1] == 0 {
            out.excluded += 1;
            continue;
        }
        out.xi.push(d2 - slope * d1);
        out.eta.push(if row[0] == 0 { f64::INFINITY } else { d2 / d1 });
        out.nodes.push(i);
    }
    Ok(out)
}

/// `2^(1 - alpha) sqrt(pi) / Gamma(alpha + 1/2)`, the reciprocal of
/// `int_0^inf z^(2 alpha) phi(z) dz`.
pub fn half_moment_constant(alpha: f64) -> f64 {
    2f64.powf(1.0 - alpha) * std::f64::consts::PI.sqrt() / gamma(alpha + 0.5)
}

/// `(sqrt(pi) / Gamma(alpha + 1/2))^(1 / (2 alpha))`, the scale applied to
/// the diagonal distance of the full-dependence degrees.
pub fn example31_scale(alpha: f64) -> f64 {
    (std::f64::consts::PI.sqrt() / gamma(alpha + 0.5)).powf(1.0 / (2.0 * alpha))
}

const LIMIT_ABS_TOL: f64 = 1e-10;

/// `u^(-2 alpha) * C(alpha) * int_0^(1/v) z^(2 alpha) phi(z) dz` with `C`
/// from [`half_moment_constant`]; `v = 0` integrates over `(0, inf)`.
pub fn example31_limit(u: f64, v: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(MirgError::param(format!("alpha must be positive, got {alpha}")));
    }
    if !(u > 0.0) {
        return Err(MirgError::Range(format!("limit diverges at u = {u}; need u > 0")));
    }
    if !(v >= 0.0) {
        return Err(MirgError::param(format!("v must be nonnegative, got {v}")));
    }
    // phi is below 1e-300 past this point for any moderate alpha
    let cap = (2.0 * alpha).sqrt() + 40.0;
    let upper = if v == 0.0 { cap } else { (1.0 / v).min(cap) };
    if upper == 0.0 {
        return Ok(0.0);
    }
    let f = |z: f64| {
        if z <= 0.0 {
            0.0
        } else {
            (2.0 * alpha * z.ln() - 0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
    };
    // split at the mode of the integrand
    let mode = (2.0 * alpha).sqrt().min(upper);
    let tol = LIMIT_ABS_TOL / 4.0;
    let mut integral = quadrature::integrate(f, 0.0, mode, tol).integral;
    if upper > mode {
        integral += quadrature::integrate(f, mode, upper, tol).integral;
    }
    Ok(u.powf(-2.0 * alpha) * half_moment_constant(alpha) * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;
    use proptest::prelude::*;
    use statrs::function::gamma::gamma_lr;

    const L2: Norm = Norm::P(2.0);

    #[test]
    fn distance_examples() {
        let w = ConeSpec::mixture_wedge();
        let d = distance_to_cone(&[0.0, 1.0], &w, L2).unwrap();
        assert!((d - 1.0 / 3.25f64.sqrt()).abs() < 1e-15);
        assert!((d - 0.554700).abs() < 1e-6);
        assert_eq!(distance_to_cone(&[1.0, 1.0], &w, L2).unwrap(), 0.0);
        let below = distance_to_cone(&[1.0, 0.0], &w, L2).unwrap();
        assert!((below - (2.0 / 3.0) / (1.0 + 4.0 / 9.0f64).sqrt()).abs() < 1e-15);
        let diag = distance_to_cone(&[3.0, 1.0], &ConeSpec::DiagonalRay, L2).unwrap();
        assert!((diag - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(distance_to_cone(&[3.0, 4.0], &ConeSpec::Origin, Norm::P(1.0)).unwrap(), 7.0);
        assert_eq!(distance_to_cone(&[0.0, 0.0], &w, L2).unwrap(), 0.0);
    }

    #[test]
    fn distance_errors() {
        let w = ConeSpec::mixture_wedge();
        assert!(matches!(
            distance_to_cone(&[0.0, 1.0], &w, Norm::P(1.0)),
            Err(MirgError::Unsupported(_))
        ));
        assert!(matches!(
            distance_to_cone(&[0.0, 1.0], &ConeSpec::DiagonalRay, Norm::Inf),
            Err(MirgError::Unsupported(_))
        ));
        assert!(distance_to_cone(&[-1.0, 1.0], &w, L2).is_err());
        assert!(distance_to_cone(&[1.0, 1.0, 1.0], &w, L2).is_err());
        assert!(ConeSpec::wedge(1.5, 1.0).is_err());
        assert!(ConeSpec::wedge(0.0, 1.0).is_err());
    }

    #[test]
    fn corner_case_uses_vertex() {
        // foot of the perpendicular onto the upper ray falls behind the
        // vertex: nearest cone point is the origin
        let d = wedge_distance([-1.0, -0.2], 2.0 / 3.0, 1.5);
        assert!((d - 1.04f64.sqrt()).abs() < 1e-15);
        assert_eq!(wedge_distance([2.0, 2.0], 2.0 / 3.0, 1.5), 0.0);
    }

    /// Minimum distance to `n` evenly spaced points on each boundary ray.
    fn brute_force(x: [f64; 2], a: f64, b: f64, reach: f64, n: usize) -> f64 {
        let mut best = f64::INFINITY;
        for s in [a, b] {
            let norm = (1.0 + s * s).sqrt();
            let dir = [1.0 / norm, s / norm];
            for k in 0..n {
                let t = reach * k as f64 / (n - 1) as f64;
                let d = (x[0] - t * dir[0]).hypot(x[1] - t * dir[1]);
                best = best.min(d);
            }
        }
        best
    }

    #[test]
    fn wedge_matches_brute_force() {
        let (a, b) = (2.0 / 3.0, 1.5);
        let mut rng = RngStream::new(31, 0);
        let mut checked = 0;
        while checked < 100 {
            let x = [8.0 * rng.unit() - 3.0, 8.0 * rng.unit() - 3.0];
            let inside = x[0] > 0.0 && (a..=b).contains(&(x[1] / x[0]));
            let fast = wedge_distance(x, a, b);
            if inside {
                assert_eq!(fast, 0.0);
                continue;
            }
            // grid error is about h^2 / (8 d); keep d away from zero
            if fast < 0.1 {
                continue;
            }
            let slow = brute_force(x, a, b, 10.0, 500_000);
            assert!((fast - slow).abs() < 1e-9, "{x:?}: {fast} vs {slow}");
            checked += 1;
        }
    }

    #[test]
    fn gpolar_examples() {
        let s2 = 2f64.sqrt();
        let pp = gpolar(&[0.0, s2], &ConeSpec::DiagonalRay, L2).unwrap();
        assert!((pp.r - 1.0).abs() < 1e-15);
        assert!((pp.angle[1] - s2).abs() < 1e-15);
        let w = ConeSpec::mixture_wedge();
        let pp = gpolar(&[0.0, 2.0], &w, L2).unwrap();
        assert!((pp.r - 2.0 / 3.25f64.sqrt()).abs() < 1e-15);
        assert!((distance_to_cone(&pp.angle, &w, L2).unwrap() - 1.0).abs() < 1e-12);
        let pp = gpolar(&[3.0, 4.0], &ConeSpec::Origin, L2).unwrap();
        assert_eq!(pp.r, 5.0);
        assert!((pp.angle[0] - 0.6).abs() < 1e-15 && (pp.angle[1] - 0.8).abs() < 1e-15);
        assert!(matches!(gpolar(&[1.0, 1.0], &w, L2), Err(MirgError::OnCone(_))));
    }

    #[test]
    fn gpolar_round_trip() {
        let mut rng = RngStream::new(5, 5);
        let cones = [ConeSpec::mixture_wedge(), ConeSpec::DiagonalRay, ConeSpec::Origin];
        let mut done = 0;
        while done < 10_000 {
            let x = [100.0 * rng.unit(), 100.0 * rng.unit()];
            let cone = &cones[done % 3];
            let Ok(pp) = gpolar(&x, cone, L2) else { continue };
            for (a, v) in pp.angle.iter().zip(x) {
                assert!((a * pp.r - v).abs() <= 1e-12 * v.max(1e-300));
            }
            assert!((distance_to_cone(&pp.angle, cone, L2).unwrap() - 1.0).abs() < 1e-9);
            done += 1;
        }
    }

    #[test]
    fn xi_eta_examples() {
        let d = DegreeMatrix::new(4, 2, vec![2, 6, 0, 4, 0, 0, 3, 0]).unwrap();
        let t = xi_eta(&d, 1.5).unwrap();
        assert_eq!(t.xi, vec![3.0, 4.0, -4.5]);
        assert_eq!(t.eta, vec![3.0, f64::INFINITY, 0.0]);
        assert_eq!(t.nodes, vec![0, 1, 3]);
        assert_eq!(t.excluded, 1);
        assert!(xi_eta(&DegreeMatrix::zeros(2, 3), 1.5).is_err());
    }

    #[test]
    fn limit_constant_and_normalization() {
        assert!((half_moment_constant(1.0) - 2.0).abs() < 1e-14);
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            for u in [0.5, 1.0, 3.0] {
                let v = example31_limit(u, 0.0, alpha).unwrap();
                assert!((v * u.powf(2.0 * alpha) - 1.0).abs() < 1e-8, "alpha {alpha} u {u}: {v}");
            }
        }
        assert!(example31_limit(1.0, 1e9, 1.0).unwrap() < 1e-20);
        assert_eq!(example31_limit(1.0, f64::INFINITY, 1.0).unwrap(), 0.0);
        assert!(matches!(example31_limit(0.0, 0.0, 1.0), Err(MirgError::Range(_))));
        assert!(example31_limit(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn limit_matches_incomplete_gamma() {
        // with s = z^2 / 2 the normalized integral is P(alpha + 1/2, 1 / (2 v^2))
        for alpha in [0.3, 1.0, 1.7, 2.5] {
            for v in [0.1, 0.5, 1.0, 2.0, 7.0] {
                for u in [0.7, 1.0, 2.0] {
                    let got = example31_limit(u, v, alpha).unwrap();
                    let want = u.powf(-2.0 * alpha) * gamma_lr(alpha + 0.5, 0.5 / (v * v));
                    assert!((got - want).abs() < 1e-9, "({u},{v},{alpha}): {got} vs {want}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn distance_is_homogeneous(x1 in 0.0f64..100.0, x2 in 0.0f64..100.0, t in 1e-3f64..1e3) {
            for cone in [ConeSpec::mixture_wedge(), ConeSpec::DiagonalRay, ConeSpec::Origin] {
                let d = distance_to_cone(&[x1, x2], &cone, L2).unwrap();
                let dt = distance_to_cone(&[t * x1, t * x2], &cone, L2).unwrap();
                prop_assert!((dt - t * d).abs() <= 1e-12 * (t * d).max(1e-300) + 1e-300);
            }
        }
    }
}
