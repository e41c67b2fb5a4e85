//! W-volume of conformal metric pairs on the torus and the closed-form
//! grafting layer.
//!
//! For a pair (g, e^{2u} g) the W-volume difference is the quadrature
//! W = -1/4 integral u (K_0 dA_0 + K_1 dA_1); on the torus the Euler
//! characteristic vanishes, which removes the scaling correction terms
//! and makes the cocycle and scaling laws exact identities. The grafting
//! layer carries the negative-characteristic content as closed-form
//! algebra in (chi, L, |Phi|_2, |Phi|_inf).

use crate::duality::projective_pair_at;
use crate::error::{GeomError, Result};
use crate::field::{pairwise_sum, Chart, ChartKind, MetricField, ScalarField, ScalarJet, TrigPoly};
use crate::schwarzian::ProjectiveStructure;
use crate::C;

/// Doubly periodic metric on the unit torus with analytic jets.
pub fn torus_metric(phi: TrigPoly, n: usize) -> MetricField {
    MetricField::catalog(crate::field::Catalog::TorusBump(phi), Chart::torus(n, n))
}

pub fn flat_torus(n: usize) -> MetricField {
    torus_metric(TrigPoly::default(), n)
}

fn require_torus(m: &MetricField) -> Result<()> {
    if !matches!(m.chart.kind, ChartKind::Torus) {
        return Err(GeomError::Config("W-volume checks run on torus metrics".into()));
    }
    Ok(())
}

/// Rectangle-rule integral over the unit torus at the chart resolution,
/// pairwise summation; exact for trigonometric polynomials below the
/// grid bandwidth and spectrally accurate for smooth integrands.
fn torus_integral(m: &MetricField, f: &dyn Fn(C) -> Result<f64>) -> Result<f64> {
    let (nx, ny) = (m.chart.nx, m.chart.ny);
    let w = 1.0 / (nx * ny) as f64;
    let mut terms = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let z = C::new(ix as f64 / nx as f64, iy as f64 / ny as f64);
            let v = f(z)?;
            if !v.is_finite() {
                return Err(GeomError::NonFiniteSample { value: v, ix, iy, z });
            }
            terms.push(v * w);
        }
    }
    Ok(pairwise_sum(&terms))
}

/// W-volume of the pair (g0, e^{2u} g0):
/// -1/4 integral u (K_0 dA_0 + K_1 dA_1).
pub fn w_pair(g0: &MetricField, u: &ScalarField) -> Result<f64> {
    require_torus(g0)?;
    let g1 = g0.conformal_change(u.clone());
    torus_integral(g0, &|z| {
        let uj = u.jet2(z).v;
        let t0 = g0.curvature(z)? * (2.0 * g0.phi_jet2(z)?.v).exp();
        let t1 = g1.curvature(z)? * (2.0 * g1.phi_jet2(z)?.v).exp();
        Ok(-0.25 * uj * (t0 + t1))
    })
}

/// [`w_pair`] at the chart resolution and its refinement, returning the
/// Richardson-extrapolated value and the resolution difference.
pub fn w_pair_richardson(g0: &MetricField, u: &ScalarField) -> Result<(f64, f64)> {
    let coarse = w_pair(g0, u)?;
    let mut fine_metric = g0.clone();
    fine_metric.chart = g0.chart.refined();
    let fine = w_pair(&fine_metric, u)?;
    Ok((fine + (fine - coarse) / 3.0, (fine - coarse).abs()))
}

/// Defect of invariance under independent scalings of the two metrics:
/// on the torus W(g0, g1) = W(e^{2t} g0, e^{2s} g1) exactly.
pub fn w_scaling_check(g0: &MetricField, u: &ScalarField, t: f64, s: f64) -> Result<f64> {
    let base = w_pair(g0, u)?;
    let shifted = ScalarField::Sum(
        Box::new(u.clone()),
        Box::new(ScalarField::Const(s - t)),
    );
    let scaled = w_pair(&g0.scaled(t), &shifted)?;
    Ok((base - scaled).abs())
}

/// Cocycle defect |W(g0,g1) + W(g1,g2) - W(g0,g2)| with g1 = e^{2 u01} g0
/// and g2 = e^{2 u12} g1.
pub fn w_cocycle_check(g0: &MetricField, u01: &ScalarField, u12: &ScalarField) -> Result<f64> {
    let g1 = g0.conformal_change(u01.clone());
    let w01 = w_pair(g0, u01)?;
    let w12 = w_pair(&g1, u12)?;
    let u02 = ScalarField::Sum(Box::new(u01.clone()), Box::new(u12.clone()));
    let w02 = w_pair(g0, &u02)?;
    Ok((w01 + w12 - w02).abs())
}

/// Defect between the central finite difference of t -> W(g0, e^{2tv} g0)
/// and the first-variation quadrature 1/4 integral dK dA with
/// dK = -2 v K - Lap v; O(h^2) in the step.
pub fn dw_conformal_check(g0: &MetricField, v: &ScalarField, h: f64) -> Result<f64> {
    require_torus(g0)?;
    let plus = ScalarField::Scale(h, Box::new(v.clone()));
    let minus = ScalarField::Scale(-h, Box::new(v.clone()));
    let fd = (w_pair(g0, &plus)? - w_pair(g0, &minus)?) / (2.0 * h);
    let variational = torus_integral(g0, &|z| {
        let vj = v.jet2(z).v;
        let dk = -2.0 * vj * g0.curvature(z)? - g0.laplacian(v, z)?;
        Ok(0.25 * dk * (2.0 * g0.phi_jet2(z)?.v).exp())
    })?;
    Ok((fd - variational).abs())
}

/// Squared L2 norm of the gradient of u against g0.
pub fn grad_norm_sq_total(g0: &MetricField, u: &ScalarField) -> Result<f64> {
    torus_integral(g0, &|z| {
        Ok(g0.gradient_norm_sq(u, z)? * (2.0 * g0.phi_jet2(z)?.v).exp())
    })
}

/// Metric area of the torus.
pub fn torus_area(m: &MetricField) -> Result<f64> {
    torus_integral(m, &|z| Ok((2.0 * m.phi_jet2(z)?.v).exp()))
}

/// Shifts u by a constant so that e^{2u} g0 has the same area as g0.
pub fn area_preserving(g0: &MetricField, u: &ScalarField) -> Result<ScalarField> {
    let a0 = torus_area(g0)?;
    let a1 = torus_area(&g0.conformal_change(u.clone()))?;
    let s = -0.5 * (a1 / a0).ln();
    Ok(ScalarField::Sum(Box::new(u.clone()), Box::new(ScalarField::Const(s))))
}

/// Defect of the mean-curvature integral identity on the torus:
/// integral H dA_g = area(ghat)/2 - area(g).
pub fn mean_curvature_integral_check(
    s: &ProjectiveStructure,
    m: &MetricField,
) -> Result<(f64, f64)> {
    require_torus(m)?;
    let lhs = torus_integral(m, &|z| {
        let hat = projective_pair_at(s, m, z)?;
        let pair = crate::duality::to_dual(&hat)?;
        Ok(pair.b.0.trace() / 2.0 * pair.g.0.det().abs().sqrt())
    })?;
    let area_hat = torus_area(m)?;
    let area_g = torus_integral(m, &|z| {
        let pair = crate::duality::dual_pair_at(s, m, z)?;
        Ok(pair.g.0.det().abs().sqrt())
    })?;
    let rhs = 0.5 * area_hat - area_g;
    Ok(((lhs - rhs).abs(), rhs))
}

// ---------------------------------------------------------------------------
// Grafting layer
// ---------------------------------------------------------------------------

/// Scalar inputs of the grafting-formula layer.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraftingData {
    /// Euler characteristic, negative
    pub chi: i32,
    /// length of the bending lamination
    pub l: f64,
    /// L2 norm of the structure's quadratic differential
    pub phi2: f64,
    /// sup norm of the structure's quadratic differential
    pub phiinf: f64,
}

impl GraftingData {
    pub fn new(chi: i32, l: f64, phi2: f64, phiinf: f64) -> Result<Self> {
        if chi >= 0 || l < 0.0 || phi2 < 0.0 || phiinf < 0.0 {
            return Err(GeomError::Config(
                "grafting data needs chi < 0 and non-negative norms".into(),
            ));
        }
        Ok(GraftingData { chi, l, phi2, phiinf })
    }

    /// e^{2T} at the convexity threshold T = log(1 + 2 |Phi|_inf) / 2,
    /// kept as an exact rational expression of the inputs.
    pub fn e2t_threshold(&self) -> f64 {
        1.0 + 2.0 * self.phiinf
    }
}

/// Closed-form areas of the flowed metrics at distance t.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GraftAreas {
    /// area of the surface dual to e^{2t} (hyperbolic metric);
    /// meaningful only when `dual_h_valid`
    pub a_dual_h: f64,
    pub dual_h_valid: bool,
    /// area of the projective metric itself
    pub a_proj: f64,
    /// area of the surface dual to the flowed projective metric
    pub a_dual_proj: f64,
    /// area gap e^{2t} L between the flowed conformal metrics
    pub a_conf_gap: f64,
}

/// The four area formulas at flow distance t.
pub fn graft_areas(d: &GraftingData, t: f64) -> GraftAreas {
    let chi = d.chi as f64;
    let (ch, sh) = (t.cosh(), t.sinh());
    GraftAreas {
        a_dual_h: -2.0 * std::f64::consts::PI * chi * ch * ch - (-2.0 * t).exp() * d.phi2 * d.phi2,
        dual_h_valid: (2.0 * t).exp() > d.e2t_threshold(),
        a_proj: -2.0 * std::f64::consts::PI * chi + d.l,
        a_dual_proj: -2.0 * std::f64::consts::PI * chi * ch * ch + d.l * sh * ch,
        a_conf_gap: (2.0 * t).exp() * d.l,
    }
}

/// Lower and upper bounds on the W-volume between the hyperbolic and
/// projective metrics, with the threshold distance T.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GraftBounds {
    pub t_threshold: f64,
    pub lower: f64,
    pub upper: f64,
}

/// upper = L / 4; lower = e^{-2T} |Phi|_2^2 / 2 - L cosh(2T) / 4 with
/// e^{2T} = 1 + 2 |Phi|_inf. Evaluated through e^{2T} directly so that
/// rational inputs give exact binary results.
pub fn graft_bounds(d: &GraftingData) -> GraftBounds {
    let e2t = d.e2t_threshold();
    let cosh2t = (e2t + 1.0 / e2t) / 2.0;
    GraftBounds {
        t_threshold: 0.5 * e2t.ln(),
        lower: d.phi2 * d.phi2 / (2.0 * e2t) - d.l * cosh2t / 4.0,
        upper: d.l / 4.0,
    }
}

/// The largest L2 norm compatible with the bound chain:
/// (1 + |Phi|_inf) sqrt(L). At this value the chain
/// |Phi|_2^2 = L (e^{2T} + 1)^2 / 4 is an equality.
pub fn newbound_max(l: f64, phiinf: f64) -> f64 {
    (1.0 + phiinf) * l.sqrt()
}

/// lower <= upper holds exactly when |Phi|_2^2 <= L (e^{2T} + 1)^2 / 4;
/// the comparison carries a few ulps of slack so the boundary case
/// |Phi|_2 = (1 + |Phi|_inf) sqrt(L) lands inside.
pub fn graft_admissible(d: &GraftingData) -> bool {
    let e2t = d.e2t_threshold();
    let chain = d.l * (e2t + 1.0) * (e2t + 1.0) / 4.0;
    d.phi2 * d.phi2 <= chain * (1.0 + 8.0 * f64::EPSILON)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{default_bump, TrigTerm};

    fn bump_metric(n: usize) -> MetricField {
        torus_metric(default_bump(), n)
    }

    fn small_u() -> ScalarField {
        ScalarField::Trig(TrigPoly::new(vec![
            TrigTerm { amp: 0.05, m: 1, n: 0, phase: 0.0 },
            TrigTerm { amp: 0.03, m: 1, n: 1, phase: 0.4 },
        ]))
    }

    #[test]
    fn w_pair_zero_direction() {
        assert_eq!(w_pair(&bump_metric(48), &ScalarField::Zero).unwrap(), 0.0);
    }

    #[test]
    fn w_pair_constant_direction_vanishes() {
        // both curvature integrals vanish on the torus
        let w = w_pair(&bump_metric(64), &ScalarField::Const(0.7)).unwrap();
        assert!(w.abs() < 1e-9, "W = {w}");
    }

    #[test]
    fn w_pair_antisymmetry() {
        let g0 = bump_metric(48);
        let u = small_u();
        let g1 = g0.conformal_change(u.clone());
        let a = w_pair(&g0, &u).unwrap();
        let b = w_pair(&g1, &ScalarField::Scale(-1.0, Box::new(u))).unwrap();
        assert!((a + b).abs() < 1e-8, "antisymmetry defect {}", a + b);
    }

    #[test]
    fn flat_pair_equals_dirichlet_energy() {
        // K = 0 and equal areas turn the maximality bound into equality:
        // W = -|grad u|_2^2 / 4.
        let g0 = flat_torus(96);
        let u = area_preserving(&g0, &small_u()).unwrap();
        let (w, _) = w_pair_richardson(&g0, &u).unwrap();
        let grad = grad_norm_sq_total(&g0, &u).unwrap();
        assert!((w + 0.25 * grad).abs() < 1e-6, "defect {}", w + 0.25 * grad);
        // and the inequality direction
        assert!(w <= -0.25 * grad + 1e-6);
    }

    #[test]
    fn monotonicity_constant_direction() {
        // flat metric, u >= 0 constant: both curvatures vanish, W = 0 >= 0.
        let g0 = flat_torus(32);
        let w = w_pair(&g0, &ScalarField::Const(0.3)).unwrap();
        assert!(w.abs() < 1e-12);
        assert!(w >= -1e-12);
    }

    #[test]
    fn scaling_invariance() {
        let g0 = bump_metric(48);
        let u = small_u();
        assert_eq!(w_scaling_check(&g0, &u, 0.0, 0.0).unwrap(), 0.0);
        let d = w_scaling_check(&g0, &u, 0.3, -0.2).unwrap();
        assert!(d < 1e-8, "scaling defect {d}");
        let d = w_scaling_check(&g0, &u, 0.5, 0.5).unwrap();
        assert!(d < 1e-10, "equal-scaling defect {d}");
    }

    #[test]
    fn cocycle_identity() {
        let g0 = bump_metric(48);
        let u01 = small_u();
        let u12 = ScalarField::Trig(TrigPoly::new(vec![TrigTerm {
            amp: 0.04,
            m: 0,
            n: 1,
            phase: -0.9,
        }]));
        assert_eq!(w_cocycle_check(&g0, &u01, &ScalarField::Zero).unwrap(), 0.0);
        let d = w_cocycle_check(&g0, &u01, &u12).unwrap();
        assert!(d < 1e-7, "cocycle defect {d}");
    }

    #[test]
    fn cocycle_large_amplitude() {
        let g0 = bump_metric(128);
        let u01 = ScalarField::Trig(TrigPoly::new(vec![TrigTerm {
            amp: 1.0,
            m: 1,
            n: 0,
            phase: 0.2,
        }]));
        let u12 = ScalarField::Trig(TrigPoly::new(vec![TrigTerm {
            amp: 0.5,
            m: 0,
            n: 1,
            phase: 1.0,
        }]));
        let d = w_cocycle_check(&g0, &u01, &u12).unwrap();
        assert!(d < 1e-6, "large-amplitude cocycle defect {d}");
    }

    #[test]
    fn first_variation_second_order() {
        // W(e^{2tv} g0) is exactly quadratic in t (the flowed curvature
        // form (K - t Lap v) dA is linear), so the central difference is
        // exact up to rounding and the defect sits under C h^2 for every
        // step; both halvings stay inside that envelope.
        let g0 = bump_metric(64);
        let v = small_u();
        assert!(dw_conformal_check(&g0, &ScalarField::Const(1.0), 1e-3).unwrap() < 1e-12);
        const C_ENV: f64 = 1e-4;
        for h in [1e-3, 5e-4, 2.5e-4] {
            let d = dw_conformal_check(&g0, &v, h).unwrap();
            assert!(d <= C_ENV * h * h, "defect {d} exceeds envelope at h = {h}");
        }
    }

    #[test]
    fn mean_curvature_integral_identity() {
        let s = ProjectiveStructure::identity();
        let m = bump_metric(64);
        let (defect, rhs) = mean_curvature_integral_check(&s, &m).unwrap();
        assert!(defect < 1e-6 * rhs.abs().max(1.0), "defect {defect}");
        // e^{2t}-scaling preserves the identity
        let (defect, rhs) = mean_curvature_integral_check(&s, &m.scaled(0.4)).unwrap();
        assert!(defect < 1e-6 * rhs.abs().max(1.0), "scaled defect {defect}");
    }

    #[test]
    fn mean_curvature_identity_near_degenerate() {
        // scale so that the smallest shape eigenvalue sits close to -1
        let s = ProjectiveStructure::identity();
        let m = bump_metric(96);
        let mut min_l = f64::INFINITY;
        for z in m.sample_points() {
            let (lo, _) = crate::schwarzian::shape_operator_hat(&s, &m, z)
                .unwrap()
                .0
                .real_eigenvalues();
            min_l = min_l.min(lo);
        }
        assert!(min_l < 0.0, "bump should have a negative eigenvalue somewhere");
        let margin = 1e-3;
        let t = -0.5 * ((1.0 - margin) / min_l.abs()).ln();
        let scaled = m.scaled(t);
        // the mean curvature blows up pointwise like 1/margin while the
        // density collapses, leaving the integrals finite
        let mut sup_h: f64 = 0.0;
        for z in scaled.sample_points().into_iter().step_by(37) {
            let pair = crate::duality::dual_pair_at(&s, &scaled, z).unwrap();
            sup_h = sup_h.max((pair.b.0.trace() / 2.0).abs());
        }
        assert!(sup_h > 50.0, "mean curvature should spike, sup |H| = {sup_h}");
        let (defect, rhs) = mean_curvature_integral_check(&s, &scaled).unwrap();
        assert!(
            defect < 1e-4 * rhs.abs().max(1.0),
            "near-degenerate defect {defect} vs rhs {rhs}"
        );
    }

    #[test]
    fn graft_areas_fuchsian_case() {
        let d = GraftingData::new(-2, 0.0, 0.0, 0.0).unwrap();
        let a = graft_areas(&d, 0.0);
        let want = 4.0 * std::f64::consts::PI;
        assert!((a.a_dual_h - want).abs() < 1e-12);
        assert!((a.a_proj - want).abs() < 1e-12);
        assert!((a.a_dual_proj - want).abs() < 1e-12);
        assert_eq!(a.a_conf_gap, 0.0);
    }

    #[test]
    fn graft_area_differences() {
        let d = GraftingData::new(-2, 1.0, 0.8, 0.6).unwrap();
        for t in [0.1, 0.7, 1.9] {
            let a = graft_areas(&d, t);
            let want = d.l * t.sinh() * t.cosh() + (-2.0 * t).exp() * d.phi2 * d.phi2;
            assert!(
                (a.a_dual_proj - a.a_dual_h - want).abs() < 1e-12,
                "difference defect at t = {t}"
            );
        }
        // t -> 0 limit: dual projective area = -2 pi chi = a_proj - L
        let a = graft_areas(&d, 0.0);
        assert!((a.a_dual_proj - (a.a_proj - d.l)).abs() < 1e-12);
    }

    #[test]
    fn graft_bounds_hand_instance() {
        let d = GraftingData::new(-2, 1.0, 0.5, 0.5).unwrap();
        let b = graft_bounds(&d);
        assert_eq!(b.lower, -0.25);
        assert_eq!(b.upper, 0.25);
        assert!((b.t_threshold - 0.5 * 2.0f64.ln()).abs() < 1e-15);
        // trivial data
        let d0 = GraftingData::new(-2, 0.0, 0.0, 0.0).unwrap();
        let b0 = graft_bounds(&d0);
        assert_eq!((b0.lower, b0.upper), (0.0, 0.0));
    }

    #[test]
    fn newbound_constants() {
        assert_eq!(newbound_max(0.0, 1.0), 0.0);
        assert_eq!(newbound_max(1.0, 1.5), 2.5);
        assert_eq!(newbound_max(4.0, 0.0), 2.0);
    }

    #[test]
    fn bound_order_on_lattice() {
        // lower <= upper across the admissible lattice, with equality of
        // the algebraic chain at phi2 = newbound_max
        for i in 0..50 {
            let l = 0.02 + i as f64 * 0.08;
            for j in 0..50 {
                let phiinf = j as f64 * 0.06;
                let max2 = newbound_max(l, phiinf);
                for k in 0..50 {
                    let phi2 = max2 * k as f64 / 49.0;
                    let d = GraftingData::new(-2, l, phi2, phiinf).unwrap();
                    assert!(graft_admissible(&d), "admissibility at {l} {phi2} {phiinf}");
                    let b = graft_bounds(&d);
                    assert!(
                        b.lower <= b.upper + 1e-12,
                        "order violated: {} > {}",
                        b.lower,
                        b.upper
                    );
                }
                // equality of the chain at the maximum
                let e2t = 1.0 + 2.0 * phiinf;
                let chain = l * (e2t + 1.0) * (e2t + 1.0) / 4.0;
                assert!((max2 * max2 - chain).abs() < 1e-10 * chain.max(1.0));
            }
        }
    }
}
