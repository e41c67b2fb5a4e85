//! Dual fundamental pairs, Gauss-Codazzi residuals in the hyperbolic and
//! projective pictures, normal flow and convexity thresholds.
//!
//! The duality exchanges a pair (ghat, Bhat) satisfying the projective
//! equations (Tr B = -2K, d-nabla B = 0) with a pair (g, B) satisfying
//! the equations of a surface in hyperbolic 3-space (det B = K + 1,
//! d-nabla B = 0):
//!
//!   g = (Id + Bhat)^* ghat / 4      B = (Id + Bhat)^{-1} (Id - Bhat)
//!   ghat = (Id + B)^* g             Bhat = (Id + B)^{-1} (Id - B)

use crate::error::{GeomError, Result};
use crate::field::MetricField;
use crate::schwarzian::{shape_operator_hat, ProjectiveStructure};
use crate::tensor::{Endo2, Mat2, SymTensor2};
use crate::C;

/// Eigenvalue distance to -1 below which the dual map is rejected.
pub const DUAL_TOL: f64 = 1e-8;
/// Condition-number ceiling for the normal-flow frame map A_t.
pub const FLOW_COND_MAX: f64 = 1e12;
/// Asymmetry of g.B above this (relative) is an input error; below it
/// is repaired by symmetrization.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Step for first-derivative stencils on analytically backed fields.
pub const FD_STEP_1: f64 = 1e-3;
/// Step for second-derivative stencils (curvature of general metrics).
/// Small enough that trigonometric metric data with a few lattice
/// frequencies stays below 1e-8 truncation; roundoff is still two
/// orders under that.
pub const FD_STEP_2: f64 = 5e-4;

/// Metric and shape operator at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalPair {
    pub g: SymTensor2,
    pub b: Endo2,
}

impl FundamentalPair {
    /// Builds a pair, enforcing that g.B is symmetric: small asymmetry
    /// from difference stencils is repaired, large asymmetry is an error.
    pub fn new(g: SymTensor2, b: Endo2) -> Result<FundamentalPair> {
        let det = g.0.det();
        if det <= 0.0 {
            return Err(GeomError::NonPositive { det });
        }
        let t = b.0.transpose().mul(&g.0); // matrix of g . B
        let asym = (t.b - t.c).abs();
        if asym > SYMMETRY_TOL * t.norm().max(1.0) {
            return Err(GeomError::NonConformal { defect: asym / t.norm().max(1.0) });
        }
        let ts = SymTensor2::from_mat_symmetrized(t);
        // re-solve B = G^{-1} T^t
        let b = Endo2(g.0.inverse()?.mul(&ts.0.transpose()));
        Ok(FundamentalPair { g, b })
    }

    /// Principal curvatures: eigenvalues of B, computed through the
    /// Cholesky-whitened symmetric representative L^{-1} (g.B) L^{-t}
    /// so that nearly equal curvatures keep full precision.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let g = &self.g.0;
        let l11 = g.a.sqrt();
        let l21 = g.b / l11;
        let l22 = (g.d - l21 * l21).max(0.0).sqrt();
        if l22 == 0.0 || !l11.is_finite() {
            return self.b.0.real_eigenvalues();
        }
        let t = self.b.0.transpose().mul(g); // matrix of g.B, symmetric
        // S = L^{-1} T, then M = S L^{-t}
        let s11 = t.a / l11;
        let s12 = t.b / l11;
        let s21 = (t.c - l21 * s11) / l22;
        let s22 = (t.d - l21 * s12) / l22;
        let m11 = s11 / l11;
        let m12 = (s12 - l21 * m11) / l22;
        let m21 = s21 / l11;
        let m22 = (s22 - l21 * m21) / l22;
        Mat2::new(m11, m12, m21, m22).sym_eigenvalues()
    }
}

fn check_not_minus_one(b: &Mat2) -> Result<()> {
    let (l1, l2) = b.real_eigenvalues();
    for l in [l1, l2] {
        if (l + 1.0).abs() < DUAL_TOL {
            return Err(GeomError::DegenerateDual { eigenvalue: l, tol: DUAL_TOL });
        }
    }
    Ok(())
}

/// (ghat, Bhat) -> (g, B): g = (Id+Bhat)^* ghat / 4,
/// B = (Id+Bhat)^{-1}(Id-Bhat).
pub fn to_dual(hat: &FundamentalPair) -> Result<FundamentalPair> {
    check_not_minus_one(&hat.b.0)?;
    let a = Mat2::ID.add(&hat.b.0);
    let g = SymTensor2::from_mat_symmetrized(a.transpose().mul(&hat.g.0).mul(&a).scale(0.25));
    let b = Endo2(a.inverse()?.mul(&Mat2::ID.sub(&hat.b.0)));
    Ok(FundamentalPair { g, b })
}

/// (g, B) -> (ghat, Bhat): ghat = (Id+B)^* g, Bhat = (Id+B)^{-1}(Id-B).
pub fn from_dual(pair: &FundamentalPair) -> Result<FundamentalPair> {
    check_not_minus_one(&pair.b.0)?;
    let a = Mat2::ID.add(&pair.b.0);
    let g = SymTensor2::from_mat_symmetrized(a.transpose().mul(&pair.g.0).mul(&a));
    let b = Endo2(a.inverse()?.mul(&Mat2::ID.sub(&pair.b.0)));
    Ok(FundamentalPair { g, b })
}

/// The projective pair of (Sigma, m) at z: ghat = e^{2 phi} g_euc with
/// the projective shape operator.
pub fn projective_pair_at(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<FundamentalPair> {
    let lambda = m.density(z)?;
    Ok(FundamentalPair {
        g: SymTensor2::new(lambda, 0.0, lambda),
        b: shape_operator_hat(s, m, z)?,
    })
}

/// Induced metric and shape operator of the surface dual to (Sigma, m).
pub fn dual_pair_at(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<FundamentalPair> {
    to_dual(&projective_pair_at(s, m, z)?)
}

// ---------------------------------------------------------------------------
// Normal flow
// ---------------------------------------------------------------------------

/// Pair moved distance t along its unit normal geodesics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub pair: FundamentalPair,
}

/// g_t = A_t^* g, B_t = A_t^{-1} C_t with A_t = cosh t Id + sinh t B and
/// C_t = sinh t Id + cosh t B.
pub fn normal_flow(pair: &FundamentalPair, t: f64) -> Result<FlowState> {
    let (ch, sh) = (t.cosh(), t.sinh());
    let a = Mat2::ID.scale(ch).add(&pair.b.0.scale(sh));
    if a.cond() > FLOW_COND_MAX {
        let (l1, l2) = pair.b.0.real_eigenvalues();
        let bad = if (ch + l1 * sh).abs() < (ch + l2 * sh).abs() { l1 } else { l2 };
        return Err(GeomError::SingularTime { t, eigenvalue: bad });
    }
    let c = Mat2::ID.scale(sh).add(&pair.b.0.scale(ch));
    let g = SymTensor2::from_mat_symmetrized(a.transpose().mul(&pair.g.0).mul(&a));
    let b = Endo2(a.inverse()?.mul(&c));
    Ok(FlowState { t, pair: FundamentalPair { g, b } })
}

/// Principal-curvature transport law under normal flow.
pub fn flow_eigenvalue(lambda0: f64, t: f64) -> f64 {
    let th = t.tanh();
    (th + lambda0) / (1.0 + th * lambda0)
}

/// CSV rows (t, lambda1, lambda2, det g_t) of a flow trace.
pub fn flow_trace_csv(pair: &FundamentalPair, t0: f64, t1: f64, steps: usize) -> Result<String> {
    let mut out = String::from("t,lambda1,lambda2,det_g\n");
    for i in 0..=steps {
        let t = t0 + (t1 - t0) * i as f64 / steps as f64;
        match normal_flow(pair, t) {
            Ok(st) => {
                let (l1, l2) = st.pair.principal_curvatures();
                out.push_str(&format!("{},{},{},{}\n", t, l1, l2, st.pair.g.0.det()));
            }
            Err(_) => out.push_str(&format!("{},nan,nan,nan\n", t)),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gauss-Codazzi residuals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Hyperbolic,
    Projective,
}

/// First derivatives (d/dx, d/dy) of a matrix field by 4th-order stencils.
fn mat_derivatives(
    f: &dyn Fn(C) -> Result<Mat2>,
    z: C,
    h: f64,
) -> Result<(Mat2, Mat2)> {
    let entry = |dir: C| -> Result<Mat2> {
        let e = dir * h;
        let (p2, p1, m1, m2) = (f(z + 2.0 * e)?, f(z + e)?, f(z - e)?, f(z - 2.0 * e)?);
        Ok(p2
            .scale(-1.0)
            .add(&p1.scale(8.0))
            .add(&m1.scale(-8.0))
            .add(&m2)
            .scale(1.0 / (12.0 * h)))
    };
    Ok((entry(C::new(1.0, 0.0))?, entry(C::new(0.0, 1.0))?))
}

/// Christoffel symbols of a general metric field: returns the two
/// matrices Gamma_x, Gamma_y with (Gamma_i)^k_m = Gamma^k_{i m}.
pub fn christoffel(g: &dyn Fn(C) -> Result<Mat2>, z: C, h: f64) -> Result<[Mat2; 2]> {
    let gz = g(z)?;
    let ginv = gz.inverse()?;
    let (gx, gy) = mat_derivatives(g, z, h)?;
    let dg = [gx, gy];
    let pick = |m: &Mat2, i: usize, j: usize| match (i, j) {
        (0, 0) => m.a,
        (0, 1) => m.b,
        (1, 0) => m.c,
        _ => m.d,
    };
    let gi = |k: usize, l: usize| pick(&ginv, k, l);
    let mut out = [Mat2::ZERO; 2];
    for i in 0..2 {
        let mut entries = [[0.0; 2]; 2];
        for k in 0..2 {
            for m in 0..2 {
                let mut acc = 0.0;
                for l in 0..2 {
                    acc += gi(k, l)
                        * (pick(&dg[i], m, l) + pick(&dg[m], i, l) - pick(&dg[l], i, m));
                }
                entries[k][m] = acc / 2.0;
            }
        }
        out[i] = Mat2::new(entries[0][0], entries[0][1], entries[1][0], entries[1][1]);
    }
    Ok(out)
}

/// Second derivatives of a matrix field: direct 4th-order stencils for
/// the pure derivatives, a tensor-product stencil for the mixed one.
fn mat_second_derivatives(
    f: &dyn Fn(C) -> Result<Mat2>,
    z: C,
    h: f64,
) -> Result<(Mat2, Mat2, Mat2)> {
    const W1: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
    const W2: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
    let pure = |dir: C, w: &[f64; 5]| -> Result<Mat2> {
        let mut acc = Mat2::ZERO;
        for (k, c) in w.iter().enumerate() {
            if *c != 0.0 {
                acc = acc.add(&f(z + dir * ((k as f64 - 2.0) * h))?.scale(*c));
            }
        }
        Ok(acc.scale(1.0 / (h * h)))
    };
    let fxx = pure(C::new(1.0, 0.0), &W2)?;
    let fyy = pure(C::new(0.0, 1.0), &W2)?;
    let mut fxy = Mat2::ZERO;
    for (i, ci) in W1.iter().enumerate() {
        if *ci == 0.0 {
            continue;
        }
        for (j, cj) in W1.iter().enumerate() {
            if *cj == 0.0 {
                continue;
            }
            let w = z + C::new((i as f64 - 2.0) * h, (j as f64 - 2.0) * h);
            fxy = fxy.add(&f(w)?.scale(ci * cj));
        }
    }
    Ok((fxx, fxy.scale(1.0 / (h * h)), fyy))
}

/// Gaussian curvature of a general metric field by the Brioschi formula
/// with difference stencils.
pub fn brioschi_curvature(g: &dyn Fn(C) -> Result<Mat2>, z: C, h: f64) -> Result<f64> {
    let gz = g(z)?;
    let (e, f_, gg) = (gz.a, gz.b, gz.d);
    let (gx, gy) = mat_derivatives(g, z, h)?;
    let (gxx, gxy, gyy) = mat_second_derivatives(g, z, h)?;

    let (e_x, e_y) = (gx.a, gy.a);
    let (f_x, f_y) = (gx.b, gy.b);
    let (g_x, g_y) = (gx.d, gy.d);
    let e_yy = gyy.a;
    let g_xx = gxx.d;
    let f_xy = gxy.b;

    let det3 = |m: [[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let m1 = [
        [-0.5 * e_yy + f_xy - 0.5 * g_xx, 0.5 * e_x, f_x - 0.5 * e_y],
        [f_y - 0.5 * g_x, e, f_],
        [0.5 * g_y, f_, gg],
    ];
    let m2 = [[0.0, 0.5 * e_y, 0.5 * g_x], [0.5 * e_y, e, f_], [0.5 * g_x, f_, gg]];
    let den = e * gg - f_ * f_;
    Ok((det3(m1) - det3(m2)) / (den * den))
}

/// The Codazzi residual of a general pair field, encoded as the complex
/// number -2 g(d-nabla B (d/dz, d/dzbar), d/dz); for a conformal metric
/// this equals 2 r_zbar + s_z e^{2 phi} in the decomposition
/// g.B = r dz^2 + conj(r) dzbar^2 - s g.
pub fn codazzi_general(
    g: &dyn Fn(C) -> Result<Mat2>,
    b: &dyn Fn(C) -> Result<Mat2>,
    z: C,
    h: f64,
) -> Result<C> {
    let (bx, by) = mat_derivatives(b, z, h)?;
    let gamma = christoffel(g, z, h)?;
    let bz = b(z)?;
    let col = |m: &Mat2, j: usize| if j == 0 { [m.a, m.c] } else { [m.b, m.d] };
    // w = nabla_x (B dy) - nabla_y (B dx)
    let bxy = col(&bx, 1);
    let byx = col(&by, 0);
    let gx_by = gamma[0].apply(col(&bz, 1));
    let gy_bx = gamma[1].apply(col(&bz, 0));
    let w = [bxy[0] + gx_by[0] - byx[0] - gy_bx[0], bxy[1] + gx_by[1] - byx[1] - gy_bx[1]];
    let gw = g(z)?.apply(w);
    Ok(C::new(-gw[1] / 2.0, -gw[0] / 2.0))
}

/// Gauss and Codazzi residuals of (m, B) in the chosen picture:
/// hyperbolic gauss = det B - (K + 1), projective gauss = Tr B + 2 K;
/// codazzi as in [`codazzi_general`].
pub fn gc_residuals(
    m: &MetricField,
    bfield: &dyn Fn(C) -> Result<Endo2>,
    picture: Picture,
    z: C,
) -> Result<(f64, C)> {
    let k = m.curvature(z)?;
    let b = bfield(z)?;
    let gauss = match picture {
        Picture::Hyperbolic => b.0.det() - (k + 1.0),
        Picture::Projective => b.0.trace() + 2.0 * k,
    };
    let gf = |w: C| -> Result<Mat2> {
        let l = m.density(w)?;
        Ok(Mat2::diag(l, l))
    };
    let bf = |w: C| bfield(w).map(|e| e.0);
    let codazzi = codazzi_general(&gf, &bf, z, FD_STEP_1)?;
    Ok((gauss, codazzi))
}

/// Hyperbolic Gauss-Codazzi residuals of the general pair field
/// z -> (g(z), B(z)); curvature of g by Brioschi stencils.
pub fn gc_residuals_pair(
    pair: &dyn Fn(C) -> Result<FundamentalPair>,
    z: C,
) -> Result<(f64, C)> {
    let gf = |w: C| pair(w).map(|p| p.g.0);
    let bf = |w: C| pair(w).map(|p| p.b.0);
    let k = brioschi_curvature(&gf, z, FD_STEP_2)?;
    let p = pair(z)?;
    let gauss = p.b.0.det() - (k + 1.0);
    let codazzi = codazzi_general(&gf, &bf, z, FD_STEP_1)?;
    Ok((gauss, codazzi))
}

// ---------------------------------------------------------------------------
// Convexity threshold and the dual area-form identities
// ---------------------------------------------------------------------------

/// t0 = log(sup |K| + 4 ||Q||) / 2 over the evaluation grid; the flowed
/// dual surface is locally convex for t > t0.
pub fn convexity_time(s: &ProjectiveStructure, m: &MetricField) -> Result<f64> {
    let pts = m.sample_points();
    if pts.is_empty() {
        return Err(GeomError::EmptyGrid);
    }
    let mut sup: f64 = 0.0;
    for z in pts {
        let k = m.curvature(z)?;
        let nq = crate::schwarzian::norm_q(s, m, z)?;
        sup = sup.max(k.abs() + 4.0 * nq);
    }
    Ok(0.5 * sup.ln())
}

/// Pointwise residuals of the two dual area-form identities
/// K(g) dA_g = eps K(ghat) dA_ghat and
/// H(g) dA_g = eps (1 - det Bhat) dA_ghat / 4,
/// with the curvatures eliminated through the Gauss equations.
pub fn dual_forms_check(pair: &FundamentalPair, hat: &FundamentalPair) -> (f64, f64) {
    let eps = Mat2::ID.add(&pair.b.0).det().signum();
    let da_g = pair.g.0.det().abs().sqrt();
    let da_hat = hat.g.0.det().abs().sqrt();
    let k_g = pair.b.0.det() - 1.0;
    let k_hat = -hat.b.0.trace() / 2.0;
    let r1 = k_g * da_g - eps * k_hat * da_hat;
    let h_g = pair.b.0.trace() / 2.0;
    let r2 = h_g * da_g - eps / 4.0 * (1.0 - hat.b.0.det()) * da_hat;
    (r1, r2)
}

/// Evaluation points of m that keep a stencil of the given span inside
/// the chart.
pub fn stencil_points(m: &MetricField, span: f64) -> Vec<C> {
    m.sample_points()
        .into_iter()
        .filter(|z| m.chart.boundary_distance(*z) > span)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Catalog, MetricField};

    fn hat_id(scale: f64, b: Mat2) -> FundamentalPair {
        FundamentalPair { g: SymTensor2::new(scale, 0.0, scale), b: Endo2(b) }
    }

    #[test]
    fn dual_of_identity_shape() {
        // Bhat = Id: B = 0 and g = ghat.
        let hat = hat_id(3.0, Mat2::ID);
        let pair = to_dual(&hat).unwrap();
        assert!(pair.b.0.norm() < 1e-15);
        assert!(pair.g.0.sub(&hat.g.0).norm() < 1e-12);
    }

    #[test]
    fn dual_of_scaled_identity() {
        let t: f64 = 0.7;
        let hat = hat_id(1.0, Mat2::ID.scale((-2.0 * t).exp()));
        let pair = to_dual(&hat).unwrap();
        assert!((pair.b.0.a - t.tanh()).abs() < 1e-14);
        assert!(pair.b.0.b.abs() < 1e-15);
    }

    #[test]
    fn dual_rejects_eigenvalue_minus_one() {
        let hat = hat_id(1.0, Mat2::ID.scale(-1.0));
        assert!(matches!(to_dual(&hat), Err(GeomError::DegenerateDual { .. })));
        let pair = hat_id(1.0, Mat2::diag(-1.0, 0.3));
        assert!(matches!(from_dual(&pair), Err(GeomError::DegenerateDual { .. })));
    }

    #[test]
    fn from_dual_examples() {
        // B = 0: Bhat = Id, ghat = g.
        let pair = hat_id(2.0, Mat2::ZERO);
        let hat = from_dual(&pair).unwrap();
        assert!(hat.b.0.sub(&Mat2::ID).norm() < 1e-15);
        assert!(hat.g.0.sub(&pair.g.0).norm() < 1e-15);
        // B = tanh(t) Id: Bhat = e^{-2t} Id.
        let t: f64 = 1.3;
        let pair = hat_id(1.0, Mat2::ID.scale(t.tanh()));
        let hat = from_dual(&pair).unwrap();
        assert!((hat.b.0.a - (-2.0 * t).exp()).abs() < 1e-14);
    }

    #[test]
    fn dual_round_trip() {
        let hat = hat_id(1.7, Mat2::new(0.4, 0.2, 0.2, -0.3));
        let back = from_dual(&to_dual(&hat).unwrap()).unwrap();
        assert!(back.g.0.sub(&hat.g.0).norm() < 1e-12);
        assert!(back.b.0.sub(&hat.b.0).norm() < 1e-12);
    }

    #[test]
    fn pair_symmetry_enforcement() {
        let g = SymTensor2::new(2.0, 0.0, 2.0);
        // benign asymmetry is repaired
        let b = Mat2::new(0.5, 0.1, 0.1 + 1e-10, -0.2);
        let p = FundamentalPair::new(g, Endo2(b)).unwrap();
        let t = p.b.0.transpose().mul(&p.g.0);
        assert!((t.b - t.c).abs() < 1e-14);
        // gross asymmetry is an input error
        let bad = Mat2::new(0.5, 0.1, 0.4, -0.2);
        assert!(FundamentalPair::new(g, Endo2(bad)).is_err());
    }

    #[test]
    fn normal_flow_identity_at_zero() {
        let pair = hat_id(1.0, Mat2::new(0.3, 0.1, 0.1, -0.2));
        let st = normal_flow(&pair, 0.0).unwrap();
        assert!(st.pair.g.0.sub(&pair.g.0).norm() < 1e-15);
        assert!(st.pair.b.0.sub(&pair.b.0).norm() < 1e-15);
    }

    #[test]
    fn flow_eigenvalue_law() {
        // lambda = 1 is fixed; lambda = 0 flows to tanh t.
        assert!((flow_eigenvalue(1.0, 2.3) - 1.0).abs() < 1e-15);
        assert!((flow_eigenvalue(0.0, 1.0) - 1.0f64.tanh()).abs() < 1e-15);
        let pair = hat_id(1.0, Mat2::diag(0.0, 0.5));
        let st = normal_flow(&pair, 1.0).unwrap();
        let (l1, l2) = st.pair.principal_curvatures();
        assert!((l1 - 1.0f64.tanh()).abs() < 1e-12, "l1 = {l1}");
        assert!((l2 - flow_eigenvalue(0.5, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn flow_group_law() {
        let pair = hat_id(1.3, Mat2::new(0.2, 0.15, 0.15, -0.4));
        let (s, t) = (0.6, -0.3);
        let a = normal_flow(&normal_flow(&pair, s).unwrap().pair, t).unwrap().pair;
        let b = normal_flow(&pair, s + t).unwrap().pair;
        assert!(a.g.0.sub(&b.g.0).norm() < 1e-10);
        assert!(a.b.0.sub(&b.b.0).norm() < 1e-10);
    }

    #[test]
    fn flow_singular_time_detected() {
        // lambda = -coth(t) makes A_t singular: for lambda = -2,
        // t = atanh(1/2).
        let pair = hat_id(1.0, Mat2::diag(-2.0, 0.0));
        let t = 0.5f64.atanh();
        assert!(matches!(normal_flow(&pair, t), Err(GeomError::SingularTime { .. })));
    }

    #[test]
    fn dual_flow_commutation() {
        // dual of (e^{2t} ghat, e^{-2t} Bhat) = normal flow of the dual.
        let hat = hat_id(1.0, Mat2::new(0.5, 0.2, 0.2, 0.1));
        let t: f64 = 0.4;
        let scaled_hat = FundamentalPair {
            g: SymTensor2::new(hat.g.0.a * (2.0 * t).exp(), 0.0, hat.g.0.d * (2.0 * t).exp()),
            b: Endo2(hat.b.0.scale((-2.0 * t).exp())),
        };
        let a = to_dual(&scaled_hat).unwrap();
        let b = normal_flow(&to_dual(&hat).unwrap(), t).unwrap().pair;
        assert!(a.g.0.sub(&b.g.0).norm() < 1e-10, "metric defect {}", a.g.0.sub(&b.g.0).norm());
        assert!(a.b.0.sub(&b.b.0).norm() < 1e-10);
    }

    #[test]
    fn projective_residuals_on_catalog() {
        let s = ProjectiveStructure::identity();
        for c in [Catalog::HyperbolicDisk, Catalog::TorusBump(crate::field::default_bump())] {
            let m = MetricField::catalog_default(c);
            let bf = |z: C| shape_operator_hat(&s, &m, z);
            for z in stencil_points(&m, 5.0 * FD_STEP_1).into_iter().step_by(171) {
                let (gauss, codazzi) = gc_residuals(&m, &bf, Picture::Projective, z).unwrap();
                assert!(gauss.abs() < 1e-12, "gauss {gauss} at {z}");
                assert!(codazzi.norm() < 1e-7, "codazzi {codazzi} at {z}");
            }
        }
    }

    #[test]
    fn hyperbolic_residuals_of_dual_pair() {
        let s = ProjectiveStructure::identity();
        let m = MetricField::torus_bump_default();
        let pf = |z: C| dual_pair_at(&s, &m, z);
        for z in [C::new(0.31, 0.21), C::new(0.72, 0.66)] {
            let (gauss, codazzi) = gc_residuals_pair(&pf, z).unwrap();
            assert!(gauss.abs() < 1e-7, "gauss {gauss}");
            assert!(codazzi.norm() < 1e-7, "codazzi {codazzi}");
        }
    }

    #[test]
    fn flat_pair_with_zero_shape_is_not_realizable() {
        // B = 0 with the Euclidean metric: det B - (K + 1) = -1.
        let m = MetricField::catalog_default(Catalog::Euclidean);
        let bf = |_z: C| Ok(Endo2(Mat2::ZERO));
        let (gauss, _) =
            gc_residuals(&m, &bf, Picture::Hyperbolic, C::new(0.5, 0.5)).unwrap();
        assert!((gauss + 1.0).abs() < 1e-14);
    }

    #[test]
    fn brioschi_on_conformal_metric_matches_analytic() {
        let m = MetricField::torus_bump_default();
        let gf = |z: C| {
            let l = m.density(z)?;
            Ok(Mat2::diag(l, l))
        };
        for z in [C::new(0.3, 0.4), C::new(0.81, 0.13)] {
            let k_fd = brioschi_curvature(&gf, z, FD_STEP_2).unwrap();
            let k = m.curvature(z).unwrap();
            assert!((k_fd - k).abs() < 1e-7, "Brioschi defect {}", k_fd - k);
        }
    }

    #[test]
    fn convexity_time_examples() {
        let s = ProjectiveStructure::identity();
        let hyp = MetricField::catalog_default(Catalog::HyperbolicDisk);
        let t0 = convexity_time(&s, &hyp).unwrap();
        assert!(t0.abs() < 1e-12, "t0 = {t0}");
        let sph = MetricField::catalog_default(Catalog::Spherical);
        let t0 = convexity_time(&s, &sph).unwrap();
        assert!(t0.abs() < 1e-12);
        // but the spherical dual at t = 0 is degenerate
        assert!(dual_pair_at(&s, &sph, C::new(0.3, 0.2)).is_err());
    }

    #[test]
    fn convexity_time_power_structure() {
        let c = C::new(1.6, 0.0);
        let s = ProjectiveStructure::power(c);
        let m = MetricField::catalog(
            Catalog::HyperbolicUhp,
            crate::field::Chart::uhp(-2.0, 2.0, 0.1, 2.0, 81, 41),
        );
        let t0 = convexity_time(&s, &m).unwrap();
        // sup(|K| + 4 ||Q||) = 1 + |1 - c^2| sup sin^2 theta, attained
        // on the imaginary axis which the grid contains.
        let want = 0.5 * (1.0 + (C::new(1.0, 0.0) - c * c).norm()).ln();
        assert!((t0 - want).abs() < 1e-10, "t0 = {t0}, want {want}");
        // flowed dual principal curvatures are positive past t0
        let z = C::new(0.4, 0.7);
        let pair = dual_pair_at(&s, &m, z).unwrap();
        let flowed = normal_flow(&pair, t0 + 0.05).unwrap().pair;
        let (l1, l2) = flowed.principal_curvatures();
        assert!(l1 > 0.0 && l2 > 0.0, "curvatures {l1}, {l2}");
    }

    #[test]
    fn dual_forms_identities() {
        let hat = hat_id(1.9, Mat2::new(0.6, 0.25, 0.25, 0.2));
        let pair = to_dual(&hat).unwrap();
        let (r1, r2) = dual_forms_check(&pair, &hat);
        assert!(r1.abs() < 1e-13, "r1 = {r1}");
        assert!(r2.abs() < 1e-13, "r2 = {r2}");
        // Bhat = Id: second identity reads H dA_g = 0, and indeed B = 0.
        let hat = hat_id(1.0, Mat2::ID);
        let pair = to_dual(&hat).unwrap();
        let (_, r2) = dual_forms_check(&pair, &hat);
        assert!(r2.abs() < 1e-15);
        assert!(pair.b.0.trace().abs() < 1e-15);
    }

    #[test]
    fn dual_forms_against_independent_curvatures() {
        // On the bump metric, check the first identity with K(ghat)
        // analytic and K(g) from Brioschi stencils.
        let s = ProjectiveStructure::identity();
        let m = MetricField::torus_bump_default();
        let z = C::new(0.42, 0.58);
        let hat = projective_pair_at(&s, &m, z).unwrap();
        let pair = to_dual(&hat).unwrap();
        let gf = |w: C| dual_pair_at(&s, &m, w).map(|p| p.g.0);
        let k_g = brioschi_curvature(&gf, z, FD_STEP_2).unwrap();
        let k_hat = m.curvature(z).unwrap();
        let eps = Mat2::ID.add(&pair.b.0).det().signum();
        let lhs = k_g * pair.g.0.det().abs().sqrt();
        let rhs = eps * k_hat * hat.g.0.det().abs().sqrt();
        assert!((lhs - rhs).abs() < 1e-8, "independent forms defect {}", lhs - rhs);
    }
}
