//! Pointwise tensor algebra on the tangent plane of a planar chart.
//!
//! Conventions. Real basis is (d/dx, d/dy); the complex basis is
//! dz = (dx - i dy)/... more precisely d/dz = (d/dx - i d/dy)/2 and
//! d/dzbar = (d/dx + i d/dy)/2, with change of basis matrix
//! A = [[1/2, 1/2], [-i/2, i/2]] so a 2-tensor T written in the real basis
//! becomes A^t T A in the complex one. Storage is always the real basis;
//! complex components are derived views.
//!
//! A bilinear form S acts as S(X, Y) = X^t S Y, an endomorphism M as
//! X -> M X. The type change S = g . M (meaning S(X,Y) = g(MX, Y)) reads
//! S = M^t G on matrices, and Tr_g(S) = Tr(G^{-1} S^t).

use crate::error::{GeomError, Result};
use crate::C;

/// Relative tolerance for deciding that a metric is conformal.
pub const CONFORMAL_TOL: f64 = 1e-12;

/// Plain 2x2 real matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);
    pub const ID: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn scale(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn add(&self, o: &Mat2) -> Self {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn mul(&self, o: &Mat2) -> Self {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(GeomError::Singular { det });
        }
        Ok(Mat2::new(self.d, -self.b, -self.c, self.a).scale(1.0 / det))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn norm(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Eigenvalues of a matrix with real spectrum, via trace and
    /// determinant. A slightly negative discriminant from roundoff is
    /// clamped to zero. Returned sorted ascending.
    pub fn real_eigenvalues(&self) -> (f64, f64) {
        let t = self.trace();
        let disc = (t * t - 4.0 * self.det()).max(0.0).sqrt();
        ((t - disc) / 2.0, (t + disc) / 2.0)
    }

    /// Eigenvalues of a symmetric matrix by the cancellation-free
    /// formula m +/- hypot((a - d)/2, b); the trace/det route loses half
    /// the digits when the eigenvalues nearly coincide.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let m = (self.a + self.d) / 2.0;
        let r = ((self.a - self.d) / 2.0).hypot((self.b + self.c) / 2.0);
        (m - r, m + r)
    }

    /// Traceless part.
    pub fn traceless(&self) -> Mat2 {
        let h = self.trace() / 2.0;
        Mat2::new(self.a - h, self.b, self.c, self.d - h)
    }

    /// Largest two-norm amplification factor, for condition estimates.
    pub fn op_norm(&self) -> f64 {
        // singular values of a 2x2 via the standard closed form
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let s = a * a + b * b + c * c + d * d;
        let det = self.det();
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (s + disc)).sqrt()
    }

    pub fn cond(&self) -> f64 {
        let det = self.det().abs();
        if det == 0.0 {
            return f64::INFINITY;
        }
        let top = self.op_norm();
        top * top / det
    }
}

/// Real endomorphism of the tangent plane (basis d/dx, d/dy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endo2(pub Mat2);

/// Symmetric bilinear form on the tangent plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor2(pub Mat2);

impl SymTensor2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymTensor2(Mat2::new(xx, xy, xy, yy))
    }

    pub fn from_mat_symmetrized(m: Mat2) -> Self {
        let off = (m.b + m.c) / 2.0;
        SymTensor2(Mat2::new(m.a, off, off, m.d))
    }
}

/// Beltrami coefficient: the d/dz (x) dzbar component of a strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beltrami {
    pub nu: C,
}

/// Components of an endomorphism in the complex frame:
/// `E = w d/dz (x) dz + nu d/dz (x) dzbar + conjugates` for real E.
pub fn endo_complex_components(e: &Endo2) -> (C, C) {
    let m = &e.0;
    let w = C::new((m.a + m.d) / 2.0, (m.c - m.b) / 2.0);
    let nu = C::new((m.a - m.d) / 2.0, (m.b + m.c) / 2.0);
    (w, nu)
}

/// Checks that `g` is a positive multiple of the Euclidean metric and
/// returns the factor.
pub fn conformal_factor(g: &SymTensor2) -> Result<f64> {
    let m = &g.0;
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let defect = m.b.abs().max(m.c.abs()).max((m.a - m.d).abs());
    if defect > CONFORMAL_TOL * scale {
        return Err(GeomError::NonConformal { defect: defect / scale });
    }
    let lambda = (m.a + m.d) / 2.0;
    if lambda <= 0.0 {
        return Err(GeomError::NonPositive { det: m.det() });
    }
    Ok(lambda)
}

/// Splits a symmetric tensor as T = q dz^2 + conj(q) dzbar^2 + sigma g_euc.
///
/// The traceless part determines q = (T(dx,dx) - i T(dx,dy)) / 2 after
/// removing the pure trace sigma = Tr(T) / 2.
pub fn complexify(t: &SymTensor2) -> (C, f64) {
    let m = &t.0;
    let sigma = (m.a + m.d) / 2.0;
    let q = C::new((m.a - sigma) / 2.0, -m.b / 2.0);
    (q, sigma)
}

/// Inverse of [`complexify`].
pub fn reconstruct(q: C, sigma: f64) -> SymTensor2 {
    SymTensor2::new(sigma + 2.0 * q.re, -2.0 * q.im, sigma - 2.0 * q.re)
}

/// Area density of a conformal metric with respect to dx dy.
pub fn area_form(g: &SymTensor2) -> Result<f64> {
    conformal_factor(g)
}

/// Pairing density <T, E>_g with respect to dx dy, for conformal g.
///
/// The value does not depend on which conformal representative is passed;
/// the normalization satisfies <dz^2, d/dz (x) dzbar> = dx dy.
pub fn pairing(t: &SymTensor2, e: &Endo2, g: &SymTensor2) -> Result<f64> {
    conformal_factor(g)?;
    // For conformal g the general formula collapses to Tr(T E) / 2.
    Ok(t.0.mul(&e.0).trace() / 2.0)
}

/// Pairing density for a general positive metric: Tr_G(T . E) dA_G / 2.
pub fn pairing_metric(t: &Mat2, e: &Mat2, g: &Mat2) -> Result<f64> {
    let det = g.det();
    if det <= 0.0 {
        return Err(GeomError::NonPositive { det });
    }
    let ginv = g.inverse()?;
    // T.E has matrix E^t T, and Tr_G(S) = Tr(G^{-1} S^t).
    let s = e.transpose().mul(t);
    Ok(ginv.mul(&s.transpose()).trace() / 2.0 * det.sqrt())
}

/// Solves dg = 2 g . eta for the strain eta and extracts the Beltrami
/// coefficient of its traceless part.
pub fn strain(g: &SymTensor2, dg: &SymTensor2) -> Result<(Endo2, Beltrami)> {
    let lambda = conformal_factor(g)?;
    // dg = 2 g . eta reads dg = 2 eta^t G = 2 lambda eta on matrices.
    let eta = dg.0.scale(1.0 / (2.0 * lambda));
    let eta0 = eta.traceless();
    let (_, nu) = endo_complex_components(&Endo2(eta0));
    Ok((Endo2(eta), Beltrami { nu }))
}

/// Reconstructs dg from a strain, the inverse of [`strain`].
pub fn unstrain(g: &SymTensor2, eta: &Endo2) -> Result<SymTensor2> {
    let lambda = conformal_factor(g)?;
    Ok(SymTensor2::from_mat_symmetrized(eta.0.scale(2.0 * lambda)))
}

/// Both sides of the variational duality identity between the pairings of
/// (g, P) and the inverted pair (ghat, Phat).
///
/// ghat = g . P^2, Phat = P^{-1}; the induced variations are
/// dPhat = -P^{-1} dP P^{-1} and dghat = dg . P^2 + g . (dP P + P dP).
/// The identity states LHS = -sgn(det P) RHS with
/// LHS = <ghat, dPhat>_ghat + <dghat, Phat_0>_ghat and
/// RHS = <g, dP>_g + <dg, P_0>_g (densities with respect to dx dy).
pub fn variation_duality_sides(
    g: &SymTensor2,
    p: &Endo2,
    dg: &SymTensor2,
    dp: &Endo2,
) -> Result<(f64, f64)> {
    let lambda = conformal_factor(g)?;
    let det_p = p.0.det();
    if det_p.abs() < 1e-14 {
        return Err(GeomError::DegeneratePair { det: det_p });
    }
    let p_inv = p.0.inverse()?;
    let p2 = p.0.mul(&p.0);

    // ghat = g . P^2 as a matrix: (P^2)^t G = lambda (P^t)^2.
    let ghat = p2.transpose().scale(lambda);
    let dphat = p_inv.mul(&dp.0).mul(&p_inv).scale(-1.0);
    // dghat = dg . P^2 + g . (dP P + P dP)
    let dghat = p2
        .transpose()
        .mul(&dg.0)
        .add(&dp.0.mul(&p.0).add(&p.0.mul(&dp.0)).transpose().scale(lambda));

    let phat0 = p_inv.traceless();
    let p0 = p.0.traceless();

    let da_ghat = ghat.det().abs().sqrt();
    // <ghat, dPhat>_ghat = Tr(dPhat) dA_ghat / 2 for any metric ghat.
    let lhs = 0.5 * dphat.trace() * da_ghat + pairing_metric(&dghat, &phat0, &ghat)?;
    let rhs = 0.5 * dp.0.trace() * lambda + pairing_metric(&dg.0, &p0, &g.0)?;
    Ok((lhs, -det_p.signum() * rhs))
}

/// Absolute defect of the variational duality identity; zero in exact
/// arithmetic.
pub fn variation_duality_residual(
    g: &SymTensor2,
    p: &Endo2,
    dg: &SymTensor2,
    dp: &Endo2,
) -> Result<f64> {
    let (lhs, rhs) = variation_duality_sides(g, p, dg, dp)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn complexify_euclidean_identity() {
        let (q, sigma) = complexify(&SymTensor2::new(1.0, 0.0, 1.0));
        assert_eq!(q, C::new(0.0, 0.0));
        assert_eq!(sigma, 1.0);
    }

    #[test]
    fn complexify_diag_plus_minus() {
        let (q, sigma) = complexify(&SymTensor2::new(1.0, 0.0, -1.0));
        assert_eq!(q, C::new(0.5, 0.0));
        assert_eq!(sigma, 0.0);
    }

    #[test]
    fn complexify_off_diagonal() {
        let (q, sigma) = complexify(&SymTensor2::new(0.0, 1.0, 0.0));
        assert_eq!(q, C::new(0.0, -0.5));
        assert_eq!(sigma, 0.0);
    }

    #[test]
    fn complexify_round_trip_exact() {
        // Exactly representable halves round-trip bit for bit; generic
        // entries round-trip to within one rounding step.
        let t = SymTensor2::new(0.25, -1.5, 3.0);
        let (q, sigma) = complexify(&t);
        assert_eq!(reconstruct(q, sigma), t);

        let t = SymTensor2::new(0.3, -1.7, 2.9);
        let (q, sigma) = complexify(&t);
        let back = reconstruct(q, sigma);
        for (a, b) in [(back.0.a, t.0.a), (back.0.b, t.0.b), (back.0.d, t.0.d)] {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
        }
    }

    #[test]
    fn area_form_values() {
        assert_eq!(area_form(&SymTensor2::new(1.0, 0.0, 1.0)).unwrap(), 1.0);
        let phi: f64 = (2.0f64).ln(); // hyperbolic disk density at the origin
        let l = (2.0 * phi).exp();
        assert!(close(area_form(&SymTensor2::new(l, 0.0, l)).unwrap(), 4.0, 1e-12));
        assert!(area_form(&SymTensor2::new(1.0, 0.3, 1.0)).is_err());
        assert!(area_form(&SymTensor2::new(-1.0, 0.0, -1.0)).is_err());
    }

    #[test]
    fn pairing_trace_formula() {
        // T = g . A against B gives Tr(AB) dA_g / 2.
        let lambda = 2.5;
        let g = SymTensor2::new(lambda, 0.0, lambda);
        let a = Mat2::new(0.4, 1.0, 1.0, -0.2);
        let b = Endo2(Mat2::new(1.1, -0.3, 0.7, 0.5));
        // g . A has matrix A^t G = lambda A^t
        let t = SymTensor2::from_mat_symmetrized(a.transpose().scale(lambda));
        let got = pairing(&t, &b, &g).unwrap();
        let want = 0.5 * a.mul(&b.0).trace() * lambda;
        assert!(close(got, want, 1e-12 * want.abs().max(1.0)));
    }

    #[test]
    fn pairing_traceless_orthogonal_to_identity() {
        let t = SymTensor2::new(0.7, -0.4, -0.7);
        let g = SymTensor2::new(3.0, 0.0, 3.0);
        let got = pairing(&t, &Endo2(Mat2::ID), &g).unwrap();
        assert!(got.abs() < 1e-15);
    }

    #[test]
    fn pairing_normalization() {
        // Real representatives of dz^2 and d/dz (x) dzbar pair to 1.
        let t = SymTensor2::new(1.0, 0.0, -1.0);
        let e = Endo2(Mat2::diag(1.0, -1.0));
        let g = SymTensor2::new(1.0, 0.0, 1.0);
        assert!(close(pairing(&t, &e, &g).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn pairing_conformal_invariance() {
        let t = SymTensor2::new(0.2, 1.4, -0.9);
        let e = Endo2(Mat2::new(0.3, -0.8, 0.1, 1.9));
        let g1 = SymTensor2::new(1.0, 0.0, 1.0);
        let g2 = SymTensor2::new(7.3, 0.0, 7.3);
        let v1 = pairing(&t, &e, &g1).unwrap();
        let v2 = pairing(&t, &e, &g2).unwrap();
        assert!(close(v1, v2, 1e-13 * v1.abs().max(1.0)));
    }

    #[test]
    fn strain_examples() {
        let g = SymTensor2::new(2.0, 0.0, 2.0);
        // dg = 2 g: pure scaling, eta = Id, no strain.
        let (eta, mu) = strain(&g, &SymTensor2::new(4.0, 0.0, 4.0)).unwrap();
        assert_eq!(eta.0, Mat2::ID);
        assert_eq!(mu.nu, C::new(0.0, 0.0));
        // dg = Re(dz^2) with g = euclidean: nu = 1/2.
        let ge = SymTensor2::new(1.0, 0.0, 1.0);
        let (_, mu) = strain(&ge, &SymTensor2::new(1.0, 0.0, -1.0)).unwrap();
        assert_eq!(mu.nu, C::new(0.5, 0.0));
        // dg = 0
        let (eta, mu) = strain(&g, &SymTensor2::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(eta.0, Mat2::ZERO);
        assert_eq!(mu.nu, C::new(0.0, 0.0));
    }

    #[test]
    fn strain_round_trip() {
        let g = SymTensor2::new(1.7, 0.0, 1.7);
        let dg = SymTensor2::new(0.31, -0.77, 1.23);
        let (eta, _) = strain(&g, &dg).unwrap();
        let back = unstrain(&g, &eta).unwrap();
        assert!(close(back.0.a, dg.0.a, 1e-15));
        assert!(close(back.0.b, dg.0.b, 1e-15));
        assert!(close(back.0.d, dg.0.d, 1e-15));
    }

    #[test]
    fn variation_duality_trivial() {
        let g = SymTensor2::new(1.0, 0.0, 1.0);
        let r = variation_duality_residual(
            &g,
            &Endo2(Mat2::ID),
            &SymTensor2::new(0.0, 0.0, 0.0),
            &Endo2(Mat2::ZERO),
        )
        .unwrap();
        assert!(r.abs() < 1e-15);
    }

    #[test]
    fn variation_duality_negative_det() {
        let g = SymTensor2::new(1.3, 0.0, 1.3);
        let p = Endo2(Mat2::diag(1.0, -2.0));
        let dg = SymTensor2::new(0.21, 0.05, -0.4);
        let dp = Endo2(Mat2::new(0.3, 0.9, 0.9, -0.1));
        let r = variation_duality_residual(&g, &p, &dg, &dp).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn degenerate_pair_rejected() {
        let g = SymTensor2::new(1.0, 0.0, 1.0);
        let p = Endo2(Mat2::diag(1.0, 0.0));
        let err = variation_duality_residual(
            &g,
            &p,
            &SymTensor2::new(0.0, 0.0, 0.0),
            &Endo2(Mat2::ZERO),
        );
        assert!(matches!(err, Err(GeomError::DegeneratePair { .. })));
    }
}
