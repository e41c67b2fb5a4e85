//! Schwarzian tensors of conformal metric pairs and projective
//! structures, the projective second fundamental form, and holomorphy
//! diagnostics.
//!
//! The quadratic differential of a metric pair (g_0, e^{2f} g_0) on a
//! chart is Q(f; g_phi) = f_zz - 2 phi_z f_z - (f_z)^2; for a projective
//! structure with developing map f the cocycle identity turns this into
//! Q(Sigma, g) = (phi_zz - phi_z^2) - S f / 2 against the Euclidean
//! background, which is how everything here is evaluated.

use crate::error::{GeomError, Result};
use crate::field::{MetricField, SJet2, ScalarJet};
use crate::tensor::{Endo2, Mat2};
use crate::C;

// ---------------------------------------------------------------------------
// Developing maps
// ---------------------------------------------------------------------------

/// 3-jet of a holomorphic map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoloJet {
    pub f: C,
    pub d1: C,
    pub d2: C,
    pub d3: C,
}

impl HoloJet {
    /// Chain rule for outer(inner(z)) given the jets of both maps.
    pub fn compose(outer: &HoloJet, inner: &HoloJet) -> HoloJet {
        let (g1, g2, g3) = (outer.d1, outer.d2, outer.d3);
        let (m1, m2, m3) = (inner.d1, inner.d2, inner.d3);
        HoloJet {
            f: outer.f,
            d1: g1 * m1,
            d2: g2 * m1 * m1 + g1 * m2,
            d3: g3 * m1 * m1 * m1 + 3.0 * g2 * m1 * m2 + g1 * m3,
        }
    }
}

/// Locally univalent developing maps available to the toolkit.
#[derive(Debug, Clone, PartialEq)]
pub enum DevelopingMap {
    Identity,
    Moebius { a: C, b: C, c: C, d: C },
    /// z^c on the upper half-plane, principal branch (arg z in (0, pi)).
    Power { c: C },
    /// z^c transported to the unit disk by the Cayley map
    /// w -> i (1 - w) / (1 + w).
    PowerDisk { c: C },
    Exp,
}

/// A complex projective structure presented by a developing map on the
/// chart of whichever metric it is paired with.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveStructure {
    pub dev: DevelopingMap,
}

impl ProjectiveStructure {
    pub fn identity() -> Self {
        ProjectiveStructure { dev: DevelopingMap::Identity }
    }

    pub fn power(c: C) -> Self {
        ProjectiveStructure { dev: DevelopingMap::Power { c } }
    }

    pub fn power_disk(c: C) -> Self {
        ProjectiveStructure { dev: DevelopingMap::PowerDisk { c } }
    }

    pub fn moebius(a: C, b: C, c: C, d: C) -> Self {
        ProjectiveStructure { dev: DevelopingMap::Moebius { a, b, c, d } }
    }

    /// The Cayley map sending the unit disk onto the upper half-plane,
    /// as a Moebius jet.
    fn cayley_jet(w: C) -> HoloJet {
        moebius_jet(C::new(0.0, -1.0), C::new(0.0, 1.0), C::new(1.0, 0.0), C::new(1.0, 0.0), w)
    }

    pub fn jet(&self, z: C) -> Result<HoloJet> {
        let j = match &self.dev {
            DevelopingMap::Identity => HoloJet {
                f: z,
                d1: C::new(1.0, 0.0),
                d2: C::new(0.0, 0.0),
                d3: C::new(0.0, 0.0),
            },
            DevelopingMap::Moebius { a, b, c, d } => moebius_jet(*a, *b, *c, *d, z),
            DevelopingMap::Power { c } => power_jet(*c, z),
            DevelopingMap::PowerDisk { c } => {
                let inner = Self::cayley_jet(z);
                HoloJet::compose(&power_jet(*c, inner.f), &inner)
            }
            DevelopingMap::Exp => {
                let e = z.exp();
                HoloJet { f: e, d1: e, d2: e, d3: e }
            }
        };
        if j.d1.norm() < 1e-300 || !j.d1.is_finite() {
            return Err(GeomError::CriticalPoint { z });
        }
        Ok(j)
    }
}

fn moebius_jet(a: C, b: C, c: C, d: C, z: C) -> HoloJet {
    let det = a * d - b * c;
    let den = c * z + d;
    HoloJet {
        f: (a * z + b) / den,
        d1: det / (den * den),
        d2: -2.0 * c * det / (den * den * den),
        d3: 6.0 * c * c * det / (den * den * den * den),
    }
}

fn power_jet(c: C, z: C) -> HoloJet {
    // principal branch, used on the upper half-plane where it is smooth
    let f = (c * z.ln()).exp();
    let one = C::new(1.0, 0.0);
    HoloJet {
        f,
        d1: c * f / z,
        d2: c * (c - one) * f / (z * z),
        d3: c * (c - one) * (c - 2.0 * one) * f / (z * z * z),
    }
}

/// log |f'| as a scalar field with analytic jets; harmonic away from
/// critical points.
pub struct LogAbsDeriv<'a>(pub &'a ProjectiveStructure);

impl ScalarJet for LogAbsDeriv<'_> {
    fn jet2(&self, z: C) -> SJet2 {
        let j = self.0.jet(z).expect("critical point in LogAbsDeriv");
        let pre = j.d2 / j.d1;
        SJet2 {
            v: j.d1.norm().ln(),
            dz: pre / 2.0,
            dzz: (j.d3 / j.d1 - pre * pre) / 2.0,
            dzzb: 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Schwarzian and Osgood-Stowe quantities
// ---------------------------------------------------------------------------

/// Schwarzian derivative S f = f'''/f' - (3/2)(f''/f')^2.
pub fn schwarzian_derivative(s: &ProjectiveStructure, z: C) -> Result<C> {
    let j = s.jet(z)?;
    let r = j.d2 / j.d1;
    Ok(j.d3 / j.d1 - 1.5 * r * r)
}

/// dz^2-coefficient of the Osgood-Stowe differential of
/// (g_phi, e^{2f} g_phi): f_zz - 2 phi_z f_z - (f_z)^2.
pub fn os_q(base: &MetricField, f: &dyn ScalarJet, z: C) -> Result<C> {
    let phi = base.phi_jet2(z)?;
    let j = f.jet2(z);
    Ok(j.dzz - 2.0 * phi.dz * j.dz - j.dz * j.dz)
}

/// Schwarzian tensor coefficient Q(Sigma, m) at z, via the cocycle
/// through the Euclidean background: (phi_zz - phi_z^2) - S f / 2.
pub fn q_sigma(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<C> {
    let phi = m.phi_jet2(z)?;
    Ok(phi.dzz - phi.dz * phi.dz - schwarzian_derivative(s, z)? / 2.0)
}

/// Analytic zbar-derivative of Q(Sigma, m) where third-order jets exist.
/// The developing-map part is holomorphic and drops out.
pub fn q_sigma_zbar_analytic(m: &MetricField, z: C) -> Option<C> {
    let j2 = m.phi_jet2(z).ok()?;
    let j3 = m.phi_jet3(z)?;
    Some(j3.dzzzb - 2.0 * j2.dz * j2.dzzb)
}

/// Pointwise norm of the Schwarzian tensor: |Q| / e^{2 phi}.
pub fn norm_q(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<f64> {
    Ok(q_sigma(s, m, z)?.norm() * (-2.0 * m.phi_jet2(z)?.v).exp())
}

/// Real symmetric matrix of Q dz^2 + conj(Q) dzbar^2.
pub fn os_matrix(q: C) -> Mat2 {
    Mat2::new(2.0 * q.re, -2.0 * q.im, -2.0 * q.im, -2.0 * q.re)
}

/// Projective shape operator: the endomorphism with
/// m . Bhat = 2 OS(Sigma, m) - K(m) m, trace -2K, eigenvalues
/// -K +/- 4 |Q|/e^{2 phi}.
pub fn shape_operator_hat(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<Endo2> {
    let phi = m.phi_jet2(z)?;
    let q = q_sigma(s, m, z)?;
    let k = -4.0 * (-2.0 * phi.v).exp() * phi.dzzb;
    let os = os_matrix(q).scale(2.0 * (-2.0 * phi.v).exp());
    Ok(Endo2(os.sub(&Mat2::ID.scale(k))))
}

// ---------------------------------------------------------------------------
// Quadratic differential fields
// ---------------------------------------------------------------------------

/// A quadratic differential q(z) dz^2 carried as a complex scalar field
/// together with its zbar-derivative (analytic where available,
/// otherwise 4th-order differences of q).
pub struct QuadDiffField<'a> {
    q: Box<dyn Fn(C) -> Result<C> + Sync + 'a>,
    q_zbar: Option<Box<dyn Fn(C) -> Result<C> + Sync + 'a>>,
    /// step for the fallback difference stencil
    pub fd_step: f64,
}

/// 4th-order central difference of a complex field along direction `dir`.
pub fn fd4_dir(f: &dyn Fn(C) -> Result<C>, z: C, dir: C, h: f64) -> Result<C> {
    let e = dir * h;
    Ok((-f(z + 2.0 * e)? + 8.0 * f(z + e)? - 8.0 * f(z - e)? + f(z - 2.0 * e)?) / (12.0 * h))
}

/// 4th-order zbar-derivative of a complex field: (d/dx + i d/dy) / 2.
pub fn fd4_zbar(f: &dyn Fn(C) -> Result<C>, z: C, h: f64) -> Result<C> {
    let dx = fd4_dir(f, z, C::new(1.0, 0.0), h)?;
    let dy = fd4_dir(f, z, C::new(0.0, 1.0), h)?;
    Ok((dx + C::new(0.0, 1.0) * dy) / 2.0)
}

impl<'a> QuadDiffField<'a> {
    pub fn new(q: impl Fn(C) -> Result<C> + Sync + 'a) -> Self {
        QuadDiffField { q: Box::new(q), q_zbar: None, fd_step: 1e-3 }
    }

    pub fn with_zbar(
        q: impl Fn(C) -> Result<C> + Sync + 'a,
        q_zbar: impl Fn(C) -> Result<C> + Sync + 'a,
    ) -> Self {
        QuadDiffField { q: Box::new(q), q_zbar: Some(Box::new(q_zbar)), fd_step: 1e-3 }
    }

    /// The Schwarzian tensor of (Sigma, m) as a quadratic differential
    /// field, analytic zbar-derivative when the metric has 3-jets.
    pub fn schwarzian(s: &'a ProjectiveStructure, m: &'a MetricField) -> Self {
        let has3 = m.phi_jet3(first_point(m)).is_some();
        let q = move |z| q_sigma(s, m, z);
        if has3 {
            QuadDiffField {
                q: Box::new(q),
                q_zbar: Some(Box::new(move |z| {
                    q_sigma_zbar_analytic(m, z).ok_or(GeomError::OutsideChart { z })
                })),
                fd_step: 1e-3,
            }
        } else {
            QuadDiffField::new(q)
        }
    }

    pub fn eval(&self, z: C) -> Result<C> {
        (self.q)(z)
    }

    pub fn zbar(&self, z: C) -> Result<C> {
        match &self.q_zbar {
            Some(f) => f(z),
            None => fd4_zbar(self.q.as_ref(), z, self.fd_step),
        }
    }

    /// CSV rows (x, y, Re q, Im q, |q|/e^{2 phi}) over the metric's
    /// evaluation grid.
    pub fn to_csv(&self, m: &MetricField) -> Result<String> {
        let mut out = String::from("x,y,re_q,im_q,norm_q\n");
        for z in m.sample_points() {
            let q = self.eval(z)?;
            let nq = q.norm() * (-2.0 * m.phi_jet2(z)?.v).exp();
            out.push_str(&format!("{},{},{},{},{}\n", z.re, z.im, q.re, q.im, nq));
        }
        Ok(out)
    }
}

fn first_point(m: &MetricField) -> C {
    m.sample_points().into_iter().next().unwrap_or(C::new(0.0, 0.0))
}

/// Residual 2 r_zbar + s_z e^{2 phi} of the Codazzi equation for the
/// tensor r dz^2 + conj(r) dzbar^2 - s g.
pub fn codazzi_residual(r: &QuadDiffField, s_z: C, m: &MetricField, z: C) -> Result<C> {
    let phi = m.phi_jet2(z)?;
    Ok(2.0 * r.zbar(z)? + s_z * (2.0 * phi.v).exp())
}

/// Largest |dQ/dzbar| over the evaluation grid; vanishes exactly for
/// constant-curvature metrics.
pub fn holomorphy_defect_sup(s: &ProjectiveStructure, m: &MetricField) -> Result<f64> {
    let q = QuadDiffField::schwarzian(s, m);
    let mut sup: f64 = 0.0;
    for z in m.sample_points() {
        sup = sup.max(q.zbar(z)?.norm());
    }
    Ok(sup)
}
