//! Pointwise univalence and quasiconformal-extension criteria, the z^c
//! family with its region scans, and assembly of the extension map from
//! the backward Gauss map.
//!
//! The classifiers compare 4 ||Q(Sigma, g)|| with -K(g): pointwise
//! inequality gives univalence with continuous boundary extension,
//! strict inequality a homeomorphic extension of the sphere, and a
//! uniform ratio bound k < 1 a quasiconformal extension whose Beltrami
//! coefficient satisfies |mu| = 4 ||Q|| / (-K) <= k.

use crate::epstein::{epstein_point_for, gauss_maps, BoundaryPoint};
use crate::error::{GeomError, Result};
use crate::field::{AngularProfile, MetricField};
use crate::schwarzian::{norm_q, ProjectiveStructure};
use crate::C;

/// Slack allowed when reporting a pointwise inequality as satisfied.
pub const CRITERION_PAD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    NoConclusion,
    UnivalentWithContinuousExtension,
    HomeomorphicExtension,
    QcExtension { k: f64 },
}

impl Classification {
    pub fn label(&self) -> String {
        match self {
            Classification::NoConclusion => "no-conclusion".into(),
            Classification::UnivalentWithContinuousExtension => {
                "univalent-with-continuous-extension".into()
            }
            Classification::HomeomorphicExtension => "homeomorphic-extension".into(),
            Classification::QcExtension { k } => format!("qc-extension(k={k})"),
        }
    }
}

/// Outcome of the grid classification.
#[derive(Debug, Clone, Copy)]
pub struct CriterionReport {
    /// sup over the grid of 4 ||Q|| / (-K), over points with K < 0
    pub sup_ratio: f64,
    pub classification: Classification,
    /// grid point attaining the sup
    pub witness: C,
    /// K < 0 held at every grid point
    pub negative_curvature: bool,
}

/// Evaluates the criteria of (Sigma, m) over the metric's grid.
pub fn classify(s: &ProjectiveStructure, m: &MetricField) -> Result<CriterionReport> {
    let pts = m.sample_points();
    if pts.is_empty() {
        return Err(GeomError::EmptyGrid);
    }
    let mut sup_ratio = f64::NEG_INFINITY;
    let mut witness = pts[0];
    let mut negative_curvature = true;
    let mut pointwise_ok = true;
    let mut strict = true;
    for z in pts {
        let k = m.curvature(z)?;
        let nq = norm_q(s, m, z)?;
        // pointwise criterion 4 ||Q|| <= -K, padded
        if 4.0 * nq + k > CRITERION_PAD {
            pointwise_ok = false;
        }
        if 4.0 * nq + k >= 0.0 {
            strict = false;
        }
        if k < 0.0 {
            let ratio = 4.0 * nq / (-k);
            if ratio > sup_ratio {
                sup_ratio = ratio;
                witness = z;
            }
        } else {
            negative_curvature = false;
        }
    }
    let classification = if !pointwise_ok {
        Classification::NoConclusion
    } else if negative_curvature && sup_ratio < 1.0 {
        Classification::QcExtension { k: sup_ratio }
    } else if strict {
        Classification::HomeomorphicExtension
    } else {
        Classification::UnivalentWithContinuousExtension
    };
    Ok(CriterionReport { sup_ratio, classification, witness, negative_curvature })
}

// ---------------------------------------------------------------------------
// The z^c family
// ---------------------------------------------------------------------------

/// The pointwise criterion for f = z^c against the cone metric
/// e^{2(-log r + h(theta))}: |h'^2 + c^2 - h''| <= h''.
pub fn zc_pointwise(c: C, h: &AngularProfile, theta: f64) -> bool {
    let (_, h1, h2, _) = h.jets(theta);
    (C::new(h1 * h1 - h2, 0.0) + c * c).norm() <= h2 + CRITERION_PAD
}

/// Number of theta samples in the all-angle conjunction.
pub const THETA_SAMPLES: usize = 512;

/// Conjunction of [`zc_pointwise`] over the theta grid.
pub fn zc_all_angles(c: C, h: &AngularProfile) -> bool {
    (0..THETA_SAMPLES).all(|j| {
        let theta = std::f64::consts::PI * (j as f64 + 0.5) / THETA_SAMPLES as f64;
        zc_pointwise(c, h, theta)
    })
}

/// Exact univalence region of z^c on the half-plane: writing z = e^w on
/// the strip 0 < Im w < pi, injectivity of c w modulo 2 pi i Z amounts
/// to |c|^2 <= 2 |Re c|, the union of the two closed unit disks around
/// +1 and -1 (minus 0).
pub fn power_univalence_exact(c: C) -> bool {
    c.norm_sqr() <= 2.0 * c.re.abs() && c.norm() > 0.0
}

/// Boolean mask of the criterion over a rectangle of exponents.
#[derive(Debug, Clone)]
pub struct RegionScan {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
    pub n_re: usize,
    pub n_im: usize,
    /// row-major in Im c
    pub mask: Vec<bool>,
}

impl RegionScan {
    pub fn c_at(&self, i: usize, j: usize) -> C {
        C::new(
            self.re0 + (self.re1 - self.re0) * i as f64 / (self.n_re - 1) as f64,
            self.im0 + (self.im1 - self.im0) * j as f64 / (self.n_im - 1) as f64,
        )
    }

    pub fn at(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.n_re + i]
    }

    /// CSV rows (Re c, Im c, satisfied).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_c,im_c,satisfied\n");
        for j in 0..self.n_im {
            for i in 0..self.n_re {
                let c = self.c_at(i, j);
                out.push_str(&format!("{},{},{}\n", c.re, c.im, u8::from(self.at(i, j))));
            }
        }
        out
    }

    /// Simple SVG with the mask boundary as marching-squares segments.
    pub fn to_svg(&self) -> String {
        let mut segs: Vec<(C, C)> = Vec::new();
        for j in 0..self.n_im.saturating_sub(1) {
            for i in 0..self.n_re.saturating_sub(1) {
                let corners =
                    [self.at(i, j), self.at(i + 1, j), self.at(i + 1, j + 1), self.at(i, j + 1)];
                let code = corners
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (k, &b)| acc | (usize::from(b) << k));
                if code == 0 || code == 15 {
                    continue;
                }
                let (a, b, c, d) = (
                    self.c_at(i, j),
                    self.c_at(i + 1, j),
                    self.c_at(i + 1, j + 1),
                    self.c_at(i, j + 1),
                );
                let mid = |p: C, q: C| (p + q) / 2.0;
                // edge midpoints: bottom, right, top, left
                let e = [mid(a, b), mid(b, c), mid(c, d), mid(d, a)];
                let pairs: &[(usize, usize)] = match code {
                    1 | 14 => &[(3, 0)],
                    2 | 13 => &[(0, 1)],
                    3 | 12 => &[(3, 1)],
                    4 | 11 => &[(1, 2)],
                    6 | 9 => &[(0, 2)],
                    7 | 8 => &[(2, 3)],
                    5 => &[(3, 0), (1, 2)],
                    10 => &[(0, 1), (2, 3)],
                    _ => &[],
                };
                for (u, v) in pairs {
                    segs.push((e[*u], e[*v]));
                }
            }
        }
        let (w, h) = (640.0, 640.0);
        let sx = |x: f64| (x - self.re0) / (self.re1 - self.re0) * w;
        let sy = |y: f64| h - (y - self.im0) / (self.im1 - self.im0) * h;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        for (p, q) in segs {
            out.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n",
                sx(p.re),
                sy(p.im),
                sx(q.re),
                sy(q.im)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Scans the criterion mask for the given angular profile over a
/// rectangle in the exponent plane, in parallel over rows with a
/// deterministic assembly order.
pub fn region_scan(
    h: &AngularProfile,
    (re0, re1): (f64, f64),
    (im0, im1): (f64, f64),
    n_re: usize,
    n_im: usize,
) -> RegionScan {
    use rayon::prelude::*;
    let mask: Vec<bool> = (0..n_re * n_im)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % n_re, idx / n_re);
            let c = C::new(
                re0 + (re1 - re0) * i as f64 / (n_re - 1) as f64,
                im0 + (im1 - im0) * j as f64 / (n_im - 1) as f64,
            );
            zc_all_angles(c, h)
        })
        .collect();
    RegionScan { re0, re1, im0, im1, n_re, n_im, mask }
}

// ---------------------------------------------------------------------------
// Quasiconformal extension
// ---------------------------------------------------------------------------

/// The extension of the developing map across the unit circle, built
/// from the backward Gauss map: f_ext(z) = h(1 / conj(z)) outside the
/// closed disk, f_ext = f inside.
pub struct QcExtensionMap<'a> {
    pub s: &'a ProjectiveStructure,
    pub m: &'a MetricField,
    pub report: CriterionReport,
}

impl<'a> QcExtensionMap<'a> {
    /// Classifies first; only criterion cases 2 and 3 admit the
    /// construction.
    pub fn new(s: &'a ProjectiveStructure, m: &'a MetricField) -> Result<Self> {
        let report = classify(s, m)?;
        match report.classification {
            Classification::HomeomorphicExtension | Classification::QcExtension { .. } => {
                Ok(QcExtensionMap { s, m, report })
            }
            _ => Err(GeomError::Config(format!(
                "extension requires criterion case 2 or 3, got {} (sup ratio {})",
                report.classification.label(),
                report.sup_ratio
            ))),
        }
    }

    /// Backward Gauss map at a chart point of the disk.
    pub fn second_gauss(&self, w: C) -> Result<BoundaryPoint> {
        let jet = epstein_point_for(self.s, self.m, w)?;
        Ok(gauss_maps(&jet).1)
    }

    /// The extension at z; outside the closed unit disk this is the
    /// reflected backward Gauss map, inside it is the map itself.
    pub fn eval(&self, z: C) -> Result<BoundaryPoint> {
        if z.norm() > 1.0 {
            self.second_gauss(C::new(z.re, z.im) / z.norm_sqr())
        } else {
            Ok(BoundaryPoint::Point(self.s.jet(z)?.f))
        }
    }

    /// Finite extension value, for grids known to stay off infinity.
    pub fn eval_point(&self, z: C) -> Result<C> {
        match self.eval(z)? {
            BoundaryPoint::Point(w) => Ok(w),
            BoundaryPoint::Infinity => Err(GeomError::InversionFailure { z }),
        }
    }

    /// Numerical inverse of the extension: coarse search over the given
    /// candidates, then Newton refinement with a difference Jacobian.
    pub fn invert(&self, target: C, candidates: &[C]) -> Result<C> {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for &z in candidates {
            if let Ok(w) = self.eval_point(z) {
                let d = (w - target).norm();
                if d < best_d {
                    best_d = d;
                    best = Some(z);
                }
            }
        }
        let mut z = best.ok_or(GeomError::InversionFailure { z: target })?;
        let h = 1e-6;
        for _ in 0..40 {
            let f0 = self.eval_point(z)?;
            if (f0 - target).norm() < 1e-12 {
                return Ok(z);
            }
            let fx = (self.eval_point(z + C::new(h, 0.0))? - self.eval_point(z - C::new(h, 0.0))?)
                / (2.0 * h);
            let fy = (self.eval_point(z + C::new(0.0, h))? - self.eval_point(z - C::new(0.0, h))?)
                / (2.0 * h);
            // real 2x2 Newton step J d = target - f0
            let r = target - f0;
            let det = fx.re * fy.im - fy.re * fx.im;
            if det.abs() < 1e-18 {
                break;
            }
            let dx = (r.re * fy.im - fy.re * r.im) / det;
            let dy = (fx.re * r.im - r.re * fx.im) / det;
            let mut step = C::new(dx, dy);
            // backtrack when a step lands where the extension cannot be
            // evaluated (for instance too close to the unit circle)
            let mut tried = 0;
            while self.eval_point(z + step).is_err() && tried < 8 {
                step /= 2.0;
                tried += 1;
            }
            z += step;
            if step.norm() < 1e-13 {
                break;
            }
        }
        if (self.eval_point(z)? - target).norm() < 1e-8 {
            Ok(z)
        } else {
            Err(GeomError::InversionFailure { z: target })
        }
    }

    /// The reflection H = f_ext . C . f_ext^{-1} with C(z) = 1/conj(z);
    /// fixes the image curve and swaps the two sides.
    pub fn reflection(&self, z: C, candidates: &[C]) -> Result<C> {
        if !matches!(self.report.classification, Classification::QcExtension { .. }) {
            return Err(GeomError::Config("reflection requires the quasiconformal case".into()));
        }
        let pre = self.invert(z, candidates)?;
        let refl = C::new(pre.re, pre.im) / pre.norm_sqr();
        self.eval_point(refl)
    }
}

/// Beltrami coefficient of a map by central differences:
/// mu = f_zbar / f_z with f_z = (f_x - i f_y)/2, f_zbar = (f_x + i f_y)/2.
pub fn beltrami_fd(f: &dyn Fn(C) -> Result<C>, z: C, h: f64) -> Result<C> {
    let fx = (f(z + C::new(h, 0.0))? - f(z - C::new(h, 0.0))?) / (2.0 * h);
    let fy = (f(z + C::new(0.0, h))? - f(z - C::new(0.0, h))?) / (2.0 * h);
    let i = C::new(0.0, 1.0);
    let dz = (fx - i * fy) / 2.0;
    let dzb = (fx + i * fy) / 2.0;
    Ok(dzb / dz)
}

/// Annulus sample grid r0 <= |z| <= r1, n_r x n_t points.
pub fn annulus_grid(r0: f64, r1: f64, n_r: usize, n_t: usize) -> Vec<C> {
    let mut out = Vec::with_capacity(n_r * n_t);
    for ir in 0..n_r {
        let r = r0 + (r1 - r0) * ir as f64 / (n_r - 1) as f64;
        for it in 0..n_t {
            let th = std::f64::consts::TAU * it as f64 / n_t as f64;
            out.push(C::from_polar(r, th));
        }
    }
    out
}
