//! Surfaces in hyperbolic 3-space from conformal metrics at infinity:
//! null lifts, the horosphere-envelope map, hyperbolic Gauss maps, and
//! an independent flat-connection (Bonnet) integration oracle.
//!
//! Minkowski model: R^{3,1} with <x,y> = x1 y1 + x2 y2 + x3 y3 - x4 y4,
//! hyperboloid <p,p> = -1, x4 > 0, boundary identified with the Riemann
//! sphere through stereographic projection of the projectivized light
//! cone: sigma(z) = (2 Re z, 2 Im z, |z|^2 - 1) / (1 + |z|^2).
//!
//! A conformal density e^{2 phi} at z lifts to the light-cone point
//! xi(z) = e^{phi(z)} (2 Re z, 2 Im z, |z|^2 - 1, |z|^2 + 1) / 2. The
//! calibration makes the horosphere {p : <p, xi> = -1} the locus where
//! the visual metric matches the density at z; with it, every horosphere
//! of the spherical metric passes through (0,0,0,1). The surface
//! attached to the metric is the envelope of these horospheres:
//! <p, xi> = -1, <p, xi_x> = <p, xi_y> = 0, <p, p> = -1. The kernel
//! direction of the three linear conditions is xi itself (xi is null and
//! orthogonal to its derivatives), so intersecting with the hyperboloid
//! is one more linear solve rather than a quadratic root choice.

use crate::duality::{christoffel, dual_pair_at, gc_residuals_pair, FundamentalPair, FD_STEP_1};
use crate::error::{GeomError, Result};
use crate::field::MetricField;
use crate::schwarzian::ProjectiveStructure;
use crate::tensor::Mat2;
use crate::C;

/// Vector in R^{3,1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinkVec(pub [f64; 4]);

impl MinkVec {
    pub const ZERO: MinkVec = MinkVec([0.0; 4]);

    pub fn dot(&self, o: &MinkVec) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2] - self.0[3] * o.0[3]
    }

    pub fn add(&self, o: &MinkVec) -> MinkVec {
        MinkVec([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }

    pub fn sub(&self, o: &MinkVec) -> MinkVec {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> MinkVec {
        MinkVec([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn euclid_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Hyperbolic distance between hyperboloid points, via the chord
/// identity sinh(d/2) = |p - q|_M / 2 which stays well conditioned for
/// nearby points (cosh d loses half the digits there).
pub fn hyp_distance(p: &MinkVec, q: &MinkVec) -> f64 {
    let d = p.sub(q);
    2.0 * (0.5 * d.dot(&d).max(0.0).sqrt()).asinh()
}

/// A point of the boundary sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    Point(C),
    Infinity,
}

impl BoundaryPoint {
    pub fn unwrap_point(&self) -> C {
        match self {
            BoundaryPoint::Point(z) => *z,
            BoundaryPoint::Infinity => panic!("boundary point at infinity"),
        }
    }
}

/// Stereographic image of z on the unit sphere (ambient coordinates).
pub fn stereographic(z: C) -> [f64; 3] {
    let d = 1.0 + z.norm_sqr();
    [2.0 * z.re / d, 2.0 * z.im / d, (z.norm_sqr() - 1.0) / d]
}

/// Inverse stereographic projection of a unit-sphere point.
pub fn stereographic_inv(p: [f64; 3]) -> BoundaryPoint {
    let den = 1.0 - p[2];
    if den.abs() < 1e-12 {
        BoundaryPoint::Infinity
    } else {
        BoundaryPoint::Point(C::new(p[0] / den, p[1] / den))
    }
}

// ---------------------------------------------------------------------------
// Null lifts
// ---------------------------------------------------------------------------

fn base_null(w: C) -> MinkVec {
    MinkVec([2.0 * w.re, 2.0 * w.im, w.norm_sqr() - 1.0, w.norm_sqr() + 1.0])
}

/// Light-cone lift of the metric at z together with its chart
/// derivatives, for the identity structure:
/// xi = e^{phi} (2x, 2y, |z|^2 - 1, |z|^2 + 1) / 2.
pub fn null_lift(m: &MetricField, z: C) -> Result<(MinkVec, MinkVec, MinkVec)> {
    null_lift_for(&ProjectiveStructure::identity(), m, z)
}

/// Null lift of (Sigma, m): the horosphere family lives at f(z) with the
/// pushed-forward density e^{phi(z)} / |f'(z)|.
pub fn null_lift_for(
    s: &ProjectiveStructure,
    m: &MetricField,
    z: C,
) -> Result<(MinkVec, MinkVec, MinkVec)> {
    let phi = m.phi_jet2(z)?;
    let j = s.jet(z)?;
    let w = j.f;
    // rho = phi - log |f'|, in real partials
    let rho_z = phi.dz - j.d2 / j.d1 / 2.0;
    let (rho_x, rho_y) = (2.0 * rho_z.re, -2.0 * rho_z.im);
    let lam = (phi.v - j.d1.norm().ln()).exp() / 2.0;

    let v = base_null(w);
    let vu = MinkVec([1.0, 0.0, w.re, w.re]).scale(2.0);
    let vw = MinkVec([0.0, 1.0, w.im, w.im]).scale(2.0);
    // chart derivatives of w = f(z) through the Cauchy-Riemann pairs
    let vx = vu.scale(j.d1.re).add(&vw.scale(j.d1.im));
    let vy = vu.scale(-j.d1.im).add(&vw.scale(j.d1.re));

    let xi = v.scale(lam);
    let xi_x = v.scale(rho_x).add(&vx).scale(lam);
    let xi_y = v.scale(rho_y).add(&vy).scale(lam);
    Ok((xi, xi_x, xi_y))
}

// ---------------------------------------------------------------------------
// Envelope of horospheres
// ---------------------------------------------------------------------------

/// Per-point surface data: position, unit normal and fundamental pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsteinJet {
    pub z: C,
    pub p: MinkVec,
    pub n: MinkVec,
    pub pair: FundamentalPair,
}

/// Solves <p,xi> = -1, <p,xi_x> = 0, <p,xi_y> = 0 for one particular
/// solution by Gaussian elimination with full pivoting.
fn envelope_particular(z: C, xi: &MinkVec, xi_x: &MinkVec, xi_y: &MinkVec) -> Result<MinkVec> {
    // Minkowski pairing as a Euclidean row: flip the sign of the time slot
    let row = |v: &MinkVec| [v.0[0], v.0[1], v.0[2], -v.0[3]];
    let mut a = [row(xi), row(xi_x), row(xi_y)];
    let mut rhs = [-1.0, 0.0, 0.0];
    let scale = xi.euclid_norm().max(xi_x.euclid_norm()).max(xi_y.euclid_norm());
    let mut col_of_row = [usize::MAX; 3];
    let mut used = [false; 4];
    for k in 0..3 {
        let (mut pr, mut pc, mut best) = (k, 0, -1.0);
        for r in k..3 {
            for c in 0..4 {
                if !used[c] && a[r][c].abs() > best {
                    best = a[r][c].abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        if best < 1e-10 * scale.max(1.0) {
            return Err(GeomError::EnvelopeDegenerate {
                z,
                detail: format!("lift derivatives dependent (pivot {best:.3e})"),
            });
        }
        a.swap(k, pr);
        rhs.swap(k, pr);
        used[pc] = true;
        col_of_row[k] = pc;
        for r in 0..3 {
            if r != k {
                let f = a[r][pc] / a[k][pc];
                for c in 0..4 {
                    a[r][c] -= f * a[k][c];
                }
                rhs[r] -= f * rhs[k];
            }
        }
    }
    let mut x = [0.0; 4]; // the free column stays 0
    for k in 0..3 {
        x[col_of_row[k]] = rhs[k] / a[k][col_of_row[k]];
    }
    Ok(MinkVec(x))
}

/// Envelope position alone, used for stencils and the map itself.
pub fn envelope_position(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<MinkVec> {
    let (xi, xi_x, xi_y) = null_lift_for(s, m, z)?;
    let p0 = envelope_particular(z, &xi, &xi_x, &xi_y)?;
    // <p0 + s xi, p0 + s xi> = <p0,p0> - 2s because <p0,xi> = -1, <xi,xi> = 0
    let s_par = (p0.dot(&p0) + 1.0) / 2.0;
    let p = p0.add(&xi.scale(s_par));
    if p.0[3] <= 0.0 {
        return Err(GeomError::NoSurface { z });
    }
    Ok(p)
}

/// The Epstein map of the identity structure.
pub fn epstein_point(m: &MetricField, z: C) -> Result<EpsteinJet> {
    epstein_point_for(&ProjectiveStructure::identity(), m, z)
}

/// The Epstein map of (Sigma, m): envelope position, unit normal
/// n = xi - p, and the dual fundamental pair.
pub fn epstein_point_for(s: &ProjectiveStructure, m: &MetricField, z: C) -> Result<EpsteinJet> {
    let (xi, _, _) = null_lift_for(s, m, z)?;
    let p = envelope_position(s, m, z)?;
    let n = xi.sub(&p);
    let pair = dual_pair_at(s, m, z).map_err(|e| match e {
        GeomError::DegenerateDual { eigenvalue, .. } => GeomError::EnvelopeDegenerate {
            z,
            detail: format!("dual pair degenerate (shape eigenvalue {eigenvalue:.6})"),
        },
        other => other,
    })?;
    Ok(EpsteinJet { z, p, n, pair })
}

/// Chart derivatives of the envelope position by 4th-order stencils.
pub fn envelope_derivatives(
    s: &ProjectiveStructure,
    m: &MetricField,
    z: C,
    h: f64,
) -> Result<(MinkVec, MinkVec)> {
    let d = |dir: C| -> Result<MinkVec> {
        let e = dir * h;
        Ok(envelope_position(s, m, z + 2.0 * e)?
            .scale(-1.0)
            .add(&envelope_position(s, m, z + e)?.scale(8.0))
            .add(&envelope_position(s, m, z - e)?.scale(-8.0))
            .add(&envelope_position(s, m, z - 2.0 * e)?)
            .scale(1.0 / (12.0 * h)))
    };
    Ok((d(C::new(1.0, 0.0))?, d(C::new(0.0, 1.0))?))
}

/// Forward and backward hyperbolic Gauss maps: boundary endpoints of the
/// normal geodesic; p + n recovers the developing image.
pub fn gauss_maps(j: &EpsteinJet) -> (BoundaryPoint, BoundaryPoint) {
    let project = |v: MinkVec| -> BoundaryPoint {
        if v.0[3].abs() < 1e-12 * v.euclid_norm().max(1.0) {
            return BoundaryPoint::Infinity;
        }
        stereographic_inv([v.0[0] / v.0[3], v.0[1] / v.0[3], v.0[2] / v.0[3]])
    };
    (project(j.p.add(&j.n)), project(j.p.sub(&j.n)))
}

// ---------------------------------------------------------------------------
// Model conversions
// ---------------------------------------------------------------------------

fn check_hyperboloid(p: &MinkVec) -> Result<()> {
    let norm = p.dot(p);
    if (norm + 1.0).abs() > 1e-6 || p.0[3] <= 0.0 {
        return Err(GeomError::NotOnHyperboloid { p: p.0, norm });
    }
    Ok(())
}

/// Poincare ball coordinates b = (x1, x2, x3) / (1 + x4).
pub fn to_ball(p: &MinkVec) -> Result<[f64; 3]> {
    check_hyperboloid(p)?;
    let d = 1.0 + p.0[3];
    Ok([p.0[0] / d, p.0[1] / d, p.0[2] / d])
}

pub fn ball_to_hyperboloid(b: [f64; 3]) -> MinkVec {
    let n2 = b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
    let s = 1.0 - n2;
    MinkVec([2.0 * b[0] / s, 2.0 * b[1] / s, 2.0 * b[2] / s, (1.0 + n2) / s])
}

/// Inversion through the sphere of radius sqrt(2) centered at the north
/// pole; carries the unit ball onto a half-space.
fn invert_north(x: [f64; 3]) -> [f64; 3] {
    let d = [x[0], x[1], x[2] - 1.0];
    let n2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    [2.0 * d[0] / n2, 2.0 * d[1] / n2, 1.0 + 2.0 * d[2] / n2]
}

/// Upper-half-space coordinates (x, y, h), h > 0. The boundary
/// identification is the identity on the complex plane: hyperboloid
/// points near the boundary point sigma(z) map near (Re z, Im z, 0),
/// and the ball origin maps to (0, 0, 1).
pub fn to_uhs(p: &MinkVec) -> Result<[f64; 3]> {
    let b = to_ball(p)?;
    let u = invert_north(b);
    Ok([u[0], u[1], -u[2]])
}

pub fn uhs_to_hyperboloid(u: [f64; 3]) -> MinkVec {
    let b = invert_north([u[0], u[1], -u[2]]);
    ball_to_hyperboloid(b)
}

// ---------------------------------------------------------------------------
// Bonnet integration: the flat-connection oracle
// ---------------------------------------------------------------------------

/// Connection matrix A(z, w) of the rank-4 bundle TS + R + R in the
/// trivialization (d/dx, d/dy, N, X): a section V is parallel along a
/// curve with velocity w iff V' = -A V, where
/// A (Z, a, b) = (Gamma(w) Z + a B w + b w, -g(Z, B w), g(Z, w)).
fn connection_matrix(pair: &FundamentalPair, gamma: &[Mat2; 2], w: [f64; 2]) -> [[f64; 4]; 4] {
    let om = gamma[0].scale(w[0]).add(&gamma[1].scale(w[1]));
    let bw = pair.b.0.apply(w);
    let g_bw = pair.g.0.apply(bw);
    let g_w = pair.g.0.apply(w);
    [
        [om.a, om.b, bw[0], w[0]],
        [om.c, om.d, bw[1], w[1]],
        [-g_bw[0], -g_bw[1], 0.0, 0.0],
        [g_w[0], g_w[1], 0.0, 0.0],
    ]
}

fn mat4_apply(a: &[[f64; 4]; 4], v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, row) in a.iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(x, y)| x * y).sum();
    }
    out
}

fn add4(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn scale4(a: &[f64; 4], s: f64) -> [f64; 4] {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// Parallel transport of a fiber vector from the end of the polyline
/// back to its start, `steps` RK4 steps distributed over segments by
/// length.
fn transport_to_base(
    pair_field: &dyn Fn(C) -> Result<FundamentalPair>,
    path: &[C],
    v_end: [f64; 4],
    steps: usize,
) -> Result<[f64; 4]> {
    let total: f64 = path.windows(2).map(|s| (s[1] - s[0]).norm()).sum();
    let mut v = v_end;
    if total == 0.0 {
        return Ok(v);
    }
    let mut step_count = 0usize;
    for seg in path.windows(2).rev() {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a).norm();
        if len == 0.0 {
            continue;
        }
        let n = ((steps as f64 * len / total).ceil() as usize).max(4);
        let dz = (a - b) / n as f64; // reversed direction
        let w = [dz.re, dz.im]; // velocity per unit parameter step
        let a_at = |z: C| -> Result<[[f64; 4]; 4]> {
            let p = pair_field(z)?;
            let gf = |q: C| pair_field(q).map(|pp| pp.g.0);
            let gamma = christoffel(&gf, z, FD_STEP_1)?;
            Ok(connection_matrix(&p, &gamma, w))
        };
        for k in 0..n {
            let z0 = b + dz * k as f64;
            let a1 = a_at(z0)?;
            let a2 = a_at(z0 + dz * 0.5)?;
            let a4 = a_at(z0 + dz)?;
            let k1 = mat4_apply(&a1, &v).map(|x| -x);
            let vk = add4(&v, &scale4(&k1, 0.5));
            let k2 = mat4_apply(&a2, &vk).map(|x| -x);
            let vk = add4(&v, &scale4(&k2, 0.5));
            let k3 = mat4_apply(&a2, &vk).map(|x| -x);
            let vk = add4(&v, &k3);
            let k4 = mat4_apply(&a4, &vk).map(|x| -x);
            for i in 0..4 {
                v[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
            }
            step_count += 1;
            if !v.iter().all(|x| x.is_finite()) {
                return Err(GeomError::TransportDiverged { step: step_count });
            }
        }
    }
    Ok(v)
}

/// Tolerance on the Gauss-Codazzi residuals sampled along the path.
pub const TRANSPORT_RESIDUAL_TOL: f64 = 1e-6;

/// Integrates the flat connection of the dual pair along the polyline
/// and expresses the distance-t normal-flow section at the endpoint in
/// the basepoint fiber, aligned to Minkowski space by the envelope frame
/// (p_x, p_y, n, p) at the basepoint. Independent of the envelope solve
/// everywhere except that basepoint frame.
pub fn bonnet_integrate(
    m: &MetricField,
    s: &ProjectiveStructure,
    path: &[C],
    t: f64,
) -> Result<MinkVec> {
    let res = m.chart.nx.max(m.chart.ny).max(8);
    bonnet_integrate_steps(m, s, path, t, (8 * res).max(64))
}

/// [`bonnet_integrate`] with an explicit RK4 step count.
pub fn bonnet_integrate_steps(
    m: &MetricField,
    s: &ProjectiveStructure,
    path: &[C],
    t: f64,
    steps: usize,
) -> Result<MinkVec> {
    assert!(!path.is_empty(), "empty path");
    let pair_field = |z: C| dual_pair_at(s, m, z);

    // precondition: the pair solves the structure equations along the path
    for (i, z) in path.iter().enumerate() {
        if i % 2 == 0 || i + 1 == path.len() {
            let (gauss, codazzi) = gc_residuals_pair(&pair_field, *z)?;
            let r = gauss.abs().max(codazzi.norm());
            if r > TRANSPORT_RESIDUAL_TOL {
                return Err(GeomError::ResidualPrecondition {
                    residual: r,
                    tol: TRANSPORT_RESIDUAL_TOL,
                });
            }
        }
    }

    let base = path[0];
    let v0 = transport_to_base(&pair_field, path, [0.0, 0.0, t.sinh(), t.cosh()], steps)?;

    // alignment frame at the basepoint
    let jet = epstein_point_for(s, m, base)?;
    let (px, py) = envelope_derivatives(s, m, base, FD_STEP_1)?;
    Ok(px
        .scale(v0[0])
        .add(&py.scale(v0[1]))
        .add(&jet.n.scale(v0[2]))
        .add(&jet.p.scale(v0[3])))
}

// ---------------------------------------------------------------------------
// Meshing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Ball,
    Uhs,
}

#[derive(Debug, Clone, Copy)]
pub struct MeshVertex {
    pub chart: C,
    pub pos: [f64; 3],
    pub lambda: (f64, f64),
    pub gauss: f64,
    pub mean: f64,
}

/// Triangulated Epstein surface over the chart lattice; failed vertices
/// become holes and the faces touching them are dropped.
#[derive(Debug, Clone)]
pub struct EpsteinMesh {
    pub nu: usize,
    pub nv: usize,
    /// wrap in the v direction (polar charts)
    pub wrap_v: bool,
    pub vertices: Vec<Option<MeshVertex>>,
    pub failures: Vec<(C, String)>,
}

impl EpsteinMesh {
    pub fn valid_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.is_some()).count()
    }

    /// Faces as vertex-grid indices (u-major), two triangles per quad.
    pub fn faces(&self) -> Vec<[usize; 3]> {
        let idx = |iu: usize, iv: usize| iu * self.nv + iv;
        let mut out = Vec::new();
        if self.nu == 0 || self.nv == 0 {
            return out;
        }
        let v_range = if self.wrap_v { self.nv } else { self.nv.saturating_sub(1) };
        for iu in 0..self.nu.saturating_sub(1) {
            for iv in 0..v_range {
                let jv = (iv + 1) % self.nv;
                let q = [idx(iu, iv), idx(iu + 1, iv), idx(iu + 1, jv), idx(iu, jv)];
                if q.iter().all(|&k| self.vertices[k].is_some()) {
                    out.push([q[0], q[1], q[2]]);
                    out.push([q[0], q[2], q[3]]);
                }
            }
        }
        out
    }

    /// Wavefront OBJ text: vertices in grid order (holes skipped), faces
    /// 1-based against the emitted order.
    pub fn to_obj(&self, version: &str) -> String {
        let mut out = format!("# epstein surface mesh (ekit {version})\n");
        let mut remap = vec![0usize; self.vertices.len()];
        let mut next = 1usize;
        for (k, v) in self.vertices.iter().enumerate() {
            if let Some(v) = v {
                remap[k] = next;
                next += 1;
                out.push_str(&format!("v {} {} {}\n", v.pos[0], v.pos[1], v.pos[2]));
            }
        }
        for f in self.faces() {
            out.push_str(&format!("f {} {} {}\n", remap[f[0]], remap[f[1]], remap[f[2]]));
        }
        out
    }

    /// Sidecar CSV of per-vertex curvature data, in OBJ vertex order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,lambda1,lambda2,gauss,mean\n");
        for v in self.vertices.iter().flatten() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                v.chart.re, v.chart.im, v.lambda.0, v.lambda.1, v.gauss, v.mean
            ));
        }
        out
    }
}

/// Builds the Epstein mesh of (Sigma, m) over the metric's chart lattice.
pub fn epstein_mesh(m: &MetricField, s: &ProjectiveStructure, model: Model) -> EpsteinMesh {
    use crate::field::ChartKind;
    let (grid, nu, nv, wrap_v): (Vec<C>, usize, usize, bool) = match m.chart.kind {
        ChartKind::Disk { center, radius } => {
            let (nr, nt) = (m.chart.nx, m.chart.ny);
            let rc = radius * (1.0 - 3.0 / nr as f64);
            let mut pts = Vec::new();
            for ir in 1..nr {
                let r = rc * ir as f64 / (nr - 1) as f64;
                for it in 0..nt {
                    let th = 2.0 * std::f64::consts::PI * it as f64 / nt as f64;
                    pts.push(center + C::from_polar(r, th));
                }
            }
            (pts, nr - 1, nt, true)
        }
        _ => {
            let pts = m.sample_points();
            // sample_points is row-major in y; rows share the imaginary part
            let nv = pts.iter().take_while(|z| z.im == pts[0].im).count().max(1);
            let nu = pts.len() / nv;
            (pts[..nu * nv].to_vec(), nu, nv, false)
        }
    };
    let mut vertices = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for z in &grid {
        match epstein_point_for(s, m, *z).and_then(|jet| {
            let pos = match model {
                Model::Ball => to_ball(&jet.p)?,
                Model::Uhs => to_uhs(&jet.p)?,
            };
            let (l1, l2) = jet.pair.principal_curvatures();
            Ok(MeshVertex {
                chart: *z,
                pos,
                lambda: (l1, l2),
                gauss: jet.pair.b.0.det() - 1.0,
                mean: jet.pair.b.0.trace() / 2.0,
            })
        }) {
            Ok(v) => vertices.push(Some(v)),
            Err(e) => {
                failures.push((*z, e.to_string()));
                vertices.push(None);
            }
        }
    }
    EpsteinMesh { nu, nv, wrap_v, vertices, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Catalog, Chart};

    fn uhp_metric() -> MetricField {
        MetricField::catalog(Catalog::HyperbolicUhp, Chart::uhp(-1.5, 1.5, 0.2, 1.8, 25, 17))
    }

    #[test]
    fn null_lift_is_null() {
        for m in [
            MetricField::catalog_default(Catalog::Euclidean),
            MetricField::catalog_default(Catalog::HyperbolicDisk),
            MetricField::torus_bump_default(),
        ] {
            for z in m.sample_points().into_iter().step_by(131) {
                let (xi, xi_x, xi_y) = null_lift(&m, z).unwrap();
                let s2 = xi.euclid_norm().powi(2);
                assert!(xi.dot(&xi).abs() < 1e-12 * s2);
                // derivatives of a null family stay orthogonal to it
                assert!(xi.dot(&xi_x).abs() < 1e-8 * s2.max(1.0));
                assert!(xi.dot(&xi_y).abs() < 1e-8 * s2.max(1.0));
            }
        }
    }

    #[test]
    fn spherical_horospheres_through_origin() {
        let m = MetricField::catalog_default(Catalog::Spherical);
        let o = MinkVec([0.0, 0.0, 0.0, 1.0]);
        for z in [C::new(0.0, 0.0), C::new(0.7, -0.3), C::new(-1.4, 0.2)] {
            let (xi, _, _) = null_lift(&m, z).unwrap();
            assert!((o.dot(&xi) + 1.0).abs() < 1e-13, "<o, xi> = {}", o.dot(&xi));
        }
    }

    #[test]
    fn euclidean_lift_at_origin() {
        let m = MetricField::catalog_default(Catalog::Euclidean);
        let (xi, _, _) = null_lift(&m, C::new(0.0, 0.0)).unwrap();
        let want = MinkVec([0.0, 0.0, -0.5, 0.5]);
        assert!(xi.sub(&want).euclid_norm() < 1e-14);
    }

    #[test]
    fn uhp_envelope_is_vertical_plane() {
        let m = uhp_metric();
        for z in [C::new(0.3, 0.5), C::new(-1.0, 1.2), C::new(0.0, 0.25)] {
            let jet = epstein_point(&m, z).unwrap();
            // hyperboloid plane {x2 = 0}
            assert!(jet.p.0[1].abs() < 1e-12, "p2 = {}", jet.p.0[1]);
            assert!((jet.p.dot(&jet.p) + 1.0).abs() < 1e-12);
            assert!((jet.n.dot(&jet.n) - 1.0).abs() < 1e-12);
            assert!(jet.p.dot(&jet.n).abs() < 1e-12);
            // upper-half-space image is (x, 0, y)
            let u = to_uhs(&jet.p).unwrap();
            assert!((u[0] - z.re).abs() < 1e-12);
            assert!(u[1].abs() < 1e-12);
            assert!((u[2] - z.im).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_uhp_is_equidistant_surface() {
        let m = uhp_metric();
        for t in [0.5, 1.0, 2.0] {
            let scaled = m.scaled(t);
            let z = C::new(0.4, 0.9);
            let jet = epstein_point(&scaled, z).unwrap();
            // distance to the plane {x2 = 0}: sinh d = |<p, e2>| = |p2|
            let d = jet.p.0[1].abs().asinh();
            assert!((d - t).abs() < 1e-10, "distance {d} vs t = {t}");
            // and it is the geodesic flow of the unscaled point
            let base = epstein_point(&m, z).unwrap();
            let flowed = base.p.scale(t.cosh()).add(&base.n.scale(t.sinh()));
            assert!(jet.p.sub(&flowed).euclid_norm() < 1e-10);
        }
    }

    #[test]
    fn spherical_envelope_degenerates() {
        let m = MetricField::catalog_default(Catalog::Spherical);
        let err = epstein_point(&m, C::new(0.3, 0.2));
        assert!(matches!(err, Err(GeomError::EnvelopeDegenerate { .. })), "{err:?}");
    }

    #[test]
    fn gauss_map_forward_is_identity() {
        for m in [uhp_metric(), MetricField::catalog_default(Catalog::HyperbolicDisk)] {
            for z in m.sample_points().into_iter().step_by(173) {
                let jet = epstein_point(&m, z).unwrap();
                let (plus, _) = gauss_maps(&jet);
                let w = plus.unwrap_point();
                assert!((w - z).norm() < 1e-9, "z+ = {w} vs {z}");
            }
        }
    }

    #[test]
    fn uhp_backward_gauss_map_is_conjugate() {
        let m = uhp_metric();
        let jet = epstein_point(&m, C::new(0.0, 1.0)).unwrap();
        let (_, minus) = gauss_maps(&jet);
        let w = minus.unwrap_point();
        assert!((w - C::new(0.0, -1.0)).norm() < 1e-10, "z- = {w}");
    }

    #[test]
    fn disk_backward_gauss_map_is_inversion() {
        let m = MetricField::catalog_default(Catalog::HyperbolicDisk);
        for z in [C::new(0.3, 0.1), C::new(-0.2, 0.4)] {
            let jet = epstein_point(&m, z).unwrap();
            let (_, minus) = gauss_maps(&jet);
            let w = minus.unwrap_point();
            let want = C::new(z.re, z.im) / z.norm_sqr(); // 1 / conj(z)
            assert!((w - want).norm() < 1e-10);
        }
    }

    #[test]
    fn model_conversions() {
        let o = MinkVec([0.0, 0.0, 0.0, 1.0]);
        assert!(to_ball(&o).unwrap().iter().all(|v| v.abs() < 1e-15));
        let p = MinkVec([0.0, 0.0, 1.0f64.sinh(), 1.0f64.cosh()]);
        let b = to_ball(&p).unwrap();
        assert!((b[2] - 0.5f64.tanh()).abs() < 1e-14);
        // round trips
        for q in [p, MinkVec([0.3, -0.2, 0.5, 1.38f64.sqrt()])] {
            let b = to_ball(&q).unwrap();
            assert!(ball_to_hyperboloid(b).sub(&q).euclid_norm() < 1e-12);
            let u = to_uhs(&q).unwrap();
            assert!(u[2] > 0.0);
            assert!(uhs_to_hyperboloid(u).sub(&q).euclid_norm() < 1e-11);
        }
        // distance preservation through the ball model
        let a = MinkVec([0.1, 0.2, -0.3, 1.14f64.sqrt()]);
        let d_h = hyp_distance(&a, &p);
        let (ba, bp) = (to_ball(&a).unwrap(), to_ball(&p).unwrap());
        let dd: f64 = ba.iter().zip(bp).map(|(x, y)| (x - y) * (x - y)).sum();
        let na = 1.0 - ba.iter().map(|v| v * v).sum::<f64>();
        let np_ = 1.0 - bp.iter().map(|v| v * v).sum::<f64>();
        let ball_dist = (1.0 + 2.0 * dd / (na * np_)).acosh();
        assert!((d_h - ball_dist).abs() < 1e-10);
        assert!(to_ball(&MinkVec([1.0, 0.0, 0.0, 0.5])).is_err());
    }

    #[test]
    fn bonnet_constant_path() {
        let m = MetricField::catalog_default(Catalog::HyperbolicDisk);
        let z = C::new(0.2, 0.1);
        let s = ProjectiveStructure::identity();
        let got = bonnet_integrate(&m, &s, &[z], 0.0).unwrap();
        assert!((got.dot(&got) + 1.0).abs() < 1e-10);
        let jet = epstein_point(&m, z).unwrap();
        assert!(got.sub(&jet.p).euclid_norm() < 1e-9);
        // t > 0 flows along the normal
        let t = 0.7f64;
        let got = bonnet_integrate(&m, &s, &[z], t).unwrap();
        let want = jet.p.scale(t.cosh()).add(&jet.n.scale(t.sinh()));
        assert!(got.sub(&want).euclid_norm() < 1e-9);
    }

    #[test]
    fn bonnet_matches_envelope_along_path() {
        let m = MetricField::catalog_default(Catalog::HyperbolicDisk);
        let s = ProjectiveStructure::identity();
        let target = C::new(0.5, 0.0);
        let got = bonnet_integrate(&m, &s, &[C::new(0.0, 0.0), target], 0.0).unwrap();
        let want = epstein_point(&m, target).unwrap().p;
        let d = hyp_distance(&got, &want);
        assert!(d < 1e-6, "distance {d}");
    }

    #[test]
    fn bonnet_path_independence() {
        let m = crate::field::bump_disk_metric();
        let s = ProjectiveStructure::identity();
        let base = C::new(0.35, 0.45);
        let target = C::new(0.45, 0.55);
        let a = bonnet_integrate(&m, &s, &[base, target], 0.0).unwrap();
        let b = bonnet_integrate(
            &m,
            &s,
            &[base, C::new(0.45, 0.38), C::new(0.52, 0.48), target],
            0.0,
        )
        .unwrap();
        let d = a.sub(&b).euclid_norm();
        assert!(d < 1e-7, "homotopic paths disagree by {d}");
    }

    #[test]
    fn mesh_uhp_plane() {
        let m =
            MetricField::catalog(Catalog::HyperbolicUhp, Chart::uhp(-1.0, 1.0, 0.3, 1.3, 17, 13));
        let s = ProjectiveStructure::identity();
        let mesh = epstein_mesh(&m, &s, Model::Uhs);
        assert!(mesh.failures.is_empty());
        let max_dev =
            mesh.vertices.iter().flatten().map(|v| v.pos[1].abs()).fold(0.0f64, f64::max);
        assert!(max_dev < 1e-10, "plane deviation {max_dev}");
        let obj = mesh.to_obj("test");
        assert!(obj.contains("v ") && obj.contains("f "));
        // byte-identical across runs
        assert_eq!(obj, epstein_mesh(&m, &s, Model::Uhs).to_obj("test"));
    }

    #[test]
    fn mesh_spherical_reports_degeneracy() {
        let m = MetricField::catalog(Catalog::Spherical, Chart::disk(C::new(0.0, 0.0), 1.0, 6, 8));
        let mesh = epstein_mesh(&m, &ProjectiveStructure::identity(), Model::Ball);
        assert_eq!(mesh.valid_count(), 0);
        assert!(!mesh.failures.is_empty());
        assert!(mesh.faces().is_empty());
    }

    #[test]
    fn first_fundamental_form_matches_dual_metric() {
        let s = ProjectiveStructure::identity();
        for m in
            [MetricField::catalog_default(Catalog::HyperbolicDisk), crate::field::bump_disk_metric()]
        {
            for z in [C::new(0.35, 0.44), C::new(0.4, 0.5)] {
                if !m.chart.contains(z) || m.chart.boundary_distance(z) < 0.01 {
                    continue;
                }
                let jet = epstein_point_for(&s, &m, z).unwrap();
                let (px, py) = envelope_derivatives(&s, &m, z, 1e-3).unwrap();
                let g = &jet.pair.g.0;
                assert!((px.dot(&px) - g.a).abs() < 1e-5, "gxx defect {}", px.dot(&px) - g.a);
                assert!((px.dot(&py) - g.b).abs() < 1e-5);
                assert!((py.dot(&py) - g.d).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn fd_shape_operator_matches_dual() {
        let s = ProjectiveStructure::identity();
        let m = crate::field::bump_disk_metric();
        let z = C::new(0.38, 0.47);
        let jet = epstein_point_for(&s, &m, z).unwrap();
        let (px, py) = envelope_derivatives(&s, &m, z, 1e-3).unwrap();
        // B v = tangential part of d_v n
        let h = 1e-3;
        let n_of = |w: C| epstein_point_for(&s, &m, w).map(|j| j.n).unwrap();
        let fd_dir = |dir: C| -> MinkVec {
            let e = dir * h;
            n_of(z + 2.0 * e)
                .scale(-1.0)
                .add(&n_of(z + e).scale(8.0))
                .add(&n_of(z - e).scale(-8.0))
                .add(&n_of(z - 2.0 * e))
                .scale(1.0 / (12.0 * h))
        };
        let project = |v: MinkVec, p: &MinkVec| v.add(&p.scale(v.dot(p)));
        let bnx = project(fd_dir(C::new(1.0, 0.0)), &jet.p);
        let bny = project(fd_dir(C::new(0.0, 1.0)), &jet.p);
        let gram = Mat2::new(px.dot(&px), px.dot(&py), px.dot(&py), py.dot(&py));
        let gi = gram.inverse().unwrap();
        let coeff = |v: &MinkVec| gi.apply([px.dot(v), py.dot(v)]);
        let (cx, cy) = (coeff(&bnx), coeff(&bny));
        let b_fd = Mat2::new(cx[0], cy[0], cx[1], cy[1]);
        let defect = b_fd.sub(&jet.pair.b.0).norm();
        assert!(defect < 1e-4, "shape operator defect {defect}");
    }

    #[test]
    fn visual_metric_pullback_matches_conformal_density() {
        // (Id + B)^* g equals the pullback of the visual metric from the
        // surface point under the forward Gauss map; the Gauss map is
        // evaluated numerically and differentiated.
        let s = ProjectiveStructure::identity();
        let m = crate::field::bump_disk_metric();
        let z = C::new(0.33, 0.41);
        let jet = epstein_point_for(&s, &m, z).unwrap();
        // visual density from p0 at boundary point w:
        // e^{psi(w)} = -2 / ((1 + |w|^2) <p0, nu(w)>), nu normalized to x4 = 1
        let p0 = jet.p;
        let psi = |w: C| {
            let nu = base_null(w).scale(1.0 / (1.0 + w.norm_sqr()));
            -2.0 / ((1.0 + w.norm_sqr()) * p0.dot(&nu))
        };
        let h = 1e-4;
        let gm = |w: C| gauss_maps(&epstein_point_for(&s, &m, w).unwrap()).0.unwrap_point();
        let fx = (gm(z + C::new(h, 0.0)) - gm(z - C::new(h, 0.0))) / (2.0 * h);
        let fy = (gm(z + C::new(0.0, h)) - gm(z - C::new(0.0, h))) / (2.0 * h);
        let w0 = gm(z);
        let e2psi = psi(w0).powi(2);
        let jac = Mat2::new(fx.re, fy.re, fx.im, fy.im);
        let pull = jac.transpose().mul(&jac).scale(e2psi);
        let ghat = (2.0 * m.phi_jet2(z).unwrap().v).exp();
        let defect = pull.sub(&Mat2::diag(ghat, ghat)).norm() / ghat;
        assert!(defect < 1e-4, "visual pullback defect {defect}");
    }
}
