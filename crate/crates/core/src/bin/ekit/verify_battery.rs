//! The `verify` subcommand's check battery: one named pass/fail entry
//! per identity the library is built on. The acceptance test suite runs
//! the same checks at their full grid sizes; the battery keeps sweeps
//! small enough for interactive use.

use epstein_kit::duality::{
    dual_forms_check, dual_pair_at, flow_eigenvalue, from_dual, gc_residuals_pair, normal_flow,
    projective_pair_at, to_dual, FundamentalPair, Picture,
};
use epstein_kit::epstein::{
    ball_to_hyperboloid, bonnet_integrate, epstein_point, epstein_point_for, gauss_maps,
    hyp_distance, to_ball, to_uhs, uhs_to_hyperboloid,
};
use epstein_kit::field::{AngularProfile, Catalog, Chart, MetricField, ScalarField};
use epstein_kit::schwarzian::{
    norm_q, os_q, schwarzian_derivative, shape_operator_hat, DevelopingMap, LogAbsDeriv,
    ProjectiveStructure,
};
use epstein_kit::tensor::{
    complexify, pairing, reconstruct, strain, unstrain, variation_duality_residual, Endo2, Mat2,
    SymTensor2,
};
use epstein_kit::univalence::{
    annulus_grid, beltrami_fd, classify, power_univalence_exact, zc_all_angles, Classification,
    QcExtensionMap,
};
use epstein_kit::wvolume::{self, GraftingData};
use epstein_kit::C;

pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Deterministic splitmix64 stream for reproducible random instances.
struct Rng(u64);

impl Rng {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// uniform in [-1, 1)
    fn sym(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

type Check = (&'static str, &'static str, fn() -> Result<String, String>);

fn sup(name: &str, v: f64, tol: f64) -> Result<String, String> {
    if v <= tol {
        Ok(format!("{name} {v:.3e} <= {tol:.0e}"))
    } else {
        Err(format!("{name} {v:.3e} exceeds {tol:.0e}"))
    }
}

// ---------------------------------------------------------------------------
// tensor
// ---------------------------------------------------------------------------

fn tensor_complexify_roundtrip() -> Result<String, String> {
    let mut rng = Rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let t = SymTensor2::new(rng.sym(), rng.sym(), rng.sym());
        let (q, sigma) = complexify(&t);
        let back = reconstruct(q, sigma);
        let scale = t.0.norm().max(1.0);
        worst = worst.max(back.0.sub(&t.0).norm() / scale);
    }
    sup("round-trip", worst, 1e-15)
}

fn tensor_pairing_normalization() -> Result<String, String> {
    let v = pairing(
        &SymTensor2::new(1.0, 0.0, -1.0),
        &Endo2(Mat2::diag(1.0, -1.0)),
        &SymTensor2::new(1.0, 0.0, 1.0),
    )
    .map_err(|e| e.to_string())?;
    sup("|<dz^2, dzbar-frame> - 1|", (v - 1.0).abs(), 1e-15)
}

fn tensor_pairing_invariance() -> Result<String, String> {
    let mut rng = Rng(13);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let t = SymTensor2::new(rng.sym(), rng.sym(), rng.sym());
        let e = Endo2(Mat2::new(rng.sym(), rng.sym(), rng.sym(), rng.sym()));
        let c = rng.sym().abs() * 4.0 + 0.1;
        let a = pairing(&t, &e, &SymTensor2::new(1.0, 0.0, 1.0)).map_err(|x| x.to_string())?;
        let b = pairing(&t, &e, &SymTensor2::new(c, 0.0, c)).map_err(|x| x.to_string())?;
        worst = worst.max((a - b).abs() / a.abs().max(1.0));
        // traceless pairs see only the traceless part
        let t0 = SymTensor2::new(rng.sym(), rng.sym(), 0.0);
        let t0 = SymTensor2::new(t0.0.a, t0.0.b, -t0.0.a);
        let e0 = Endo2(e.0.traceless());
        let full = pairing(&t0, &e, &SymTensor2::new(1.0, 0.0, 1.0)).map_err(|x| x.to_string())?;
        let part = pairing(&t0, &e0, &SymTensor2::new(1.0, 0.0, 1.0)).map_err(|x| x.to_string())?;
        worst = worst.max((full - part).abs() / full.abs().max(1.0));
    }
    sup("pairing invariance", worst, 1e-13)
}

fn tensor_strain_reconstruction() -> Result<String, String> {
    let mut rng = Rng(17);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let lambda = rng.sym().abs() * 3.0 + 0.2;
        let g = SymTensor2::new(lambda, 0.0, lambda);
        let dg = SymTensor2::new(rng.sym(), rng.sym(), rng.sym());
        let (eta, _) = strain(&g, &dg).map_err(|e| e.to_string())?;
        let back = unstrain(&g, &eta).map_err(|e| e.to_string())?;
        worst = worst.max(back.0.sub(&dg.0).norm());
    }
    sup("strain reconstruction", worst, 1e-14)
}

fn tensor_variational_duality() -> Result<String, String> {
    let mut rng = Rng(19);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let lambda = rng.sym().abs() * 2.0 + 0.3;
        let g = SymTensor2::new(lambda, 0.0, lambda);
        let p = Endo2(Mat2::new(rng.sym(), rng.sym(), 0.0, rng.sym()));
        let p = Endo2(Mat2::new(p.0.a * 2.0, p.0.b, p.0.b, p.0.d * 2.0));
        if p.0.det().abs() < 0.1 {
            continue;
        }
        n += 1;
        let dg = SymTensor2::new(rng.sym(), rng.sym(), rng.sym());
        let dp = Endo2(Mat2::new(rng.sym(), rng.sym(), rng.sym(), rng.sym()));
        let dp = Endo2(Mat2::new(dp.0.a, (dp.0.b + dp.0.c) / 2.0, (dp.0.b + dp.0.c) / 2.0, dp.0.d));
        let r = variation_duality_residual(&g, &p, &dg, &dp).map_err(|e| e.to_string())?;
        worst = worst.max(r);
    }
    sup("variational duality residual", worst, 1e-9)
}

// ---------------------------------------------------------------------------
// field
// ---------------------------------------------------------------------------

fn field_curvature_catalog() -> Result<String, String> {
    let cases = [
        (Catalog::Euclidean, 0.0),
        (Catalog::HyperbolicDisk, -1.0),
        (Catalog::HyperbolicUhp, -1.0),
        (Catalog::Spherical, 1.0),
        (Catalog::PowerCone(AngularProfile::LogSin), -1.0),
    ];
    let mut worst: f64 = 0.0;
    for (c, want) in cases {
        let m = MetricField::catalog_default(c);
        for z in m.sample_points().into_iter().step_by(37) {
            worst = worst.max((m.curvature(z).map_err(|e| e.to_string())? - want).abs());
        }
    }
    sup("constant-curvature defect", worst, 1e-10)
}

fn field_gauss_bonnet() -> Result<String, String> {
    let m = MetricField::torus_bump_default();
    let total = m
        .quadrature(&|z| m.curvature(z).unwrap_or(f64::NAN))
        .map_err(|e| e.to_string())?;
    sup("torus curvature integral", total.abs(), 1e-6)
}

fn field_conformal_law() -> Result<String, String> {
    let m = MetricField::torus_bump_default();
    let u = ScalarField::CatalogPhi(Catalog::TorusBump(epstein_kit::field::default_bump()));
    let h = m.conformal_change(u.clone());
    let mut worst: f64 = 0.0;
    for z in m.sample_points().into_iter().step_by(101) {
        let lhs = h.curvature(z).map_err(|e| e.to_string())?;
        let uj = epstein_kit::field::ScalarJet::jet2(&u, z).v;
        let rhs = (-2.0 * uj).exp()
            * (m.curvature(z).map_err(|e| e.to_string())?
                - m.laplacian(&u, z).map_err(|e| e.to_string())?);
        worst = worst.max((lhs - rhs).abs());
    }
    sup("conformal curvature law", worst, 1e-9)
}

fn field_quadrature_transpose() -> Result<String, String> {
    let f = |z: C| (1.7 * z.re).sin() * (0.9 * z.im + 0.3).cos();
    let ft = |z: C| f(C::new(z.im, z.re));
    let m1 = MetricField::catalog(Catalog::Euclidean, Chart::rectangle(0.0, 1.0, 0.0, 2.0, 41, 23));
    let m2 = MetricField::catalog(Catalog::Euclidean, Chart::rectangle(0.0, 2.0, 0.0, 1.0, 23, 41));
    let a = m1.quadrature(&f).map_err(|e| e.to_string())?;
    let b = m2.quadrature(&ft).map_err(|e| e.to_string())?;
    sup("transpose invariance", (a - b).abs() / a.abs().max(1.0), 1e-12)
}

fn field_spherical_area() -> Result<String, String> {
    let s = MetricField::catalog_default(Catalog::Spherical);
    let v = s.quadrature_improper(&|_| 1.0, 40.0).map_err(|e| e.to_string())?;
    sup("sphere area defect", (v - 4.0 * std::f64::consts::PI).abs(), 1e-3)
}

// ---------------------------------------------------------------------------
// schwarzian
// ---------------------------------------------------------------------------

fn random_disk_points(n: usize, seed: u64) -> Vec<C> {
    let mut rng = Rng(seed);
    (0..n)
        .map(|_| {
            let r = rng.sym().abs().sqrt() * 0.85;
            let th = rng.sym() * std::f64::consts::PI;
            C::from_polar(r, th)
        })
        .collect()
}

fn schwarzian_os_vanishing() -> Result<String, String> {
    let e = MetricField::catalog(Catalog::Euclidean, Chart::disk(C::new(0.0, 0.0), 1.0, 24, 48));
    let u = ScalarField::CatalogPhi(Catalog::HyperbolicDisk);
    let mut worst: f64 = 0.0;
    for z in random_disk_points(1000, 23) {
        worst = worst.max(os_q(&e, &u, z).map_err(|x| x.to_string())?.norm());
    }
    sup("|Q(euclidean -> hyperbolic disk)|", worst, 1e-10)
}

fn schwarzian_bridge() -> Result<String, String> {
    let e = MetricField::catalog(Catalog::Euclidean, Chart::rectangle(-3.0, 3.0, -3.0, 3.0, 9, 9));
    let maps = [
        ProjectiveStructure::moebius(C::new(1.0, 0.3), C::new(0.2, 0.0), C::new(0.1, 0.0), C::new(1.0, 0.0)),
        ProjectiveStructure { dev: DevelopingMap::Exp },
        ProjectiveStructure::power(C::new(1.6, 0.2)),
    ];
    let mut worst: f64 = 0.0;
    let mut rng = Rng(29);
    for s in &maps {
        for _ in 0..1000 {
            let z = match s.dev {
                // the power map needs the upper half-plane
                DevelopingMap::Power { .. } => C::new(rng.sym() * 2.0, rng.sym().abs() * 2.0 + 0.1),
                _ => C::new(rng.sym() * 2.0, rng.sym() * 2.0),
            };
            let lhs = os_q(&e, &LogAbsDeriv(s), z).map_err(|x| x.to_string())?;
            let rhs = schwarzian_derivative(s, z).map_err(|x| x.to_string())? / 2.0;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    sup("bridge identity", worst, 1e-9)
}

fn schwarzian_cocycle() -> Result<String, String> {
    let g0 = MetricField::catalog(Catalog::Euclidean, Chart::disk(C::new(0.0, 0.0), 1.0, 24, 48));
    let u01 = ScalarField::CatalogPhi(Catalog::HyperbolicDisk);
    let u12 = ScalarField::CatalogPhi(Catalog::Spherical);
    let g1 = g0.conformal_change(u01.clone());
    let u02 = ScalarField::Sum(Box::new(u01.clone()), Box::new(u12.clone()));
    let mut worst: f64 = 0.0;
    for z in random_disk_points(300, 31) {
        let a = os_q(&g0, &u01, z).map_err(|x| x.to_string())?;
        let b = os_q(&g1, &u12, z).map_err(|x| x.to_string())?;
        let c = os_q(&g0, &u02, z).map_err(|x| x.to_string())?;
        worst = worst.max((a + b - c).norm());
    }
    sup("cocycle defect", worst, 1e-9)
}

fn catalog_for_shape_tests() -> Vec<MetricField> {
    vec![
        MetricField::catalog_default(Catalog::HyperbolicDisk),
        MetricField::catalog_default(Catalog::HyperbolicUhp),
        MetricField::catalog_default(Catalog::Spherical),
        MetricField::catalog_default(Catalog::PowerCone(AngularProfile::DoubleLogSin)),
        MetricField::torus_bump_default(),
    ]
}

fn schwarzian_shape_eigenvalues() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    let mut worst: f64 = 0.0;
    for m in catalog_for_shape_tests() {
        for z in m.sample_points() {
            let bh = shape_operator_hat(&s, &m, z).map_err(|x| x.to_string())?;
            let k = m.curvature(z).map_err(|x| x.to_string())?;
            let nq = norm_q(&s, &m, z).map_err(|x| x.to_string())?;
            let (lo, hi) = bh.0.sym_eigenvalues();
            worst = worst.max((lo - (-k - 4.0 * nq)).abs()).max((hi - (-k + 4.0 * nq)).abs());
            worst = worst.max((bh.0.trace() + 2.0 * k).abs());
        }
    }
    sup("eigenvalue formula defect", worst, 1e-10)
}

fn schwarzian_holomorphy() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    for c in [Catalog::HyperbolicDisk, Catalog::Spherical, Catalog::HyperbolicUhp] {
        let m = MetricField::catalog_default(c);
        let d = epstein_kit::schwarzian::holomorphy_defect_sup(&s, &m).map_err(|e| e.to_string())?;
        if d > 1e-6 {
            return Err(format!("constant-curvature defect {d:.3e} exceeds 1e-6"));
        }
    }
    let bump = MetricField::torus_bump_default();
    let d = epstein_kit::schwarzian::holomorphy_defect_sup(&s, &bump).map_err(|e| e.to_string())?;
    if d < 1e-2 {
        return Err(format!("bump defect {d:.3e} unexpectedly small"));
    }
    Ok(format!("constant-curvature holomorphic, bump defect {d:.3e}"))
}

// ---------------------------------------------------------------------------
// duality
// ---------------------------------------------------------------------------

fn duality_roundtrip() -> Result<String, String> {
    let mut rng = Rng(37);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let l = rng.sym().abs() + 0.2;
        let b = Mat2::new(rng.sym() * 0.8, rng.sym() * 0.3, 0.0, rng.sym() * 0.8);
        let b = Mat2::new(b.a, b.b, b.b, b.d);
        let (lo, _) = b.sym_eigenvalues();
        if lo < -0.85 {
            continue;
        }
        let hat = FundamentalPair { g: SymTensor2::new(l, 0.0, l), b: Endo2(b) };
        let Ok(pair) = to_dual(&hat) else { continue };
        let Ok(back) = from_dual(&pair) else { continue };
        worst = worst.max(back.g.0.sub(&hat.g.0).norm()).max(back.b.0.sub(&hat.b.0).norm());
    }
    sup("round-trip defect", worst, 1e-12)
}

fn duality_residual_exchange() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    let metrics = vec![
        MetricField::catalog_default(Catalog::HyperbolicDisk),
        MetricField::catalog_default(Catalog::HyperbolicUhp),
        MetricField::catalog_default(Catalog::Spherical).scaled(1.0),
        MetricField::catalog_default(Catalog::PowerCone(AngularProfile::DoubleLogSin)),
        MetricField::torus_bump_default(),
        epstein_kit::field::bump_disk_metric(),
    ];
    let mut worst: f64 = 0.0;
    for m in &metrics {
        let bf = |z: C| shape_operator_hat(&s, m, z);
        let pf = |z: C| dual_pair_at(&s, m, z);
        for z in epstein_kit::duality::stencil_points(m, 0.012).into_iter().step_by(97) {
            let (g1, c1) = epstein_kit::duality::gc_residuals(m, &bf, Picture::Projective, z)
                .map_err(|e| e.to_string())?;
            let (g2, c2) = gc_residuals_pair(&pf, z).map_err(|e| e.to_string())?;
            worst = worst.max(g1.abs()).max(c1.norm()).max(g2.abs()).max(c2.norm());
        }
    }
    sup("structure-equation residuals", worst, 1e-7)
}

fn duality_flow_law() -> Result<String, String> {
    let mut rng = Rng(41);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let b = Mat2::new(rng.sym() * 2.0, rng.sym(), 0.0, rng.sym() * 2.0);
        let b = Mat2::new(b.a, b.b, b.b, b.d);
        let t = rng.sym() * 2.0;
        let (l1, l2) = b.sym_eigenvalues();
        // stay away from singular times
        if (t.cosh() + l1 * t.sinh()).abs() < 1e-2 || (t.cosh() + l2 * t.sinh()).abs() < 1e-2 {
            continue;
        }
        n += 1;
        let pair = FundamentalPair { g: SymTensor2::new(1.0, 0.0, 1.0), b: Endo2(b) };
        let st = normal_flow(&pair, t).map_err(|e| e.to_string())?;
        let (f1, f2) = st.pair.principal_curvatures();
        let (w1, w2) = (flow_eigenvalue(l1, t), flow_eigenvalue(l2, t));
        let (w1, w2) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
        worst = worst.max((f1 - w1).abs()).max((f2 - w2).abs());
    }
    sup("eigenvalue transport law", worst, 1e-10)
}

fn duality_flow_group() -> Result<String, String> {
    let mut rng = Rng(43);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let b = Mat2::new(rng.sym() * 0.6, rng.sym() * 0.4, 0.0, rng.sym() * 0.6);
        let b = Mat2::new(b.a, b.b, b.b, b.d);
        let pair = FundamentalPair { g: SymTensor2::new(1.3, 0.0, 1.3), b: Endo2(b) };
        let (s, t) = (rng.sym(), rng.sym());
        let Ok(one) = normal_flow(&pair, s) else { continue };
        let Ok(two) = normal_flow(&one.pair, t) else { continue };
        let Ok(direct) = normal_flow(&pair, s + t) else { continue };
        worst = worst
            .max(two.pair.g.0.sub(&direct.pair.g.0).norm())
            .max(two.pair.b.0.sub(&direct.pair.b.0).norm());
    }
    sup("group law defect", worst, 1e-10)
}

fn duality_dual_flow_commute() -> Result<String, String> {
    let mut rng = Rng(47);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let b = Mat2::new(rng.sym() * 0.7, rng.sym() * 0.3, 0.0, rng.sym() * 0.7);
        let b = Mat2::new(b.a, b.b, b.b, b.d);
        let l = rng.sym().abs() + 0.4;
        let hat = FundamentalPair { g: SymTensor2::new(l, 0.0, l), b: Endo2(b) };
        let t = rng.sym();
        let e2t = (2.0 * t).exp();
        let scaled = FundamentalPair {
            g: SymTensor2::new(l * e2t, 0.0, l * e2t),
            b: Endo2(b.scale(1.0 / e2t)),
        };
        let (Ok(a), Ok(base)) = (to_dual(&scaled), to_dual(&hat)) else { continue };
        let Ok(fl) = normal_flow(&base, t) else { continue };
        worst = worst.max(a.g.0.sub(&fl.pair.g.0).norm()).max(a.b.0.sub(&fl.pair.b.0).norm());
    }
    sup("scaling/flow commutation", worst, 1e-10)
}

fn duality_area_forms() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    let m = MetricField::torus_bump_default();
    let mut worst: f64 = 0.0;
    for z in m.sample_points().into_iter().step_by(61) {
        let hat = projective_pair_at(&s, &m, z).map_err(|e| e.to_string())?;
        let pair = to_dual(&hat).map_err(|e| e.to_string())?;
        let (r1, r2) = dual_forms_check(&pair, &hat);
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    sup("area-form identities", worst, 1e-8)
}

// ---------------------------------------------------------------------------
// epstein
// ---------------------------------------------------------------------------

fn epstein_plane() -> Result<String, String> {
    let m = MetricField::catalog(Catalog::HyperbolicUhp, Chart::uhp(-1.5, 1.5, 0.15, 1.65, 64, 64));
    let mut worst: f64 = 0.0;
    for z in m.sample_points() {
        let jet = epstein_point(&m, z).map_err(|e| e.to_string())?;
        worst = worst.max(jet.p.0[1].abs().asinh());
    }
    for t in [0.5, 1.0, 2.0] {
        let scaled = m.scaled(t);
        for z in scaled.sample_points().into_iter().step_by(101) {
            let jet = epstein_point(&scaled, z).map_err(|e| e.to_string())?;
            worst = worst.max((jet.p.0[1].abs().asinh() - t).abs());
        }
    }
    sup("plane/equidistant deviation", worst, 1e-8)
}

fn epstein_envelope_vs_transport() -> Result<String, String> {
    use rayon::prelude::*;
    let s = ProjectiveStructure::identity();
    let cases = [
        (MetricField::catalog(Catalog::HyperbolicDisk, Chart::disk(C::new(0.0, 0.0), 1.0, 16, 16)), C::new(0.0, 0.0)),
        (epstein_kit::field::bump_disk_metric(), C::new(0.35, 0.45)),
    ];
    let mut worst: f64 = 0.0;
    for (m, base) in cases {
        let pts = m.sample_points();
        let d = pts
            .par_iter()
            .step_by(3)
            .map(|z| {
                let got = bonnet_integrate(&m, &s, &[base, *z], 0.0).map_err(|e| e.to_string())?;
                let want = epstein_point_for(&s, &m, *z).map_err(|e| e.to_string())?.p;
                Ok(hyp_distance(&got, &want))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        worst = worst.max(d.into_iter().fold(0.0, f64::max));
    }
    sup("envelope vs transport distance", worst, 1e-6)
}

fn epstein_gauss_identity() -> Result<String, String> {
    let metrics = vec![
        MetricField::catalog_default(Catalog::Euclidean),
        MetricField::catalog_default(Catalog::HyperbolicDisk),
        MetricField::catalog_default(Catalog::HyperbolicUhp),
        MetricField::catalog_default(Catalog::Spherical).scaled(1.0),
        MetricField::catalog_default(Catalog::PowerCone(AngularProfile::DoubleLogSin)),
        epstein_kit::field::bump_disk_metric(),
    ];
    let mut worst: f64 = 0.0;
    for m in &metrics {
        for z in m.sample_points().into_iter().step_by(23) {
            let jet = epstein_point(m, z).map_err(|e| e.to_string())?;
            let w = match gauss_maps(&jet).0 {
                epstein_kit::epstein::BoundaryPoint::Point(w) => w,
                epstein_kit::epstein::BoundaryPoint::Infinity => {
                    return Err(format!("forward endpoint escaped at {z}"))
                }
            };
            worst = worst.max((w - z).norm());
        }
    }
    sup("forward Gauss map identity", worst, 1e-8)
}

fn epstein_fundamental_form() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    let m = epstein_kit::field::bump_disk_metric();
    let mut worst: f64 = 0.0;
    for z in epstein_kit::duality::stencil_points(&m, 0.01).into_iter().step_by(29) {
        let jet = epstein_point_for(&s, &m, z).map_err(|e| e.to_string())?;
        let (px, py) = epstein_kit::epstein::envelope_derivatives(&s, &m, z, 1e-3)
            .map_err(|e| e.to_string())?;
        let g = &jet.pair.g.0;
        worst = worst
            .max((px.dot(&px) - g.a).abs())
            .max((px.dot(&py) - g.b).abs())
            .max((py.dot(&py) - g.d).abs());
    }
    sup("first fundamental form defect", worst, 1e-5)
}

fn epstein_model_roundtrip() -> Result<String, String> {
    let mut rng = Rng(53);
    let mut worst: f64 = 0.0;
    for _ in 0..300 {
        let b = [rng.sym() * 0.8, rng.sym() * 0.8, rng.sym() * 0.8];
        if b.iter().map(|v| v * v).sum::<f64>() >= 0.96 {
            continue;
        }
        let p = ball_to_hyperboloid(b);
        let back = to_ball(&p).map_err(|e| e.to_string())?;
        worst = worst.max(
            back.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        );
        let u = to_uhs(&p).map_err(|e| e.to_string())?;
        worst = worst.max(uhs_to_hyperboloid(u).sub(&p).euclid_norm());
    }
    sup("model round trips", worst, 1e-11)
}

// ---------------------------------------------------------------------------
// univalence
// ---------------------------------------------------------------------------

fn univalence_power_threshold() -> Result<String, String> {
    // classification flips across |c^2 - 1| = 1 within a grid cell
    let m = MetricField::catalog(Catalog::HyperbolicUhp, Chart::uhp(-2.0, 2.0, 0.1, 2.0, 41, 21));
    let n = 120;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let c = C::new(1.0 + 0.5 * i as f64 / (n - 1) as f64, 0.0);
        let rep = classify(&ProjectiveStructure::power(c), &m).map_err(|e| e.to_string())?;
        let ok = !matches!(rep.classification, Classification::NoConclusion);
        let inside = (c * c - C::new(1.0, 0.0)).norm() <= 1.0;
        if ok != inside {
            worst = worst.max(((c * c - C::new(1.0, 0.0)).norm() - 1.0).abs());
        }
    }
    sup("threshold mismatch band", worst, 1e-6)
}

fn univalence_doubled_threshold() -> Result<String, String> {
    for (c, want) in [(1.99, true), (2.0, true), (2.01, false)] {
        let got = zc_all_angles(C::new(c, 0.0), &AngularProfile::DoubleLogSin);
        if got != want {
            return Err(format!("criterion at c = {c}: got {got}, want {want}"));
        }
    }
    Ok("|c^2 - 2| <= 2 recovered on the real axis".into())
}

fn univalence_region_containment() -> Result<String, String> {
    for profile in [AngularProfile::LogSin, AngularProfile::DoubleLogSin] {
        let scan = epstein_kit::univalence::region_scan(&profile, (0.05, 2.6), (-1.3, 1.3), 80, 60);
        for j in 0..scan.n_im {
            for i in 0..scan.n_re {
                if scan.at(i, j) && !power_univalence_exact(scan.c_at(i, j)) {
                    return Err(format!("criterion point {} outside exact region", scan.c_at(i, j)));
                }
            }
        }
    }
    Ok("criterion regions sit inside the exact univalence region".into())
}

fn univalence_extension_identity() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    let m = MetricField::catalog_default(Catalog::HyperbolicDisk);
    let ext = QcExtensionMap::new(&s, &m).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for z in annulus_grid(1.05, 2.0, 8, 16) {
        worst = worst.max((ext.eval_point(z).map_err(|e| e.to_string())? - z).norm());
    }
    sup("identity extension defect", worst, 1e-8)
}

fn univalence_beltrami_bound() -> Result<String, String> {
    let c = C::new(1.5f64.sqrt(), 0.0);
    let s = ProjectiveStructure::power_disk(c);
    let m = MetricField::catalog_default(Catalog::HyperbolicDisk);
    let ext = QcExtensionMap::new(&s, &m).map_err(|e| e.to_string())?;
    let f = |z: C| ext.eval_point(z);
    let mut worst: f64 = 0.0;
    for z in annulus_grid(1.03, 1.8, 8, 12) {
        let mu = beltrami_fd(&f, z, 1e-4).map_err(|e| e.to_string())?;
        let w = C::new(z.re, z.im) / z.norm_sqr();
        let bound = 4.0 * norm_q(&s, &m, w).map_err(|e| e.to_string())?
            / (-m.curvature(w).map_err(|e| e.to_string())?);
        worst = worst.max(mu.norm() - bound);
    }
    sup("Beltrami excess over pointwise bound", worst.max(0.0), 1e-3)
}

// ---------------------------------------------------------------------------
// wvolume
// ---------------------------------------------------------------------------

fn small_direction() -> ScalarField {
    ScalarField::Trig(epstein_kit::field::TrigPoly::new(vec![
        epstein_kit::field::TrigTerm { amp: 0.05, m: 1, n: 0, phase: 0.0 },
        epstein_kit::field::TrigTerm { amp: 0.03, m: 1, n: 1, phase: 0.4 },
    ]))
}

fn wvolume_cocycle() -> Result<String, String> {
    let g0 = wvolume::torus_metric(epstein_kit::field::default_bump(), 64);
    let u = small_direction();
    let half = ScalarField::Scale(0.5, Box::new(u));
    let d = wvolume::w_cocycle_check(&g0, &half, &half).map_err(|e| e.to_string())?;
    sup("cocycle defect", d, 1e-7)
}

fn wvolume_scaling() -> Result<String, String> {
    let g0 = wvolume::torus_metric(epstein_kit::field::default_bump(), 64);
    let d = wvolume::w_scaling_check(&g0, &small_direction(), 0.3, -0.2).map_err(|e| e.to_string())?;
    sup("scaling defect", d, 1e-8)
}

fn wvolume_variation() -> Result<String, String> {
    let g0 = wvolume::torus_metric(epstein_kit::field::default_bump(), 64);
    let mut worst: f64 = 0.0;
    for h in [1e-3, 5e-4] {
        let d = wvolume::dw_conformal_check(&g0, &small_direction(), h).map_err(|e| e.to_string())?;
        worst = worst.max(d / (h * h));
    }
    sup("variation defect / h^2", worst, 1e-4)
}

fn wvolume_max_equality() -> Result<String, String> {
    let g0 = wvolume::flat_torus(96);
    let u = wvolume::area_preserving(&g0, &small_direction()).map_err(|e| e.to_string())?;
    let (w, _) = wvolume::w_pair_richardson(&g0, &u).map_err(|e| e.to_string())?;
    let grad = wvolume::grad_norm_sq_total(&g0, &u).map_err(|e| e.to_string())?;
    sup("flat maximality equality", (w + 0.25 * grad).abs(), 1e-6)
}

fn wvolume_mean_curvature() -> Result<String, String> {
    let s = ProjectiveStructure::identity();
    let m = wvolume::torus_metric(epstein_kit::field::default_bump(), 64);
    let (d, rhs) = wvolume::mean_curvature_integral_check(&s, &m).map_err(|e| e.to_string())?;
    sup("mean-curvature integral defect", d / rhs.abs().max(1.0), 1e-6)
}

fn graft_bounds_instance() -> Result<String, String> {
    let d = GraftingData::new(-2, 1.0, 0.5, 0.5).map_err(|e| e.to_string())?;
    let b = wvolume::graft_bounds(&d);
    if b.lower != -0.25 || b.upper != 0.25 {
        return Err(format!("hand instance gave ({}, {})", b.lower, b.upper));
    }
    if wvolume::newbound_max(1.0, 1.5) != 2.5 {
        return Err("corollary constant defect".into());
    }
    Ok("hand-computed instance (-0.25, 0.25) and corollary constant 5/2".into())
}

fn graft_newbound_lattice() -> Result<String, String> {
    for i in 0..30 {
        let l = 0.02 + i as f64 * 0.12;
        for j in 0..30 {
            let phiinf = j as f64 * 0.1;
            let max2 = wvolume::newbound_max(l, phiinf);
            for k in 0..30 {
                let phi2 = max2 * k as f64 / 29.0;
                let d = GraftingData::new(-2, l, phi2, phiinf).map_err(|e| e.to_string())?;
                let b = wvolume::graft_bounds(&d);
                if b.lower > b.upper + 1e-12 {
                    return Err(format!("order violated at L={l}, phi2={phi2}, phiinf={phiinf}"));
                }
            }
        }
    }
    Ok("lower <= upper across the admissible lattice".into())
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

fn registry() -> Vec<Check> {
    vec![
        ("tensor", "tensor-complexify-roundtrip", tensor_complexify_roundtrip),
        ("tensor", "tensor-pairing-normalization", tensor_pairing_normalization),
        ("tensor", "tensor-pairing-invariance", tensor_pairing_invariance),
        ("tensor", "tensor-strain-reconstruction", tensor_strain_reconstruction),
        ("tensor", "tensor-variational-duality", tensor_variational_duality),
        ("field", "field-curvature-catalog", field_curvature_catalog),
        ("field", "field-gauss-bonnet-torus", field_gauss_bonnet),
        ("field", "field-conformal-curvature-law", field_conformal_law),
        ("field", "field-quadrature-transpose", field_quadrature_transpose),
        ("field", "field-spherical-area", field_spherical_area),
        ("schwarzian", "schwarzian-os-vanishing", schwarzian_os_vanishing),
        ("schwarzian", "schwarzian-bridge", schwarzian_bridge),
        ("schwarzian", "schwarzian-cocycle", schwarzian_cocycle),
        ("schwarzian", "schwarzian-shape-eigenvalues", schwarzian_shape_eigenvalues),
        ("schwarzian", "schwarzian-holomorphy", schwarzian_holomorphy),
        ("duality", "duality-roundtrip", duality_roundtrip),
        ("duality", "duality-residual-exchange", duality_residual_exchange),
        ("duality", "duality-flow-law", duality_flow_law),
        ("duality", "duality-flow-group", duality_flow_group),
        ("duality", "duality-dual-flow-commute", duality_dual_flow_commute),
        ("duality", "duality-area-forms", duality_area_forms),
        ("epstein", "epstein-plane", epstein_plane),
        ("epstein", "epstein-envelope-vs-transport", epstein_envelope_vs_transport),
        ("epstein", "epstein-gauss-identity", epstein_gauss_identity),
        ("epstein", "epstein-fundamental-form", epstein_fundamental_form),
        ("epstein", "epstein-model-roundtrip", epstein_model_roundtrip),
        ("univalence", "univalence-power-threshold", univalence_power_threshold),
        ("univalence", "univalence-doubled-threshold", univalence_doubled_threshold),
        ("univalence", "univalence-region-containment", univalence_region_containment),
        ("univalence", "univalence-extension-identity", univalence_extension_identity),
        ("univalence", "univalence-beltrami-bound", univalence_beltrami_bound),
        ("wvolume", "wvolume-cocycle", wvolume_cocycle),
        ("wvolume", "wvolume-scaling", wvolume_scaling),
        ("wvolume", "wvolume-variation", wvolume_variation),
        ("wvolume", "wvolume-max-equality", wvolume_max_equality),
        ("wvolume", "wvolume-mean-curvature", wvolume_mean_curvature),
        ("wvolume", "graft-bounds-instance", graft_bounds_instance),
        ("wvolume", "graft-newbound-lattice", graft_newbound_lattice),
    ]
}

pub fn run_suite(suite: &str) -> Result<Vec<CheckResult>, String> {
    let all = registry();
    let selected: Vec<&Check> =
        all.iter().filter(|(group, _, _)| suite == "all" || *group == suite).collect();
    if selected.is_empty() {
        return Err(format!(
            "unknown suite {suite:?}; choose all, tensor, field, schwarzian, duality, epstein, univalence or wvolume"
        ));
    }
    Ok(selected
        .into_iter()
        .map(|(_, name, f)| match f() {
            Ok(detail) => CheckResult { name, pass: true, detail },
            Err(detail) => CheckResult { name, pass: false, detail },
        })
        .collect())
}
