// debug: locate worst hyperbolic gauss residual on the bump torus
use epstein_kit::duality::*;
use epstein_kit::field::*;
use epstein_kit::schwarzian::*;
use epstein_kit::C;

fn main() {
    let s = ProjectiveStructure::identity();
    let m = MetricField::torus_bump_default();
    let pf = |z: C| dual_pair_at(&s, &m, z);
    let gf = |w: C| pf(w).map(|p| p.g.0);
    let mut worst = (0.0f64, C::new(0.0, 0.0));
    for z in stencil_points(&m, 0.012).into_iter().step_by(97) {
        let (g2, _) = gc_residuals_pair(&pf, z).unwrap();
        if g2.abs() > worst.0 { worst = (g2.abs(), z); }
    }
    println!("worst {:.3e} at {}", worst.0, worst.1);
    let z = worst.1;
    let p = pf(z).unwrap();
    for h in [2e-3, 1e-3, 5e-4, 2.5e-4, 1.25e-4] {
        let k = brioschi_curvature(&gf, z, h).unwrap();
        println!("h={h:.2e}  gauss={:.3e}", p.b.0.det() - (k + 1.0));
    }
    println!("detB={:.6} minlam stuff", p.b.0.det());
}
