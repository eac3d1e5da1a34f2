// temporary debugging harness: per-iteration trace for one stalling case
use moprox::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let n = 5;
    let rows = 4;
    let man = Manifold::sphere(n);
    let mk = |rng: &mut ChaCha20Rng| {
        let a = DMatrix::from_fn(rows, n, |_, _| StandardNormal.sample(rng)) / (rows as f64).sqrt();
        let b = DVector::from_fn(rows, |_, _| StandardNormal.sample(rng));
        (SmoothTerm::least_squares(a, b), make_l1(0.05))
    };
    let t1 = mk(&mut rng);
    let t2 = mk(&mut rng);
    let obj = CompositeObjective::new(man, vec![t1, t2]);
    let x = man.random_point(&mut rng);
    let ltilde = 1.0 + rng.gen::<f64>() * 3.0;
    let kind = RetractionKind::Projective;
    let cfg = InnerSolverConfig::default();

    let mut eta = Tangent::zero(x.clone());
    let mut ell_cur = 0.0f64;
    for it in 0..30 {
        let tr = solve_transferred(&obj, &x, &eta, ltilde, &cfg, kind).unwrap();
        let y = man.retract(&x, &eta, kind);
        let mut phis = vec![];
        for i in 0..2 {
            let lin = obj.riemannian_grad_f(i, &x).dot(&eta);
            let gd = obj.nonsmooth(i).eval(y.coords()) - obj.nonsmooth(i).eval(x.coords());
            phis.push(lin + gd);
        }
        let delta = phis[0] - phis[1];
        let xin = tr.xi.norm();
        let pull = man.d_retract_inverse(&x, &eta, &tr.xi, kind).unwrap();
        let mut alpha = 1.0f64;
        let mut taken = None;
        let floor = (f64::EPSILON * ell_cur.abs().max(1.0) / 1e-4).sqrt();
        let terminal = xin <= 10.0 * floor;
        while alpha >= 1e-12 {
            let cand = eta.add(&pull.scale(alpha));
            let ell_cand = p_eval(&obj, &x, &cand, ltilde, kind);
            let suff = ell_cand <= ell_cur - 1e-4 * alpha * xin * xin;
            let relax = terminal && ell_cand <= ell_cur + 1e-14 * ell_cur.abs() && ell_cand <= 0.0;
            if suff || relax {
                taken = Some((cand, ell_cand, alpha));
                break;
            }
            alpha *= 0.5;
        }
        println!(
            "it {it:2}: |xi|={xin:.3e} gap={:.1e} lam0={:.6} delta={delta:+.3e} term={} alpha={:.2e} dell={:+.3e}",
            tr.gap,
            tr.lambda[0],
            terminal as u8,
            taken.as_ref().map(|t| t.2).unwrap_or(f64::NAN),
            taken.as_ref().map(|t| t.1 - ell_cur).unwrap_or(f64::NAN),
        );
        match taken {
            Some((cand, ell_cand, _)) => {
                eta = cand;
                ell_cur = ell_cand;
            }
            None => {
                println!("   STALL");
                break;
            }
        }
        if xin < 1e-8 {
            break;
        }
    }
}
