//! Embedded-submanifold geometry for the unit sphere and Euclidean space.
//!
//! Supplies tangent projection, two retractions on the sphere (exponential
//! map and projective normalization), their inverses, and the differentiated
//! retraction together with its adjoint and inverse-adjoint. The last two are
//! the transport operators appearing in the optimality conditions of the
//! proximal-mapping subproblem.
//!
//! All operations are pure functions over immutable values; the Euclidean
//! manifold reduces every transport to the identity and serves as the flat
//! oracle backbone for cross-checks.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Tolerance used when checking that two tangent vectors share a base point.
const BASE_MATCH_TOL: f64 = 1e-9;
/// Condition-number guard for inverting the differentiated retraction.
const SINGULAR_COND: f64 = 1e12;

/// Retraction family on the sphere. The Euclidean manifold ignores the tag:
/// both choices equal vector addition there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetractionKind {
    /// Great-circle exponential map: `cos(|η|)·x + sin(|η|)·η/|η|`.
    Exponential,
    /// Normalization retraction: `(x + η)/|x + η|`.
    #[default]
    Projective,
}

/// A point on the manifold, stored in ambient coordinates.
///
/// Sphere points are unit vectors; the constructor normalizes and every
/// retraction renormalizes, so `|coords| = 1` holds to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn close_to(&self, other: &Point) -> bool {
        self.coords.len() == other.coords.len()
            && (&self.coords - &other.coords).norm() <= BASE_MATCH_TOL
    }
}

/// A tangent vector paired with its base point.
///
/// Mixing base points is a programming error: operations assert that their
/// tangent arguments are based where expected rather than silently
/// reprojecting.
#[derive(Debug, Clone)]
pub struct Tangent {
    base: Point,
    vec: DVector<f64>,
}

impl Tangent {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }

    pub fn dot(&self, other: &Tangent) -> f64 {
        assert!(
            self.base.close_to(&other.base),
            "tangent inner product requires a common base point"
        );
        self.vec.dot(&other.vec)
    }

    pub fn zero(base: Point) -> Tangent {
        let n = base.dim();
        Tangent {
            base,
            vec: DVector::zeros(n),
        }
    }

    pub fn scale(&self, a: f64) -> Tangent {
        Tangent {
            base: self.base.clone(),
            vec: &self.vec * a,
        }
    }

    pub fn add(&self, other: &Tangent) -> Tangent {
        assert!(
            self.base.close_to(&other.base),
            "tangent addition requires a common base point"
        );
        Tangent {
            base: self.base.clone(),
            vec: &self.vec + &other.vec,
        }
    }

    pub(crate) fn new_unchecked(base: Point, vec: DVector<f64>) -> Tangent {
        Tangent { base, vec }
    }
}

/// The supported embedded manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// Unit sphere `S^{n-1}` embedded in `R^n` (`ambient_dim = n >= 2`).
    Sphere { ambient_dim: usize },
    /// Flat `R^n`; all transports are the identity.
    Euclidean { dim: usize },
}

impl Manifold {
    pub fn sphere(ambient_dim: usize) -> Manifold {
        assert!(ambient_dim >= 2, "sphere needs ambient dimension >= 2");
        Manifold::Sphere { ambient_dim }
    }

    pub fn euclidean(dim: usize) -> Manifold {
        assert!(dim >= 1, "euclidean manifold needs dimension >= 1");
        Manifold::Euclidean { dim }
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Manifold::Sphere { ambient_dim } => ambient_dim,
            Manifold::Euclidean { dim } => dim,
        }
    }

    /// Dimension of the tangent spaces (`n - 1` on the sphere).
    pub fn tangent_dim(&self) -> usize {
        match *self {
            Manifold::Sphere { ambient_dim } => ambient_dim - 1,
            Manifold::Euclidean { dim } => dim,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Manifold::Sphere { .. })
    }

    /// Builds a point from ambient coordinates, normalizing onto the sphere.
    ///
    /// Panics on a dimension mismatch or a zero vector on the sphere.
    pub fn point(&self, coords: DVector<f64>) -> Point {
        assert_eq!(coords.len(), self.ambient_dim(), "point dimension mismatch");
        match self {
            Manifold::Sphere { .. } => {
                let norm = coords.norm();
                assert!(norm > 0.0, "cannot place the zero vector on the sphere");
                Point {
                    coords: coords / norm,
                }
            }
            Manifold::Euclidean { .. } => Point { coords },
        }
    }

    /// Uniform random point: normalized Gaussian on the sphere, standard
    /// Gaussian in Euclidean space.
    pub fn random_point<R: rand::Rng>(&self, rng: &mut R) -> Point {
        use rand_distr::{Distribution, StandardNormal};
        let n = self.ambient_dim();
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        self.point(v)
    }

    pub fn is_on_manifold(&self, p: &Point, tol: f64) -> bool {
        match self {
            Manifold::Sphere { .. } => (p.coords.norm() - 1.0).abs() <= tol,
            Manifold::Euclidean { .. } => true,
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space.
    ///
    /// Sphere: `v - <x,v>x`. Euclidean: identity. Idempotent.
    pub fn project_tangent(&self, x: &Point, v: &DVector<f64>) -> Tangent {
        assert_eq!(v.len(), self.ambient_dim(), "ambient vector dimension mismatch");
        Tangent {
            base: x.clone(),
            vec: self.proj_tan_raw(&x.coords, v),
        }
    }

    pub(crate) fn proj_tan_raw(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Sphere { .. } => v - &(x * x.dot(v)),
            Manifold::Euclidean { .. } => v.clone(),
        }
    }

    /// Retracts a tangent vector onto the manifold.
    pub fn retract(&self, x: &Point, eta: &Tangent, kind: RetractionKind) -> Point {
        assert!(eta.base.close_to(x), "retract: tangent based at a different point");
        Point {
            coords: self.retract_raw(kind, &x.coords, &eta.vec),
        }
    }

    pub(crate) fn retract_raw(
        &self,
        kind: RetractionKind,
        x: &DVector<f64>,
        eta: &DVector<f64>,
    ) -> DVector<f64> {
        match self {
            Manifold::Euclidean { .. } => x + eta,
            Manifold::Sphere { .. } => match kind {
                RetractionKind::Projective => {
                    let y = x + eta;
                    // |x + eta| >= 1 since eta ⊥ x, so this never divides by zero.
                    let n = y.norm();
                    y / n
                }
                RetractionKind::Exponential => {
                    let theta = eta.norm();
                    if theta < 1e-300 {
                        return x.clone();
                    }
                    let y = x * theta.cos() + eta * (theta.sin() / theta);
                    let n = y.norm();
                    y / n
                }
            },
        }
    }

    /// Inverse retraction: the tangent vector `η` with `R_x(η) = y`.
    ///
    /// Sphere domains: `<x,y> > 0` for the projective retraction (open
    /// hemisphere), `y != -x` for the exponential map.
    pub fn inverse_retract(&self, x: &Point, y: &Point, kind: RetractionKind) -> Result<Tangent> {
        let vec = match self {
            Manifold::Euclidean { .. } => &y.coords - &x.coords,
            Manifold::Sphere { .. } => {
                let c = x.coords.dot(&y.coords);
                match kind {
                    RetractionKind::Projective => {
                        if c <= 0.0 {
                            return Err(Error::AntipodalOrOutOfDomain);
                        }
                        &y.coords / c - &x.coords
                    }
                    RetractionKind::Exponential => {
                        if c <= -1.0 + 1e-12 {
                            return Err(Error::AntipodalOrOutOfDomain);
                        }
                        let theta = c.clamp(-1.0, 1.0).acos();
                        if theta == 0.0 {
                            DVector::zeros(x.dim())
                        } else {
                            let mut u = &y.coords - &(&x.coords * c);
                            let n = u.norm();
                            if n == 0.0 {
                                DVector::zeros(x.dim())
                            } else {
                                u /= n;
                                u * theta
                            }
                        }
                    }
                }
            }
        };
        Ok(Tangent {
            base: x.clone(),
            vec,
        })
    }

    /// Differentiated retraction `DR_x(η)[ζ]`, a tangent vector at `R_x(η)`.
    pub fn d_retract(
        &self,
        x: &Point,
        eta: &Tangent,
        zeta: &Tangent,
        kind: RetractionKind,
    ) -> Tangent {
        assert!(eta.base.close_to(x) && zeta.base.close_to(x), "d_retract: base mismatch");
        let y = self.retract(x, eta, kind);
        let vec = self.dr_raw(kind, &x.coords, &eta.vec, &zeta.vec);
        Tangent { base: y, vec }
    }

    /// Adjoint `DR_x(η)*[ξ]`: maps a tangent vector at `y = R_x(η)` back to `T_x`.
    pub fn d_retract_adjoint(
        &self,
        x: &Point,
        eta: &Tangent,
        xi: &Tangent,
        kind: RetractionKind,
    ) -> Tangent {
        assert!(eta.base.close_to(x), "d_retract_adjoint: eta based elsewhere");
        let y = self.retract(x, eta, kind);
        assert!(xi.base.close_to(&y), "d_retract_adjoint: xi must be based at R_x(eta)");
        let vec = self.dr_adj_raw(kind, &x.coords, &eta.vec, &xi.vec);
        Tangent {
            base: x.clone(),
            vec,
        }
    }

    /// Inverse adjoint `(DR_x(η)*)^{-1}[υ]`: maps a tangent vector at `x`
    /// forward to `T_y`, `y = R_x(η)`. This is the transport written
    /// `T^{-♯}` for differentiated retractions.
    pub fn d_retract_adjoint_inverse(
        &self,
        x: &Point,
        eta: &Tangent,
        upsilon: &Tangent,
        kind: RetractionKind,
    ) -> Result<Tangent> {
        assert!(
            eta.base.close_to(x) && upsilon.base.close_to(x),
            "d_retract_adjoint_inverse: base mismatch"
        );
        let y = self.retract(x, eta, kind);
        let vec = self.dr_adj_inv_raw(kind, &x.coords, &eta.vec, &upsilon.vec)?;
        Ok(Tangent { base: y, vec })
    }

    /// Inverse `DR_x(η)^{-1}[ξ]`: pulls a tangent vector at `y = R_x(η)`
    /// back to `T_x`. Used to pull transferred-subproblem steps back to the
    /// base tangent space.
    pub fn d_retract_inverse(
        &self,
        x: &Point,
        eta: &Tangent,
        xi: &Tangent,
        kind: RetractionKind,
    ) -> Result<Tangent> {
        assert!(eta.base.close_to(x), "d_retract_inverse: eta based elsewhere");
        let vec = self.dr_inv_raw(kind, &x.coords, &eta.vec, &xi.vec)?;
        Ok(Tangent {
            base: x.clone(),
            vec,
        })
    }

    pub(crate) fn dr_raw(
        &self,
        kind: RetractionKind,
        x: &DVector<f64>,
        eta: &DVector<f64>,
        zeta: &DVector<f64>,
    ) -> DVector<f64> {
        match self {
            Manifold::Euclidean { .. } => zeta.clone(),
            Manifold::Sphere { .. } => match kind {
                Projective => {
                    let xe = x + eta;
                    let r = xe.norm();
                    let y = xe / r;
                    (zeta - &(&y * y.dot(zeta))) / r
                }
                Exponential => {
                    let SphereExpFrame { u0, ut, sinc, .. } =
                        match SphereExpFrame::at(x, eta) {
                            Some(f) => f,
                            None => return zeta.clone(),
                        };
                    let along = u0.dot(zeta);
                    let perp = zeta - &(&u0 * along);
                    ut * along + perp * sinc
                }
            },
        }
    }

    pub(crate) fn dr_adj_raw(
        &self,
        kind: RetractionKind,
        x: &DVector<f64>,
        eta: &DVector<f64>,
        xi: &DVector<f64>,
    ) -> DVector<f64> {
        match self {
            Manifold::Euclidean { .. } => xi.clone(),
            Manifold::Sphere { .. } => match kind {
                Projective => {
                    let r = (x + eta).norm();
                    (xi - &(x * x.dot(xi))) / r
                }
                Exponential => {
                    let SphereExpFrame { u0, ut, sinc, .. } =
                        match SphereExpFrame::at(x, eta) {
                            Some(f) => f,
                            None => return xi.clone(),
                        };
                    let along = ut.dot(xi);
                    let perp = xi - &(&ut * along);
                    u0 * along + perp * sinc
                }
            },
        }
    }

    pub(crate) fn dr_adj_inv_raw(
        &self,
        kind: RetractionKind,
        x: &DVector<f64>,
        eta: &DVector<f64>,
        upsilon: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match self {
            Manifold::Euclidean { .. } => Ok(upsilon.clone()),
            Manifold::Sphere { .. } => match kind {
                Projective => {
                    let xe = x + eta;
                    let r = xe.norm();
                    if r * r > SINGULAR_COND {
                        return Err(Error::SingularTransport { cond: r * r });
                    }
                    let y = xe / r;
                    Ok((upsilon - &(x * (r * y.dot(upsilon)))) * r)
                }
                Exponential => {
                    let SphereExpFrame { u0, ut, sinc, .. } =
                        match SphereExpFrame::at(x, eta) {
                            Some(f) => f,
                            None => return Ok(upsilon.clone()),
                        };
                    if 1.0 / sinc.abs() > SINGULAR_COND {
                        return Err(Error::SingularTransport { cond: 1.0 / sinc.abs() });
                    }
                    let along = u0.dot(upsilon);
                    let perp = upsilon - &(&u0 * along);
                    Ok(ut * along + perp / sinc)
                }
            },
        }
    }

    pub(crate) fn dr_inv_raw(
        &self,
        kind: RetractionKind,
        x: &DVector<f64>,
        eta: &DVector<f64>,
        xi: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match self {
            Manifold::Euclidean { .. } => Ok(xi.clone()),
            Manifold::Sphere { .. } => match kind {
                Projective => {
                    let xe = x + eta;
                    let r = xe.norm();
                    if r * r > SINGULAR_COND {
                        return Err(Error::SingularTransport { cond: r * r });
                    }
                    let y = xe / r;
                    Ok((xi - &(y * (r * x.dot(xi)))) * r)
                }
                Exponential => {
                    let SphereExpFrame { u0, ut, sinc, .. } =
                        match SphereExpFrame::at(x, eta) {
                            Some(f) => f,
                            None => return Ok(xi.clone()),
                        };
                    if 1.0 / sinc.abs() > SINGULAR_COND {
                        return Err(Error::SingularTransport { cond: 1.0 / sinc.abs() });
                    }
                    let along = ut.dot(xi);
                    let perp = xi - &(&ut * along);
                    Ok(u0 * along + perp / sinc)
                }
            },
        }
    }

    /// Orthonormal basis of the tangent space at `x`, built by Gram-Schmidt
    /// of the coordinate axes against the normal direction.
    pub fn tangent_basis(&self, x: &Point) -> Vec<DVector<f64>> {
        let n = self.ambient_dim();
        let want = self.tangent_dim();
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(want);
        for i in 0..n {
            if basis.len() == want {
                break;
            }
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            let mut v = self.proj_tan_raw(&x.coords, &v);
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
            let norm = v.norm();
            if norm > 1e-8 {
                basis.push(v / norm);
            }
        }
        assert_eq!(basis.len(), want, "tangent basis construction failed");
        basis
    }
}

use RetractionKind::{Exponential, Projective};

/// Orthogonal frame for the sphere exponential map at step `eta`:
/// `u0 = eta/|eta|` at `x`, its parallel image `ut` at `y`, and
/// `sinc = sin|eta|/|eta|`, the gain on the complement of `span(x, u0)`.
struct SphereExpFrame {
    u0: DVector<f64>,
    ut: DVector<f64>,
    sinc: f64,
}

impl SphereExpFrame {
    /// `None` when `eta` is (numerically) zero and the differential is the identity.
    fn at(x: &DVector<f64>, eta: &DVector<f64>) -> Option<SphereExpFrame> {
        let theta = eta.norm();
        if theta < 1e-300 {
            return None;
        }
        let u0 = eta / theta;
        let ut = &u0 * theta.cos() - x * theta.sin();
        Some(SphereExpFrame {
            u0,
            ut,
            sinc: theta.sin() / theta,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    fn random_tangent<R: rand::Rng>(m: &Manifold, x: &Point, rng: &mut R) -> Tangent {
        use rand_distr::{Distribution, StandardNormal};
        let v = DVector::from_fn(m.ambient_dim(), |_, _| StandardNormal.sample(rng));
        m.project_tangent(x, &v)
    }

    #[test]
    fn projection_kills_normal_component() {
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        let t = m.project_tangent(&x, &e(3, 0));
        assert_relative_eq!(t.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_keeps_tangent_component() {
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        let t = m.project_tangent(&x, &e(3, 1));
        assert_relative_eq!((t.vec() - e(3, 1)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_hand_example() {
        // x = (1,1,0)/sqrt(2), v = e1  ->  v - <x,v>x = (1/2, -1/2, 0)
        let m = Manifold::sphere(3);
        let x = m.point(DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let t = m.project_tangent(&x, &e(3, 0));
        assert_relative_eq!(t.vec()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(t.vec()[1], -0.5, epsilon = 1e-14);
        assert_relative_eq!(t.vec()[2], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn projection_is_idempotent() {
        let m = Manifold::sphere(8);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = m.random_point(&mut rng);
            let t = random_tangent(&m, &x, &mut rng);
            let t2 = m.project_tangent(&x, t.vec());
            assert_relative_eq!((t.vec() - t2.vec()).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn retract_zero_is_identity() {
        let m = Manifold::sphere(5);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let x = m.random_point(&mut rng);
        for kind in [Projective, Exponential] {
            let y = m.retract(&x, &Tangent::zero(x.clone()), kind);
            assert_relative_eq!((y.coords() - x.coords()).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn retract_analytic_examples() {
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        // projective: x = e1, eta = e2 -> (e1+e2)/sqrt(2)
        let t = Tangent::new_unchecked(x.clone(), e(3, 1));
        let y = m.retract(&x, &t, Projective);
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(y.coords()[0], s, epsilon = 1e-15);
        assert_relative_eq!(y.coords()[1], s, epsilon = 1e-15);
        // exponential quarter great circle: eta = (pi/2) e2 -> e2
        let t = Tangent::new_unchecked(x.clone(), e(3, 1) * std::f64::consts::FRAC_PI_2);
        let y = m.retract(&x, &t, Exponential);
        assert_relative_eq!((y.coords() - e(3, 1)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn retraction_first_order_error_decays_superlinearly() {
        let m = Manifold::sphere(6);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let x = m.random_point(&mut rng);
        let zeta = random_tangent(&m, &x, &mut rng);
        for kind in [Projective, Exponential] {
            let mut prev_ratio = f64::INFINITY;
            for t in [1e-3, 1e-4, 1e-5] {
                let step = zeta.scale(t);
                let y = m.retract(&x, &step, kind);
                let err = (y.coords() - x.coords() - step.vec()).norm();
                let ratio = err / t;
                assert!(ratio < prev_ratio, "o(t) violated for {kind:?}");
                prev_ratio = ratio;
            }
        }
    }

    #[test]
    fn retraction_stays_on_sphere() {
        let m = Manifold::sphere(7);
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = m.random_point(&mut rng);
            let t = random_tangent(&m, &x, &mut rng);
            for kind in [Projective, Exponential] {
                let y = m.retract(&x, &t, kind);
                assert!(m.is_on_manifold(&y, 1e-12));
            }
        }
    }

    #[test]
    fn inverse_retract_round_trips() {
        let m = Manifold::sphere(6);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x = m.random_point(&mut rng);
            let t = random_tangent(&m, &x, &mut rng).scale(0.3);
            for kind in [Projective, Exponential] {
                let y = m.retract(&x, &t, kind);
                let back = m.inverse_retract(&x, &y, kind).unwrap();
                let again = m.retract(&x, &back, kind);
                assert!((again.coords() - y.coords()).norm() < 1e-10);
                assert!((back.vec() - t.vec()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn inverse_retract_examples() {
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        // y = x -> zero vector
        let z = m.inverse_retract(&x, &x, Projective).unwrap();
        assert_relative_eq!(z.norm(), 0.0, epsilon = 1e-15);
        // exponential: x = e1, y = e2 -> (pi/2) e2
        let y = m.point(e(3, 1));
        let t = m.inverse_retract(&x, &y, Exponential).unwrap();
        assert_relative_eq!(
            (t.vec() - e(3, 1) * std::f64::consts::FRAC_PI_2).norm(),
            0.0,
            epsilon = 1e-14
        );
        // projective: y = (e1+e2)/sqrt(2) -> e2
        let y = m.point(DVector::from_vec(vec![1.0, 1.0, 0.0]));
        let t = m.inverse_retract(&x, &y, Projective).unwrap();
        assert_relative_eq!((t.vec() - e(3, 1)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_retract_domain_errors() {
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        let anti = m.point(-e(3, 0));
        assert!(m.inverse_retract(&x, &anti, Exponential).is_err());
        assert!(m.inverse_retract(&x, &anti, Projective).is_err());
        let equator = m.point(e(3, 1));
        assert!(m.inverse_retract(&x, &equator, Projective).is_err());
    }

    #[test]
    fn d_retract_at_zero_is_identity() {
        let m = Manifold::sphere(5);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let x = m.random_point(&mut rng);
        let zeta = random_tangent(&m, &x, &mut rng);
        for kind in [Projective, Exponential] {
            let out = m.d_retract(&x, &Tangent::zero(x.clone()), &zeta, kind);
            assert!((out.vec() - zeta.vec()).norm() < 1e-14);
        }
    }

    #[test]
    fn d_retract_projective_hand_example() {
        // x = e1, eta = e2, zeta = e3 -> (I - yy^T) e3 / sqrt(2) = e3/sqrt(2)
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        let eta = Tangent::new_unchecked(x.clone(), e(3, 1));
        let zeta = Tangent::new_unchecked(x.clone(), e(3, 2));
        let out = m.d_retract(&x, &eta, &zeta, Projective);
        assert_relative_eq!(
            (out.vec() - e(3, 2) / 2f64.sqrt()).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn d_retract_matches_central_differences() {
        let m = Manifold::sphere(8);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let h = 1e-6;
        for kind in [Projective, Exponential] {
            for _ in 0..20 {
                let x = m.random_point(&mut rng);
                let eta = random_tangent(&m, &x, &mut rng).scale(0.4);
                let zeta = random_tangent(&m, &x, &mut rng);
                let out = m.d_retract(&x, &eta, &zeta, kind);
                let plus = m.retract_raw(kind, x.coords(), &(eta.vec() + zeta.vec() * h));
                let minus = m.retract_raw(kind, x.coords(), &(eta.vec() - zeta.vec() * h));
                let fd = (plus - minus) / (2.0 * h);
                let scale = out.vec().norm().max(1.0);
                assert!(
                    (out.vec() - &fd).norm() / scale < 1e-6,
                    "finite-difference mismatch for {kind:?}"
                );
            }
        }
    }

    #[test]
    fn adjoint_pairing_identity() {
        let m = Manifold::sphere(8);
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for kind in [Projective, Exponential] {
            for _ in 0..100 {
                let x = m.random_point(&mut rng);
                let eta = random_tangent(&m, &x, &mut rng).scale(0.5);
                let zeta = random_tangent(&m, &x, &mut rng);
                let y = m.retract(&x, &eta, kind);
                let xi = random_tangent(&m, &y, &mut rng);
                let lhs = m.d_retract(&x, &eta, &zeta, kind).dot(&xi);
                let rhs = zeta.dot(&m.d_retract_adjoint(&x, &eta, &xi, kind));
                assert!((lhs - rhs).abs() < 1e-10, "pairing broken for {kind:?}");
            }
        }
    }

    #[test]
    fn adjoint_of_projective_is_scaled_projection() {
        let m = Manifold::sphere(6);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let x = m.random_point(&mut rng);
        let eta = random_tangent(&m, &x, &mut rng).scale(0.7);
        let y = m.retract(&x, &eta, Projective);
        let xi = random_tangent(&m, &y, &mut rng);
        let r = (x.coords() + eta.vec()).norm();
        let direct = m.d_retract_adjoint(&x, &eta, &xi, Projective);
        let projected = m.project_tangent(&x, xi.vec()).scale(1.0 / r);
        assert!((direct.vec() - projected.vec()).norm() < 1e-12);
    }

    #[test]
    fn adjoint_inverse_round_trip() {
        let m = Manifold::sphere(8);
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        for kind in [Projective, Exponential] {
            for _ in 0..50 {
                let x = m.random_point(&mut rng);
                let eta = random_tangent(&m, &x, &mut rng).scale(0.5);
                let ups = random_tangent(&m, &x, &mut rng);
                let fwd = m.d_retract_adjoint_inverse(&x, &eta, &ups, kind).unwrap();
                let back = m.d_retract_adjoint(&x, &eta, &fwd, kind);
                assert!(
                    (back.vec() - ups.vec()).norm() < 1e-9,
                    "adjoint round trip failed for {kind:?}"
                );
            }
        }
    }

    #[test]
    fn d_retract_inverse_round_trip() {
        let m = Manifold::sphere(8);
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        for kind in [Projective, Exponential] {
            let x = m.random_point(&mut rng);
            let eta = random_tangent(&m, &x, &mut rng).scale(0.5);
            let zeta = random_tangent(&m, &x, &mut rng);
            let fwd = m.d_retract(&x, &eta, &zeta, kind);
            let back = m.d_retract_inverse(&x, &eta, &fwd, kind).unwrap();
            assert!((back.vec() - zeta.vec()).norm() < 1e-10);
        }
    }

    #[test]
    fn inverse_adjoint_transport_converges_to_field_value() {
        // For a fixed smooth vector field xi(p) = P_p(c), the transported
        // value (DR_x(eta)^*)^{-1} xi_x approaches xi_y as |eta| -> 0.
        let m = Manifold::sphere(6);
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let x = m.random_point(&mut rng);
        let c = DVector::from_fn(6, |i, _| (i as f64 * 0.7).sin() + 0.2);
        let dir = random_tangent(&m, &x, &mut rng);
        let dir = dir.scale(1.0 / dir.norm());
        for kind in [Projective, Exponential] {
            let mut prev = f64::INFINITY;
            for h in [1e-1, 1e-2, 1e-3] {
                let eta = dir.scale(h);
                let y = m.retract(&x, &eta, kind);
                let xi_x = m.project_tangent(&x, &c);
                let xi_y = m.project_tangent(&y, &c);
                let moved = m.d_retract_adjoint_inverse(&x, &eta, &xi_x, kind).unwrap();
                let gap = (moved.vec() - xi_y.vec()).norm();
                assert!(gap < prev, "transport gap not decreasing for {kind:?}");
                prev = gap;
            }
            assert!(prev < 1e-3);
        }
    }

    #[test]
    fn euclidean_everything_is_identity() {
        let m = Manifold::euclidean(4);
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let x = m.random_point(&mut rng);
        let eta = random_tangent(&m, &x, &mut rng);
        let zeta = random_tangent(&m, &x, &mut rng);
        let y = m.retract(&x, &eta, Projective);
        assert!((y.coords() - (x.coords() + eta.vec())).norm() < 1e-15);
        assert!((m.dr_raw(Projective, x.coords(), eta.vec(), zeta.vec()) - zeta.vec()).norm() < 1e-15);
        assert!(
            (m.dr_adj_inv_raw(Exponential, x.coords(), eta.vec(), zeta.vec())
                .unwrap()
                - zeta.vec())
            .norm()
                < 1e-15
        );
        let back = m.inverse_retract(&x, &y, Exponential).unwrap();
        assert!((back.vec() - eta.vec()).norm() < 1e-15);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let m = Manifold::sphere(5);
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let x = m.random_point(&mut rng);
        let basis = m.tangent_basis(&x);
        assert_eq!(basis.len(), 4);
        for (i, bi) in basis.iter().enumerate() {
            assert!(bi.dot(x.coords()).abs() < 1e-12);
            for (j, bj) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((bi.dot(bj) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    #[should_panic(expected = "common base point")]
    fn mixed_bases_are_rejected() {
        let m = Manifold::sphere(3);
        let x = m.point(e(3, 0));
        let y = m.point(e(3, 1));
        let a = Tangent::zero(x);
        let b = Tangent::zero(y);
        let _ = a.add(&b);
    }
}
