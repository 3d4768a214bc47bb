//! Curvature data at a point for n = 2 and n = 3.
//!
//! For n = 3 the Riemann tensor is stored as the symmetric 3×3 matrix `R̂`
//! representing the induced quadratic form on 2-vectors in the basis
//! `(e2∧e3, e3∧e1, e1∧e2)`, and its first derivatives as the 15 independent
//! components surviving the second Bianchi identities, in the fixed order
//!
//! ```text
//! [ r1212,1  r3131,1  r2331,1  r3112,1  r1223,1
//!   r2323,2  r1212,2  r3112,2  r1223,2  r2331,2
//!   r3131,3  r2323,3  r1223,3  r2331,3  r3112,3 ]
//! ```
//!
//! The three components excluded from the list (`r2323,1`, `r3131,2`,
//! `r1212,3`) are exactly the ones the Bianchi identities determine.

use nalgebra::DMatrix;

use crate::{Error, Result, Scalar};

/// Curvature jet for n = 2: Gauss curvature and its two first derivatives.
/// The second Bianchi identities are vacuous here.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureJet2D<T: Scalar> {
    pub k: T,
    pub k1: T,
    pub k2: T,
}

/// The 15 retained derivative components as `((i,j,k,l), m)`, 0-based.
pub const R_DERIV_ORDER: [([usize; 4], usize); 15] = [
    ([0, 1, 0, 1], 0),
    ([2, 0, 2, 0], 0),
    ([1, 2, 2, 0], 0),
    ([2, 0, 0, 1], 0),
    ([0, 1, 1, 2], 0),
    ([1, 2, 1, 2], 1),
    ([0, 1, 0, 1], 1),
    ([2, 0, 0, 1], 1),
    ([0, 1, 1, 2], 1),
    ([1, 2, 2, 0], 1),
    ([2, 0, 2, 0], 2),
    ([1, 2, 1, 2], 2),
    ([0, 1, 1, 2], 2),
    ([1, 2, 2, 0], 2),
    ([2, 0, 0, 1], 2),
];

/// Curvature jet for n = 3.
#[derive(Clone, Debug)]
pub struct CurvatureJet3D<T: Scalar> {
    rhat: DMatrix<T>,
    r: [T; 15],
}

/// Wedge-basis index of an ordered pair `(i, j)`, `i != j`:
/// `(1,2) -> 0`, `(2,0) -> 1`, `(0,1) -> 2`, with sign −1 on the swapped pair.
pub fn pair_index(i: usize, j: usize) -> Option<(usize, f64)> {
    match (i, j) {
        (1, 2) => Some((0, 1.0)),
        (2, 1) => Some((0, -1.0)),
        (2, 0) => Some((1, 1.0)),
        (0, 2) => Some((1, -1.0)),
        (0, 1) => Some((2, 1.0)),
        (1, 0) => Some((2, -1.0)),
        _ => None,
    }
}

impl<T: Scalar> CurvatureJet3D<T> {
    /// Build from `R̂` and the 15 retained derivative components.  `R̂` must
    /// be symmetric; the Bianchi identities hold by construction.
    pub fn new(rhat: DMatrix<T>, r: [T; 15]) -> Result<Self> {
        if rhat.nrows() != 3 || rhat.ncols() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: rhat.nrows().max(rhat.ncols()),
                context: "Rhat shape",
            });
        }
        let asym = (&rhat - rhat.transpose()).abs().max();
        if asym > T::c(1e-10) * (T::one() + rhat.abs().max()) {
            return Err(Error::InvalidInput(format!(
                "Rhat is not symmetric (asymmetry {})",
                asym.to_real()
            )));
        }
        Ok(CurvatureJet3D {
            rhat: crate::linalg::symmetrize(&rhat),
            r,
        })
    }

    /// Build from a full table of derivative components, validating the
    /// curvature symmetries and the three second Bianchi identities within
    /// `tol` (violating inputs are rejected).
    pub fn from_derivatives(
        rhat: DMatrix<T>,
        deriv: impl Fn(usize, usize, usize, usize, usize) -> T,
        tol: T,
    ) -> Result<Self> {
        let scale = {
            let mut s = T::one();
            for (idx, m) in R_DERIV_ORDER {
                s = s.max(deriv(idx[0], idx[1], idx[2], idx[3], m).abs());
            }
            s
        };
        // Second Bianchi sums, one per derivative-index cycle.
        let b1 = deriv(1, 2, 1, 2, 0) + deriv(1, 2, 2, 0, 1) + deriv(0, 1, 1, 2, 2);
        let b2 = deriv(1, 2, 2, 0, 0) + deriv(2, 0, 2, 0, 1) + deriv(2, 0, 0, 1, 2);
        let b3 = deriv(0, 1, 1, 2, 0) + deriv(2, 0, 0, 1, 1) + deriv(0, 1, 0, 1, 2);
        for b in [b1, b2, b3] {
            if b.abs() > tol * scale.max(T::one()) {
                return Err(Error::BianchiViolation(b.to_real()));
            }
        }
        let mut r = [T::zero(); 15];
        for (pos, (idx, m)) in R_DERIV_ORDER.iter().enumerate() {
            r[pos] = deriv(idx[0], idx[1], idx[2], idx[3], *m);
        }
        Self::new(rhat, r)
    }

    pub fn rhat(&self) -> &DMatrix<T> {
        &self.rhat
    }

    pub fn r_components(&self) -> &[T; 15] {
        &self.r
    }

    /// `R_{ijkl}` reconstructed from `R̂`.
    pub fn riemann(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        match (pair_index(i, j), pair_index(k, l)) {
            (Some((a, sa)), Some((b, sb))) => self.rhat[(a, b)] * T::c(sa * sb),
            _ => T::zero(),
        }
    }

    /// `∂_m R_{ijkl}` reconstructed from the retained components and the
    /// Bianchi identities.
    pub fn riemann_deriv(&self, i: usize, j: usize, k: usize, l: usize, m: usize) -> T {
        let (a, sa) = match pair_index(i, j) {
            Some(p) => p,
            None => return T::zero(),
        };
        let (b, sb) = match pair_index(k, l) {
            Some(p) => p,
            None => return T::zero(),
        };
        self.rhat_deriv_entry(a.min(b), a.max(b), m) * T::c(sa * sb)
    }

    /// Derivative of the `(a, b)` entry of `R̂` in direction `m`, using the
    /// Bianchi identities for the three excluded diagonal components.
    fn rhat_deriv_entry(&self, a: usize, b: usize, m: usize) -> T {
        let lookup = |i: usize, j: usize, k: usize, l: usize, mm: usize| -> T {
            let key = ([i, j, k, l], mm);
            for (pos, entry) in R_DERIV_ORDER.iter().enumerate() {
                if *entry == key {
                    return self.r[pos];
                }
            }
            unreachable!("component not retained")
        };
        match (a, b, m) {
            // Bianchi-determined diagonal components.
            (0, 0, 0) => -(lookup(1, 2, 2, 0, 1) + lookup(0, 1, 1, 2, 2)),
            (1, 1, 1) => -(lookup(1, 2, 2, 0, 0) + lookup(2, 0, 0, 1, 2)),
            (2, 2, 2) => -(lookup(0, 1, 1, 2, 0) + lookup(2, 0, 0, 1, 1)),
            (0, 0, mm) => lookup(1, 2, 1, 2, mm),
            (1, 1, mm) => lookup(2, 0, 2, 0, mm),
            (2, 2, mm) => lookup(0, 1, 0, 1, mm),
            (0, 1, mm) => lookup(1, 2, 2, 0, mm),
            (0, 2, mm) => lookup(0, 1, 1, 2, mm),
            (1, 2, mm) => lookup(2, 0, 0, 1, mm),
            _ => unreachable!("a <= b"),
        }
    }

    /// Pull the jet back under the linear coordinate change `x = T x̄`:
    /// `R̄_{ijkl} = T^p_i T^q_j T^r_k T^s_l R_{pqrs}` and the analogous
    /// five-index rule for the derivatives.
    pub fn pullback(&self, t: &DMatrix<T>) -> Result<Self> {
        assert_eq!((t.nrows(), t.ncols()), (3, 3));
        let full = |i: usize, j: usize, k: usize, l: usize| self.riemann(i, j, k, l);
        let mut rhat_new = DMatrix::zeros(3, 3);
        let basis: [(usize, usize); 3] = [(1, 2), (2, 0), (0, 1)];
        for (a, &(i, j)) in basis.iter().enumerate() {
            for (b, &(k, l)) in basis.iter().enumerate() {
                let mut acc = T::zero();
                for p in 0..3 {
                    for q in 0..3 {
                        for r in 0..3 {
                            for s in 0..3 {
                                acc += t[(p, i)] * t[(q, j)] * t[(r, k)] * t[(s, l)]
                                    * full(p, q, r, s);
                            }
                        }
                    }
                }
                rhat_new[(a, b)] = acc;
            }
        }
        let deriv = |i: usize, j: usize, k: usize, l: usize, m: usize| -> T {
            let mut acc = T::zero();
            for p in 0..3 {
                for q in 0..3 {
                    for r in 0..3 {
                        for s in 0..3 {
                            for u in 0..3 {
                                acc += t[(p, i)] * t[(q, j)] * t[(r, k)] * t[(s, l)]
                                    * t[(u, m)]
                                    * self.riemann_deriv(p, q, r, s, u);
                            }
                        }
                    }
                }
            }
            acc
        };
        Self::from_derivatives(rhat_new, deriv, T::c(1e-8))
    }
}

/// Derivative component `(i,j,k,l,m)` of an n = 2 jet (`K = R_{1212}`).
pub fn riemann2_deriv<T: Scalar>(curv: &CurvatureJet2D<T>, i: usize, j: usize, k: usize, l: usize, m: usize) -> T {
    let sign = |a: usize, b: usize| -> Option<T> {
        match (a, b) {
            (0, 1) => Some(T::one()),
            (1, 0) => Some(-T::one()),
            _ => None,
        }
    };
    match (sign(i, j), sign(k, l)) {
        (Some(s1), Some(s2)) => {
            let km = if m == 0 { curv.k1 } else { curv.k2 };
            s1 * s2 * km
        }
        _ => T::zero(),
    }
}
