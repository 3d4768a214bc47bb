//! Property tests for the structural invariants.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use ssp_core::field::{LinearSystemField, MatrixField, VectorField};
use ssp_core::grid::Grid;
use ssp_core::positivity::{assemble_q0, assemble_q1, check_ssp};
use ssp_core::smoothing::Smoother;
use ssp_core::sym::Cubic;

fn coeff() -> impl Strategy<Value = f64> {
    -2.0..2.0
}

/// Random 2×2 symmetric-jet system in two variables.
fn jet_system() -> impl Strategy<Value = LinearSystemField<f64>> {
    (
        proptest::collection::vec(coeff(), 6),
        proptest::collection::vec(coeff(), 12),
        proptest::collection::vec(coeff(), 4),
    )
        .prop_map(|(a0, alin, b)| {
            let sym = |c: &[f64]| DMatrix::from_row_slice(2, 2, &[c[0], c[1], c[1], c[2]]);
            let a = (0..2)
                .map(|i| {
                    MatrixField::jet(
                        sym(&a0[3 * i..3 * i + 3]),
                        (0..2).map(|j| sym(&alin[6 * i + 3 * j..6 * i + 3 * j + 3])).collect(),
                    )
                })
                .collect();
            let b = MatrixField::constant(DMatrix::from_row_slice(2, 2, &b));
            LinearSystemField::new(2, 2, a, b, VectorField::zero(2), true).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The first-order block form is exactly symmetric by construction, and
    /// the zeroth-order form symmetric to round-off.
    #[test]
    fn q1_exactly_symmetric(sys in jet_system(), x0 in -1.0..1.0f64, x1 in -1.0..1.0f64) {
        let q1 = assemble_q1(&sys, &[x0, x1], 1e-5).unwrap();
        prop_assert!((&q1 - q1.transpose()).abs().max() == 0.0);
        let q0 = assemble_q0(&sys, &[x0, x1], 1e-5).unwrap();
        prop_assert!((&q0 - q0.transpose()).abs().max() < 1e-10);
    }

    /// Full positivity of the block form implies its rank-one positivity.
    #[test]
    fn legendre_implies_legendre_hadamard(sys in jet_system()) {
        let samples = vec![vec![0.0, 0.0], vec![0.5, -0.5]];
        let rep = check_ssp(&sys, &samples, 1e-10).unwrap();
        if rep.lambda1_min > 0.0 {
            prop_assert!(rep.lh_min > 0.0);
        }
        // And always: the rank-one minimum dominates the full minimum.
        prop_assert!(rep.lh_min >= rep.lambda1_min - 1e-12);
    }

    /// The extension operator is the identity on the inner ball and linear.
    #[test]
    fn extension_identity_and_linear(c0 in coeff(), c1 in coeff(), x in -0.99..0.99f64) {
        let f = move |a: f64, b: f64| -> ssp_core::field::MatrixFn<f64> {
            Arc::new(move |x: &[f64]| DMatrix::from_row_slice(1, 1, &[a + b * x[0] * x[0]]))
        };
        let e1 = ssp_core::extension::extend_matrix_field(f(c0, c1), 1.0, 1, 1);
        let inner = e1(&[x])[(0, 0)];
        prop_assert_eq!(inner, c0 + c1 * x * x);
        // Linearity at an annulus point.
        let ea = ssp_core::extension::extend_matrix_field(f(c0, 0.0), 1.0, 1, 1);
        let eb = ssp_core::extension::extend_matrix_field(f(0.0, c1), 1.0, 1, 1);
        let y = [1.37];
        prop_assert!((e1(&y)[(0, 0)] - ea(&y)[(0, 0)] - eb(&y)[(0, 0)]).abs() < 1e-12);
    }

    /// Smoothing is linear and mass-preserving on constants.
    #[test]
    fn smoothing_linear_and_unit_mass(a in coeff(), b in coeff(), t in 2.0..16.0f64) {
        let grid: Grid<f64> = Grid::ball(1, 1.0, 0.05).unwrap();
        let sm = Smoother;
        let u = grid.sample(|x| (3.0 * x[0]).sin());
        let v = grid.sample(|x| x[0] * x[0]);
        let lhs = sm.smooth(&grid, &(&u * a + &v * b), 1, t).unwrap();
        let rhs = sm.smooth(&grid, &u, 1, t).unwrap() * a + sm.smooth(&grid, &v, 1, t).unwrap() * b;
        prop_assert!((lhs - rhs).abs().max() < 1e-12);
        let ones = DVector::from_element(grid.len(), 1.0);
        let sones = sm.smooth(&grid, &ones, 1, t).unwrap();
        prop_assert!((sones - ones).abs().max() < 1e-12);
    }

    /// Cubic storage is fully symmetric in all index orders.
    #[test]
    fn cubic_full_symmetry(vals in proptest::collection::vec(coeff(), 10)) {
        let c: Cubic<f64> = Cubic::from_coeffs(3, vals);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    prop_assert_eq!(c.get(i, j, k), c.get(j, i, k));
                    prop_assert_eq!(c.get(i, j, k), c.get(i, k, j));
                    prop_assert_eq!(c.get(i, j, k), c.get(k, j, i));
                    // Slice symmetry mirrors storage symmetry.
                    prop_assert_eq!(c.slice(i)[(j, k)], c.slice(j)[(i, k)]);
                }
            }
        }
    }

    /// Discrete Sobolev norms are monotone in the order and vanish only on
    /// the zero function.
    #[test]
    fn sobolev_norms_monotone(freq in 0.5..6.0f64) {
        let grid: Grid<f64> = Grid::ball(1, 1.0, 0.05).unwrap();
        let u = grid.sample(|x| (freq * x[0]).sin());
        let mut last = 0.0;
        for k in 0..=3 {
            let n = ssp_core::grid::sobolev_norm(&grid, &u, 1, k);
            prop_assert!(n >= last);
            last = n;
        }
        prop_assert!(last > 0.0);
    }
}
