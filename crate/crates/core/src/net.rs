//! Deterministic sampling nets on unit spheres and balls.
//!
//! Reports built on these nets are reproducible bit for bit: endpoints in 1-D,
//! uniform angles in 2-D, a spherical Fibonacci net in 3-D, and a seeded
//! Gaussian net in higher dimensions (documented as a sampling lower bound,
//! not a proof).

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Scalar;

/// Points on the unit sphere in `R^dim`.  At least `count` points are
/// returned for `dim >= 2`; for `dim == 1` the two endpoints.
pub fn unit_sphere<T: Scalar>(dim: usize, count: usize) -> Vec<DVector<T>> {
    match dim {
        0 => panic!("zero-dimensional sphere"),
        1 => vec![
            DVector::from_row_slice(&[T::one()]),
            DVector::from_row_slice(&[-T::one()]),
        ],
        2 => {
            let m = count.max(4);
            (0..m)
                .map(|k| {
                    let theta = T::c(2.0 * std::f64::consts::PI * k as f64 / m as f64);
                    DVector::from_row_slice(&[theta.cos(), theta.sin()])
                })
                .collect()
        }
        3 => spherical_fibonacci(count.max(8)),
        _ => seeded_gaussian_sphere(dim, count.max(16)),
    }
}

fn spherical_fibonacci<T: Scalar>(count: usize) -> Vec<DVector<T>> {
    let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
            DVector::from_row_slice(&[T::c(r * phi.cos()), T::c(r * phi.sin()), T::c(z)])
        })
        .collect()
}

fn seeded_gaussian_sphere<T: Scalar>(dim: usize, count: usize) -> Vec<DVector<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            DVector::from_iterator(dim, v.into_iter().map(|x| T::c(x / norm)))
        })
        .collect()
}

/// Box-Muller draw; kept local so the net layout never depends on
/// distribution-crate internals.
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Deterministic net filling the ball of radius `radius` about `center`:
/// concentric sphere shells plus the center point.  Returns roughly `count`
/// points.
pub fn ball<T: Scalar>(dim: usize, center: &DVector<T>, radius: T, count: usize) -> Vec<DVector<T>> {
    assert_eq!(center.len(), dim);
    let shells = ((count as f64).powf(1.0 / dim as f64).ceil() as usize).max(2);
    let per_shell = count.div_ceil(shells).max(2);
    let mut pts = vec![center.clone()];
    for i in 0..shells {
        let r = radius * T::c((i as f64 + 1.0) / shells as f64);
        for dir in unit_sphere::<T>(dim, per_shell) {
            pts.push(center + dir * r);
        }
    }
    pts
}

/// Uniformly spaced interior samples of the interval `(a, b)`.
pub fn interval<T: Scalar>(a: T, b: T, count: usize) -> Vec<T> {
    let m = count.max(2);
    (0..m)
        .map(|k| a + (b - a) * T::c((k as f64 + 0.5) / m as f64))
        .collect()
}
