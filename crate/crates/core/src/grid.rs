//! Lattice grids on balls (intervals in 1-D, discs in 2-D) and discrete
//! Sobolev norms.
//!
//! Nodes are the lattice points `spacing · z` with `|x| ≤ radius`, ordered
//! lexicographically, so every construction is reproducible.  Grid functions
//! store `s` components per node, node-major.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::{Error, Result, Scalar};

#[derive(Clone, Debug)]
pub struct Grid<T: Scalar> {
    pub n: usize,
    pub radius: T,
    pub spacing: T,
    lattice: Vec<[i64; 2]>,
    index: BTreeMap<[i64; 2], usize>,
    boundary: Vec<bool>,
}

impl<T: Scalar> Grid<T> {
    /// Lattice covering the closed ball of radius `radius` about the origin.
    pub fn ball(n: usize, radius: T, spacing: T) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::InvalidInput(
                "grids are implemented for n = 1 and n = 2".into(),
            ));
        }
        if spacing <= T::zero() || radius <= spacing {
            return Err(Error::InvalidInput(
                "need 0 < spacing < radius".into(),
            ));
        }
        let m = (radius / spacing).to_real().floor() as i64;
        let mut lattice = Vec::new();
        let r2 = radius * radius;
        for i in -m..=m {
            if n == 1 {
                lattice.push([i, 0]);
            } else {
                for j in -m..=m {
                    let x = spacing * T::c(i as f64);
                    let y = spacing * T::c(j as f64);
                    if x * x + y * y <= r2 + T::c(1e-12) {
                        lattice.push([i, j]);
                    }
                }
            }
        }
        lattice.sort_unstable();
        // Drop nodes missing both neighbors in some direction (isolated rim
        // points of the staircase boundary), so one-sided differences are
        // available everywhere.  Removing a node can orphan another, so
        // iterate to a fixed point.
        loop {
            let present: std::collections::BTreeSet<[i64; 2]> =
                lattice.iter().copied().collect();
            let keep: Vec<[i64; 2]> = lattice
                .iter()
                .copied()
                .filter(|&z| {
                    (0..n).all(|d| {
                        let mut fwd = z;
                        fwd[d] += 1;
                        let mut bwd = z;
                        bwd[d] -= 1;
                        present.contains(&fwd) || present.contains(&bwd)
                    })
                })
                .collect();
            if keep.len() == lattice.len() {
                break;
            }
            lattice = keep;
        }
        let index: BTreeMap<[i64; 2], usize> = lattice
            .iter()
            .enumerate()
            .map(|(p, &z)| (z, p))
            .collect();
        let boundary = lattice
            .iter()
            .map(|&z| {
                (0..n).any(|d| {
                    let mut fwd = z;
                    fwd[d] += 1;
                    let mut bwd = z;
                    bwd[d] -= 1;
                    !index.contains_key(&fwd) || !index.contains_key(&bwd)
                })
            })
            .collect();
        Ok(Grid {
            n,
            radius,
            spacing,
            lattice,
            index,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn point(&self, p: usize) -> Vec<T> {
        let z = self.lattice[p];
        (0..self.n)
            .map(|d| self.spacing * T::c(z[d] as f64))
            .collect()
    }

    /// Index of the node `steps` lattice steps from `p` along `dir`.
    pub fn neighbor(&self, p: usize, dir: usize, steps: i64) -> Option<usize> {
        let mut z = self.lattice[p];
        z[dir] += steps;
        self.index.get(&z).copied()
    }

    /// Index of the node at lattice coordinates `z`, if present.
    pub fn node_at(&self, z: [i64; 2]) -> Option<usize> {
        self.index.get(&z).copied()
    }

    pub fn is_boundary(&self, p: usize) -> bool {
        self.boundary[p]
    }

    /// Quadrature weight per node.
    pub fn weight(&self) -> T {
        let mut w = T::one();
        for _ in 0..self.n {
            w *= self.spacing;
        }
        w
    }

    /// Sample a scalar function into a grid vector with `s = 1`.
    pub fn sample(&self, f: impl Fn(&[T]) -> T) -> DVector<T> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|p| f(&self.point(p))))
    }
}

/// All multi-indices `β` with `|β| ≤ k` in `n` variables, low order first.
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=k {
        // Enumerate compositions of `total` into n parts.
        let mut stack = vec![(Vec::new(), total)];
        while let Some((prefix, rest)) = stack.pop() {
            if prefix.len() == n - 1 {
                let mut beta = prefix.clone();
                beta.push(rest);
                out.push(beta);
            } else {
                for take in (0..=rest).rev() {
                    let mut next = prefix.clone();
                    next.push(take);
                    stack.push((next, rest - take));
                }
            }
        }
    }
    out
}

/// Forward-difference derivative of a grid function along `dir`; `None`
/// where the forward neighbor is missing.
fn forward_diff<T: Scalar>(
    grid: &Grid<T>,
    values: &[Option<T>],
    dir: usize,
) -> Vec<Option<T>> {
    let inv = T::one() / grid.spacing;
    (0..grid.len())
        .map(|p| {
            let here = values[p]?;
            let fwd = grid.neighbor(p, dir, 1).and_then(|q| values[q])?;
            Some((fwd - here) * inv)
        })
        .collect()
}

/// Discrete Sobolev norm `‖u‖_k` of a grid function with `s` components per
/// node: quadrature over nodes of all forward-difference derivatives up to
/// order `k`.
pub fn sobolev_norm<T: Scalar>(grid: &Grid<T>, values: &DVector<T>, s: usize, k: usize) -> T {
    assert_eq!(values.len(), grid.len() * s);
    let w = grid.weight();
    let mut acc = T::zero();
    for comp in 0..s {
        let base: Vec<Option<T>> = (0..grid.len())
            .map(|p| Some(values[p * s + comp]))
            .collect();
        for beta in multi_indices(grid.n, k) {
            let mut d = base.clone();
            for (dir, &times) in beta.iter().enumerate() {
                for _ in 0..times {
                    d = forward_diff(grid, &d, dir);
                }
            }
            for v in d.into_iter().flatten() {
                acc += w * v * v;
            }
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_counts_nodes() {
        let g: Grid<f64> = Grid::ball(1, 1.0, 0.25).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.is_boundary(0));
        assert!(!g.is_boundary(4));
    }

    #[test]
    fn disc_grid_inside_radius() {
        let g: Grid<f64> = Grid::ball(2, 1.0, 0.2).unwrap();
        for p in 0..g.len() {
            let x = g.point(p);
            assert!(x[0] * x[0] + x[1] * x[1] <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn norms_are_monotone_in_k() {
        let g: Grid<f64> = Grid::ball(2, 1.0, 0.1).unwrap();
        let u = g.sample(|x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos());
        let n0 = sobolev_norm(&g, &u, 1, 0);
        let n1 = sobolev_norm(&g, &u, 1, 1);
        let n2 = sobolev_norm(&g, &u, 1, 2);
        assert!(n0 <= n1 && n1 <= n2);
        assert!(n0 > 0.0);
    }

    #[test]
    fn norm_vanishes_only_on_zero() {
        let g: Grid<f64> = Grid::ball(1, 1.0, 0.1).unwrap();
        let zero = DVector::zeros(g.len());
        assert_eq!(sobolev_norm(&g, &zero, 1, 2), 0.0);
        let mut one_hot = DVector::zeros(g.len());
        one_hot[3] = 1e-9;
        assert!(sobolev_norm(&g, &one_hot, 1, 0) > 0.0);
    }

    #[test]
    fn l2_norm_approximates_integral() {
        // ∫_{-1}^{1} x² dx = 2/3.
        let g: Grid<f64> = Grid::ball(1, 1.0, 0.001).unwrap();
        let u = g.sample(|x| x[0]);
        let n0 = sobolev_norm(&g, &u, 1, 0);
        assert!((n0 * n0 - 2.0 / 3.0).abs() < 1e-2);
    }

    #[test]
    fn multi_index_enumeration() {
        let idx = multi_indices(2, 2);
        assert_eq!(idx.len(), 6);
        assert!(idx.contains(&vec![1, 1]));
        assert!(idx.contains(&vec![0, 0]));
    }
}
