//! Uniform tensor trapezoid rules for kernel integrals over the plane.
//!
//! The integrands are Gaussian times polynomial with a phase that is linear
//! in the integration variable, so a uniform rule on a box that extends
//! `r_cut` beyond the support converges spectrally once the spacing resolves
//! the magnetic length. The spacing is found by halving until a set of
//! reference integrals stops moving.

use core::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use super::{kernel, kernel_value, LandauParams};
use crate::geometry::BoundingBox;
use crate::math::pairwise_sum;
use crate::{Error, Result, C64};

/// Default node budget for a single rule, `2^24`.
pub const DEFAULT_NODE_BUDGET: usize = 1 << 24;

const MAX_HALVINGS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadRule {
    pub origin: [f64; 2],
    pub spacing: f64,
    /// Node counts along `x` and `y`.
    pub nx: usize,
    pub ny: usize,
    /// Margin added around the support box.
    pub r_cut: f64,
}

impl QuadRule {
    /// Rule with nodes `origin + (i, j)·spacing` covering `bbox`.
    pub fn uniform(bbox: &BoundingBox, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("spacing {spacing}")));
        }
        let nx = libm::ceil(bbox.width() / spacing - 1e-9).max(0.0) as usize + 1;
        let ny = libm::ceil(bbox.height() / spacing - 1e-9).max(0.0) as usize + 1;
        Ok(Self {
            origin: bbox.min,
            spacing,
            nx,
            ny,
            r_cut: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let i = idx % self.nx;
        let j = idx / self.nx;
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }

    /// Trapezoid weight: `spacing²`, halved on each edge the node sits on.
    pub fn weight(&self, idx: usize) -> f64 {
        let i = idx % self.nx;
        let j = idx / self.nx;
        let edge = |k: usize, n: usize| {
            if n > 1 && (k == 0 || k == n - 1) {
                0.5
            } else {
                1.0
            }
        };
        self.spacing * self.spacing * edge(i, self.nx) * edge(j, self.ny)
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(self.len(), |i| self.weight(i))
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox {
            min: self.origin,
            max: [
                self.origin[0] + (self.nx - 1) as f64 * self.spacing,
                self.origin[1] + (self.ny - 1) as f64 * self.spacing,
            ],
        }
    }

    /// `Σ w_i f(x_i)` in a fixed pairwise order.
    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: Fn([f64; 2]) -> T,
    {
        pairwise_sum(self.len(), |i| f(self.point(i)) * self.weight(i))
    }
}

/// Pointwise envelope of the kernel integrands at distance `r`:
/// `e^{−Br²/4} (1 + Br²) E_{k−1}(Br²/2)²`, where `E_n(x) = Σ C(n,i) x^i/i!`
/// bounds `|L_n(x)|`.
fn tail_envelope(p: &LandauParams, r: f64) -> f64 {
    let b = p.b();
    let x = 0.5 * b * r * r;
    let n = (p.k() - 1) as usize;
    let mut e = 0.0;
    let mut binom = 1.0;
    let mut pow = 1.0;
    let mut fact = 1.0;
    for i in 0..=n {
        if i > 0 {
            binom *= (n - i + 1) as f64 / i as f64;
            pow *= x;
            fact *= i as f64;
        }
        e += binom * pow / fact;
    }
    libm::exp(-0.5 * x) * (1.0 + b * r * r) * e * e
}

/// Smallest radius (on a `0.01/√B` lattice) beyond which the integrand
/// envelope stays below `tail_tol`.
pub fn cutoff_radius(p: &LandauParams, tail_tol: f64) -> f64 {
    let step = 0.01 * p.magnetic_length();
    // the envelope is not monotone near the origin for k > 1; start past its
    // last maximum, which lies below x = 4k
    let mut r = libm::sqrt(8.0 * p.k() as f64 / p.b());
    while tail_envelope(p, r) >= tail_tol {
        r += step;
    }
    r
}

fn check_tail_tol(tail_tol: f64) -> Result<()> {
    if !(tail_tol > 0.0 && tail_tol <= 1e-3) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tail_tol {tail_tol} outside (0, 1e-3]"
        )));
    }
    Ok(())
}

/// Reference integrals at `c`: `∫|P(c,w)|²`, `∫|(D−BA)P(c,w)|²/B(2k−1)` and the
/// reproducing integral `∫P(c,w)P(w,c+δ)` with `|δ| = 4/√B`.
fn reference_integrals(
    p: &LandauParams,
    c: [f64; 2],
    r_cut: f64,
    spacing: f64,
) -> Result<[C64; 3]> {
    let d = 4.0 * p.magnetic_length() / core::f64::consts::SQRT_2;
    let c2 = [c[0] + d, c[1] + d];
    let bbox = BoundingBox { min: c, max: c2 }.inflate(r_cut);
    let rule = QuadRule::uniform(&bbox, spacing)?;
    let level = p.energy();
    let mass: f64 = rule.integrate(|w| kernel_value(p, c, w).norm_sqr());
    let energy: f64 = rule.integrate(|w| kernel(p, c, w).energy_density() / level);
    let repro: C64 = rule.integrate(|w| kernel_value(p, c, w) * kernel_value(p, w, c2));
    Ok([C64::new(mass, 0.0), C64::new(energy, 0.0), repro])
}

pub fn quad_grid(p: &LandauParams, support: &BoundingBox, tail_tol: f64) -> Result<QuadRule> {
    quad_grid_with_budget(p, support, tail_tol, DEFAULT_NODE_BUDGET)
}

/// Uniform rule on `support` inflated by [`cutoff_radius`], with spacing
/// halved from `0.5/√B` until the reference integrals change by less than
/// `tail_tol`.
pub fn quad_grid_with_budget(
    p: &LandauParams,
    support: &BoundingBox,
    tail_tol: f64,
    budget: usize,
) -> Result<QuadRule> {
    check_tail_tol(tail_tol)?;
    let r_cut = cutoff_radius(p, tail_tol);
    let bbox = support.inflate(r_cut);
    let c = support.center();
    let mut spacing = 0.5 * p.magnetic_length();
    let mut prev = reference_integrals(p, c, r_cut, spacing)?;
    for _ in 0..MAX_HALVINGS {
        let finer = 0.5 * spacing;
        let needed = QuadRule::uniform(&bbox, finer)?.len();
        if needed > budget {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        let cur = reference_integrals(p, c, r_cut, finer)?;
        let change = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        spacing = finer;
        prev = cur;
        if change < tail_tol {
            let mut rule = QuadRule::uniform(&bbox, spacing)?;
            rule.r_cut = r_cut;
            return Ok(rule);
        }
    }
    Err(Error::BudgetExceeded {
        needed: QuadRule::uniform(&bbox, spacing)?.len(),
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_for_unit_field() {
        let p = LandauParams::new(1.0, 1).unwrap();
        let r = cutoff_radius(&p, 1e-12);
        assert!(r >= 11.0, "r_cut = {r}");
        assert!(r < 12.5);
        // scales like 1/√B
        let p4 = LandauParams::new(4.0, 1).unwrap();
        assert!(cutoff_radius(&p4, 1e-12) >= 11.0 / 2.0);
    }

    #[test]
    fn cutoff_grows_with_level() {
        let tol = 1e-10;
        let r: alloc::vec::Vec<f64> = (1..=4)
            .map(|k| cutoff_radius(&LandauParams::new(1.0, k).unwrap(), tol))
            .collect();
        assert!(r.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn trapezoid_weights_sum_to_area() {
        let bb = BoundingBox {
            min: [0.0, 0.0],
            max: [2.0, 1.0],
        };
        let rule = QuadRule::uniform(&bb, 0.25).unwrap();
        assert_eq!((rule.nx, rule.ny), (9, 5));
        assert!((rule.total_weight() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = LandauParams::new(1.0, 1).unwrap();
        let bb = BoundingBox::point([0.0, 0.0]);
        assert!(quad_grid(&p, &bb, 0.0).is_err());
        assert!(quad_grid(&p, &bb, 1e-2).is_err());
    }

    #[test]
    fn budget_enforced() {
        let p = LandauParams::new(1.0, 1).unwrap();
        let bb = BoundingBox::point([0.0, 0.0]);
        let e = quad_grid_with_budget(&p, &bb, 1e-8, 100);
        assert!(matches!(e, Err(Error::BudgetExceeded { .. })));
    }
}
