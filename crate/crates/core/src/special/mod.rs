//! Laguerre polynomials and the Landau level projector kernel in the
//! symmetric gauge `A(x, y) = ½(−y, x)`.
//!
//! The kernel of the projection onto the level `B(2k−1)` is
//!
//! ```text
//! P(z, z') = B/(2π) · exp(−i B z×z'/2 − B|z−z'|²/4) · L_{k−1}(B|z−z'|²/2)
//! ```
//!
//! with `L_n(0) = 1`. The Gaussian and the polynomial are always evaluated
//! together as `e^{−x/2} L_n(x)` so that large separations underflow to zero
//! instead of producing `0 · ∞`.

pub mod quad;

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

pub use quad::{cutoff_radius, quad_grid, quad_grid_with_budget, QuadRule, DEFAULT_NODE_BUDGET};

/// Largest supported Laguerre degree.
pub const MAX_LAGUERRE_INDEX: usize = 64;

/// Field strength `B > 0` and Landau index `k ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandauParams {
    b: f64,
    k: u32,
}

impl LandauParams {
    pub fn new(b: f64, k: u32) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("field strength B = {b}")));
        }
        if k == 0 {
            return Err(Error::InvalidParameter(
                "Landau index k must be >= 1".into(),
            ));
        }
        if (k - 1) as usize > MAX_LAGUERRE_INDEX {
            return Err(Error::IndexOutOfRange((k - 1) as usize));
        }
        Ok(Self { b, k })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// The Landau level `B(2k−1)`.
    pub fn energy(&self) -> f64 {
        self.b * (2 * self.k - 1) as f64
    }

    /// `B/2π`, the diagonal value of the kernel.
    pub fn diagonal(&self) -> f64 {
        self.b / core::f64::consts::TAU
    }

    /// Magnetic length `1/√B`.
    pub fn magnetic_length(&self) -> f64 {
        1.0 / libm::sqrt(self.b)
    }
}

/// `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> Result<f64> {
    if n > MAX_LAGUERRE_INDEX {
        return Err(Error::IndexOutOfRange(n));
    }
    Ok(laguerre_scaled(n, x, 1.0).0)
}

/// `e^{−x/2} L_n(x)`.
pub fn laguerre_envelope(n: usize, x: f64) -> Result<f64> {
    if n > MAX_LAGUERRE_INDEX {
        return Err(Error::IndexOutOfRange(n));
    }
    Ok(laguerre_scaled(n, x, libm::exp(-0.5 * x)).0)
}

/// Runs the recurrence on `s·L_i(x)` and returns `(s·L_n(x), s·L_n'(x))`,
/// using `L_n' = −Σ_{i<n} L_i`.
fn laguerre_scaled(n: usize, x: f64, s: f64) -> (f64, f64) {
    let mut prev = s;
    if n == 0 {
        return (prev, 0.0);
    }
    let mut cur = (1.0 - x) * s;
    let mut deriv = -prev;
    for i in 1..n {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0 - x) * cur - fi * prev) / (fi + 1.0);
        deriv -= cur;
        prev = cur;
        cur = next;
    }
    (cur, deriv)
}

/// Symmetric gauge `A(x, y) = ½(−y, x)`.
pub fn gauge(z: [f64; 2]) -> [f64; 2] {
    [-0.5 * z[1], 0.5 * z[0]]
}

/// Planar cross product `z × w = z_x w_y − z_y w_x`.
pub fn cross(z: [f64; 2], w: [f64; 2]) -> f64 {
    z[0] * w[1] - z[1] * w[0]
}

/// Kernel value together with `(D_z − B A(z)) P(z, z')`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    pub magnetic_gradient: [C64; 2],
}

impl KernelValue {
    /// `|(D − BA)P|²`
    pub fn energy_density(&self) -> f64 {
        self.magnetic_gradient[0].norm_sqr() + self.magnetic_gradient[1].norm_sqr()
    }
}

#[inline]
fn phase_and_envelope(p: &LandauParams, z: [f64; 2], zp: [f64; 2]) -> (C64, [f64; 2], f64, f64) {
    let b = p.b;
    let w = [z[0] - zp[0], z[1] - zp[1]];
    let x = 0.5 * b * (w[0] * w[0] + w[1] * w[1]);
    let (f, fp) = laguerre_scaled((p.k - 1) as usize, x, libm::exp(-0.5 * x));
    let (s, c) = libm::sincos(-0.5 * b * cross(z, zp));
    (C64::new(c, s) * p.diagonal(), w, f, fp)
}

/// `P_k^B(z, z')` only.
#[inline]
pub fn kernel_value(p: &LandauParams, z: [f64; 2], zp: [f64; 2]) -> C64 {
    let (ph, _, f, _) = phase_and_envelope(p, z, zp);
    ph * f
}

/// `P_k^B(z, z')` and its covariant gradient in `z`.
///
/// Writing `w = z − z'`, `x = B|w|²/2`, `f = e^{−x/2}L_{k−1}(x)` and
/// `f' = e^{−x/2}L'_{k−1}(x)`, the product rule gives
///
/// ```text
/// (D − BA)P = B/(2π) e^{iφ} (B/2) [ (w_y, −w_x) f + i w (f − 2f') ]
/// ```
#[inline]
pub fn kernel(p: &LandauParams, z: [f64; 2], zp: [f64; 2]) -> KernelValue {
    let (ph, w, f, fp) = phase_and_envelope(p, z, zp);
    let g = 0.5 * p.b;
    let q = f - 2.0 * fp;
    let gx = ph * C64::new(g * w[1] * f, g * w[0] * q);
    let gy = ph * C64::new(-g * w[0] * f, g * w[1] * q);
    KernelValue {
        value: ph * f,
        magnetic_gradient: [gx, gy],
    }
}

/// Product of per-block kernels for a multi-block field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProduct {
    pub value: C64,
    /// `Σ B_j (2k_j − 1)`.
    pub total_energy: f64,
}

pub fn kernel_product(
    params: &[LandauParams],
    z: &[[f64; 2]],
    zp: &[[f64; 2]],
) -> Result<KernelProduct> {
    if params.len() != z.len() {
        return Err(Error::LengthMismatch {
            left: params.len(),
            right: z.len(),
        });
    }
    if params.len() != zp.len() {
        return Err(Error::LengthMismatch {
            left: params.len(),
            right: zp.len(),
        });
    }
    if params.is_empty() {
        return Err(Error::InvalidParameter("empty parameter list".into()));
    }
    let mut value = C64::new(1.0, 0.0);
    let mut total_energy = 0.0;
    for ((p, &a), &b) in params.iter().zip(z).zip(zp) {
        value *= kernel_value(p, a, b);
        total_energy += p.energy();
    }
    Ok(KernelProduct {
        value,
        total_energy,
    })
}
