//! Closed-form manufactured solution `ψ = ∇×(0, 0, g)`, `g = S(x)S(y)S(z)`,
//! `S(t) = sin³(πt)`.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::mesh::Point;

/// `[S, S', S'', S''', S'''']` at `t`.
fn s_derivatives(t: f64) -> [f64; 5] {
    let (s, c) = (PI * t).sin_cos();
    let s2 = s * s;
    [
        s2 * s,
        3.0 * PI * s2 * c,
        3.0 * PI * PI * (2.0 * s - 3.0 * s2 * s),
        3.0 * PI.powi(3) * c * (2.0 - 9.0 * s2),
        3.0 * PI.powi(4) * (27.0 * s2 * s - 20.0 * s),
    ]
}

/// Vector potential.
pub fn psi(x: &Point) -> Vector3<f64> {
    let (a, b, c) = (s_derivatives(x.x), s_derivatives(x.y), s_derivatives(x.z));
    Vector3::new(a[0] * b[1] * c[0], -a[1] * b[0] * c[0], 0.0)
}

/// `∇×ψ = (g_xz, g_yz, −g_xx − g_yy)`.
pub fn curl_psi(x: &Point) -> Vector3<f64> {
    let (a, b, c) = (s_derivatives(x.x), s_derivatives(x.y), s_derivatives(x.z));
    Vector3::new(
        a[1] * b[0] * c[1],
        a[0] * b[1] * c[1],
        -a[2] * b[0] * c[0] - a[0] * b[2] * c[0],
    )
}

/// `−Δ(∇×ψ)`.
pub fn minus_laplacian_curl_psi(x: &Point) -> Vector3<f64> {
    let (a, b, c) = (s_derivatives(x.x), s_derivatives(x.y), s_derivatives(x.z));
    let lap_xz = a[3] * b[0] * c[1] + a[1] * b[2] * c[1] + a[1] * b[0] * c[3];
    let lap_yz = a[2] * b[1] * c[1] + a[0] * b[3] * c[1] + a[0] * b[1] * c[3];
    let lap_z = a[4] * b[0] * c[0]
        + 2.0 * a[2] * b[2] * c[0]
        + a[2] * b[0] * c[2]
        + a[0] * b[4] * c[0]
        + a[0] * b[2] * c[2];
    Vector3::new(-lap_xz, -lap_yz, lap_z)
}

/// Manufactured problem with viscosity `nu`; the source is `f = −ν Δ(∇×ψ)`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub nu: f64,
}

impl Default for ManufacturedCase {
    fn default() -> Self {
        Self { nu: 1.0 }
    }
}

impl ManufacturedCase {
    pub fn psi(&self, x: &Point) -> Vector3<f64> {
        psi(x)
    }

    pub fn curl_psi(&self, x: &Point) -> Vector3<f64> {
        curl_psi(x)
    }

    pub fn source(&self, x: &Point) -> Vector3<f64> {
        self.nu * minus_laplacian_curl_psi(x)
    }
}
