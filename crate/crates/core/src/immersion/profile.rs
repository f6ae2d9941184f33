//! Planar profile curve for the bent-flap family.
//!
//! The flap bends along a unit-speed plane curve whose signed curvature
//! ramps smoothly from zero: `kappa(s) = kappa_max * w(s / ramp)` where
//! `w(u) = u^2 (3 - 2u)` clamped to `[0, 1]`. The tangent angle
//! `psi(s) = integral of kappa` is closed-form (a quartic below the ramp end,
//! linear above); the curve offsets `(xi, zeta) = integral of (cos psi, sin psi)`
//! need quadrature on the quartic-phase part and are closed-form on the
//! linear-phase part.

use std::sync::OnceLock;

/// Smooth curvature ramp, clamped to `kappa_max` beyond `ramp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureProfile {
    pub kappa_max: f64,
    pub ramp: f64,
}

impl CurvatureProfile {
    pub fn new(kappa_max: f64, ramp: f64) -> Self {
        debug_assert!(kappa_max >= 0.0 && ramp > 0.0);
        Self { kappa_max, ramp }
    }

    /// kappa(s)
    pub fn kappa(&self, s: f64) -> f64 {
        let u = (s / self.ramp).clamp(0.0, 1.0);
        self.kappa_max * u * u * (3.0 - 2.0 * u)
    }

    /// d kappa / d s
    pub fn kappa_prime(&self, s: f64) -> f64 {
        if s <= 0.0 || s >= self.ramp {
            return 0.0;
        }
        let u = s / self.ramp;
        self.kappa_max * 6.0 * u * (1.0 - u) / self.ramp
    }

    /// Tangent angle psi(s) = integral_0^s kappa.
    pub fn psi(&self, s: f64) -> f64 {
        if s <= self.ramp {
            let u = s / self.ramp;
            self.kappa_max * self.ramp * (u.powi(3) - 0.5 * u.powi(4))
        } else {
            0.5 * self.kappa_max * self.ramp + self.kappa_max * (s - self.ramp)
        }
    }

    /// Curve offsets (xi, zeta) = integral_0^s (cos psi, sin psi).
    pub fn offsets(&self, s: f64) -> (f64, f64) {
        debug_assert!(s >= 0.0);
        if self.kappa_max == 0.0 {
            return (s, 0.0);
        }
        let s_ramp = s.min(self.ramp);
        let (mut xi, mut zeta) = gauss_legendre_cossin(|t| self.psi(t), s_ramp);
        if s > self.ramp {
            // Linear phase: psi = psi_r + kappa_max * (t - ramp), integrable
            // in closed form.
            let psi_r = self.psi(self.ramp);
            let k = self.kappa_max;
            let psi_end = psi_r + k * (s - self.ramp);
            xi += (psi_end.sin() - psi_r.sin()) / k;
            zeta += (psi_r.cos() - psi_end.cos()) / k;
        }
        (xi, zeta)
    }
}

const GL_POINTS: usize = 32;

fn gl_nodes() -> &'static [(f64, f64); GL_POINTS] {
    static NODES: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    NODES.get_or_init(|| {
        let mut out = [(0.0, 0.0); GL_POINTS];
        let n = GL_POINTS;
        for i in 0..n {
            // Newton iteration on P_n from the Chebyshev initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out[i] = (x, w);
        }
        out
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// integral_0^s (cos(phase(t)), sin(phase(t))) dt by 32-point Gauss-Legendre.
fn gauss_legendre_cossin(phase: impl Fn(f64) -> f64, s: f64) -> (f64, f64) {
    if s == 0.0 {
        return (0.0, 0.0);
    }
    let half = 0.5 * s;
    let mut c = 0.0;
    let mut si = 0.0;
    for &(x, w) in gl_nodes().iter() {
        let t = half * (x + 1.0);
        let p = phase(t);
        c += w * p.cos();
        si += w * p.sin();
    }
    (half * c, half * si)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_is_straight() {
        let p = CurvatureProfile::new(0.0, 0.5);
        let (xi, zeta) = p.offsets(0.37);
        assert_eq!(xi, 0.37);
        assert_eq!(zeta, 0.0);
    }

    #[test]
    fn constant_curvature_limit_matches_circle() {
        // A steep ramp approximates an arc of curvature kappa_max; compare
        // against the closed-form circular arc well past the ramp.
        let k = 2.0;
        let p = CurvatureProfile::new(k, 1e-6);
        let s = 0.8;
        let (xi, zeta) = p.offsets(s);
        // psi ~ k*s - k*ramp/2; offsets of a circle: (sin(ks)/k, (1-cos(ks))/k)
        assert!((xi - (k * s).sin() / k).abs() < 1e-5);
        assert!((zeta - (1.0 - (k * s).cos()) / k).abs() < 1e-5);
    }

    #[test]
    fn quadrature_matches_simpson() {
        let p = CurvatureProfile::new(4.0, 0.5);
        for &s in &[0.1, 0.3, 0.499, 0.5] {
            let (xi, zeta) = p.offsets(s);
            let n = 20_000;
            let h = s / n as f64;
            let (mut rc, mut rs) = (0.0, 0.0);
            for i in 0..=n {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let psi = p.psi(i as f64 * h);
                rc += w * psi.cos();
                rs += w * psi.sin();
            }
            rc *= h / 3.0;
            rs *= h / 3.0;
            assert!((xi - rc).abs() < 1e-12, "xi mismatch at s={s}");
            assert!((zeta - rs).abs() < 1e-12, "zeta mismatch at s={s}");
        }
    }

    #[test]
    fn psi_continuous_at_ramp_end() {
        let p = CurvatureProfile::new(4.0, 0.5);
        let below = p.psi(0.5 - 1e-12);
        let above = p.psi(0.5 + 1e-12);
        assert!((below - above).abs() < 1e-10);
        assert!((p.psi(0.5) - 0.5 * 4.0 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn arc_length_preserved() {
        // |(xi', zeta')| = 1, so chord length <= s with equality iff straight.
        let p = CurvatureProfile::new(4.0, 0.5);
        let (xi, zeta) = p.offsets(0.4);
        assert!((xi * xi + zeta * zeta).sqrt() <= 0.4 + 1e-12);
    }
}
