//! Physical realization of a scissor lever as two straight rigid arms joined
//! at an elbow hinge.
//!
//! The lever couples an attached span `s` (the distance between its two
//! anchored ends `M` and `D`) to a free gap `g` (the distance between the two
//! free ends). With the elbow at `P`, `|MP| = p1`, `|DP| = p2` and the free
//! ends placed on the arm rays at fractions `u1`, `u2`, the gap obeys
//! `g^2 = alpha + beta s^2` exactly, so hitting two prescribed
//! configurations `(s0, g0)` and `(s1, g1)` fixes `alpha` and `beta` and
//! leaves the arm proportions free. A small deterministic grid search picks
//! compact arms with a safely bent elbow.

use super::{ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElbowLever {
    pub s0: f64,
    pub g0: f64,
    pub s1: f64,
    pub g1: f64,
    /// Arm lengths from the anchored ends to the elbow.
    pub p1: f64,
    pub p2: f64,
    /// Free-end positions as fractions along the M->P and D->P rays.
    pub u1: f64,
    pub u2: f64,
}

impl ElbowLever {
    /// Design a lever that maps span `s0` to gap `g0` and span `s1` to gap
    /// `g1` exactly.
    pub fn design(s0: f64, g0: f64, s1: f64, g1: f64) -> Result<ElbowLever> {
        if [s0, g0, s1, g1].iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(ModelError::InvalidSpec(format!(
                "lever configurations must be positive: ({s0},{g0}) ({s1},{g1})"
            )));
        }
        if (s1 - s0).abs() < 1e-9 {
            return Err(ModelError::InvalidSpec("lever spans must differ".into()));
        }
        let beta = (g1 * g1 - g0 * g0) / (s1 * s1 - s0 * s0);
        let alpha = g0 * g0 - beta * s0 * s0;
        let smax = s0.max(s1);
        let smin = s0.min(s1);

        const B_GRID: [f64; 14] =
            [0.4, 0.55, 0.7, 0.85, 1.15, 1.3, 1.5, -0.4, -0.55, -0.7, -0.85, -1.15, -1.3, -1.5];
        const P_GRID: [f64; 8] = [0.55, 0.7, 0.85, 1.0, 1.15, 1.3, 1.45, 1.6];

        let mut best: Option<(f64, ElbowLever)> = None;
        for b in B_GRID {
            let a = b - beta / b;
            if a.abs() < 1e-9 {
                continue;
            }
            for pm in P_GRID {
                let p1 = pm * smax;
                let kappa = (a * a * p1 * p1 - alpha) / (2.0 * a * b);
                let p2sq = p1 * p1 - 2.0 * kappa;
                if p2sq <= 0.04 {
                    continue;
                }
                let p2 = p2sq.sqrt();
                // The elbow must stay clearly bent over the whole swing.
                let mut min_px = f64::INFINITY;
                let mut ok = true;
                for i in 0..=32 {
                    let s = smin + (smax - smin) * i as f64 / 32.0;
                    let py = s / 2.0 + kappa / s;
                    let px_sq = p1 * p1 - py * py;
                    if px_sq < 0.25 * 0.25 {
                        ok = false;
                        break;
                    }
                    min_px = min_px.min(px_sq.sqrt());
                }
                if !ok {
                    continue;
                }
                let u2 = 1.0 - b;
                let u1 = a + u2;
                if u1.abs() > 3.0 || u2.abs() > 3.0 {
                    continue;
                }
                let arm1 = (u1 * p1).max(p1).max(0.0) - (u1 * p1).min(0.0);
                let arm2 = (u2 * p2).max(p2).max(0.0) - (u2 * p2).min(0.0);
                let score = arm1 + arm2 + 0.5 * (p1 + p2) - min_px;
                let lever = ElbowLever { s0, g0, s1, g1, p1, p2, u1, u2 };
                if best.map_or(true, |(bs, _)| score < bs) {
                    best = Some((score, lever));
                }
            }
        }
        best.map(|(_, l)| l).ok_or_else(|| {
            ModelError::GeometryInfeasible(format!(
                "no elbow lever realizes ({s0},{g0}) <-> ({s1},{g1})"
            ))
        })
    }

    fn kappa(&self) -> f64 {
        (self.p1 * self.p1 - self.p2 * self.p2) / 2.0
    }

    /// Elbow position in the lever plane for span `s`, with `M` at the
    /// origin and `D` at `(0, s)`. The elbow bulges toward +x.
    pub fn elbow_2d(&self, s: f64) -> (f64, f64) {
        let py = s / 2.0 + self.kappa() / s;
        let px_sq = self.p1 * self.p1 - py * py;
        debug_assert!(px_sq > 0.0, "elbow degenerate at span {s}");
        (px_sq.max(0.0).sqrt(), py)
    }

    /// Free-end positions `(O1, O2)` in the lever plane for span `s`.
    pub fn free_ends_2d(&self, s: f64) -> ((f64, f64), (f64, f64)) {
        let (px, py) = self.elbow_2d(s);
        let o1 = (self.u1 * px, self.u1 * py);
        let o2 = (self.u2 * px, s + self.u2 * (py - s));
        (o1, o2)
    }

    /// Free gap at span `s`.
    pub fn gap_at(&self, s: f64) -> f64 {
        let (o1, o2) = self.free_ends_2d(s);
        ((o1.0 - o2.0).powi(2) + (o1.1 - o2.1).powi(2)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn designs_hit_both_configurations_exactly() {
        // The lever specs used by every default gate plus the robot adaptor.
        let cases = [
            (1.0, 1.0, 1.5, 0.5),
            (1.0, 0.5, 1.5, 1.0),
            (1.0, 1.0, 1.5, 1.5),
            (1.0, 1.5, 1.5, 1.0),
            (2.0, 1.0, 2.5573, 0.5),
            (2.0, 0.5, 2.5573, 1.0),
            (2.0, 1.0, 2.5573, 1.5),
            (2.0, 1.5, 2.5573, 1.0),
            (1.0, 2.0, 1.5, 3.0),
        ];
        for (s0, g0, s1, g1) in cases {
            let lv = ElbowLever::design(s0, g0, s1, g1).unwrap();
            assert!((lv.gap_at(s0) - g0).abs() < 1e-9, "{lv:?} at {s0}");
            assert!((lv.gap_at(s1) - g1).abs() < 1e-9, "{lv:?} at {s1}");
        }
    }

    #[test]
    fn gap_is_monotone_over_the_swing() {
        let lv = ElbowLever::design(2.0, 1.5, 2.5573, 1.0).unwrap();
        let mut prev = lv.gap_at(2.0);
        for i in 1..=40 {
            let s = 2.0 + (2.5573 - 2.0) * i as f64 / 40.0;
            let g = lv.gap_at(s);
            assert!(g <= prev + 1e-12, "gap must fall monotonically for an inverting lever");
            prev = g;
        }
    }

    #[test]
    fn design_is_deterministic() {
        let a = ElbowLever::design(1.0, 1.0, 1.5, 0.5).unwrap();
        let b = ElbowLever::design(1.0, 1.0, 1.5, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(ElbowLever::design(1.0, 1.0, 1.0, 0.5).is_err());
        assert!(ElbowLever::design(-1.0, 1.0, 1.5, 0.5).is_err());
    }
}
