//! Smooth cut-off functions between two nested box cylinders.

use crate::error::{invalid, Result};
use crate::field::{Field, SingularLocus};
use crate::geometry::{Cylinder, CylinderShape, SpaceTimePoint};

/// `6u^5 - 15u^4 + 10u^3`, clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (u * (6.0 * u - 15.0) + 10.0)
}

fn smoothstep_prime(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// Cut-off with value 1 on the inner cylinder and 0 outside the outer one,
/// a product of C^2 quintic transitions per axis and in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub inner: Cylinder,
    pub outer: Cylinder,
}

/// One factor: `(value, derivative)` for a coordinate with inner interval
/// `[a, b]` and outer interval `[lo, hi]`.
fn factor(x: f64, a: f64, b: f64, lo: f64, hi: f64) -> (f64, f64) {
    if x >= a && x <= b {
        (1.0, 0.0)
    } else if x <= lo || x >= hi {
        (0.0, 0.0)
    } else if x < a {
        let w = a - lo;
        let u = (x - lo) / w;
        (smoothstep(u), smoothstep_prime(u) / w)
    } else {
        let w = hi - b;
        let u = (hi - x) / w;
        (smoothstep(u), -smoothstep_prime(u) / w)
    }
}

pub fn make_bump(inner: &Cylinder, outer: &Cylinder) -> Result<Bump> {
    if inner.shape != CylinderShape::Box || outer.shape != CylinderShape::Box {
        return invalid("bumps are built on box cylinders");
    }
    if inner.dim() != outer.dim() {
        return invalid("bump cylinders differ in dimension");
    }
    let (ilo, ihi) = inner.bounds();
    let (olo, ohi) = outer.bounds();
    let strictly = (0..inner.dim()).all(|a| olo[a] < ilo[a] && ihi[a] < ohi[a])
        && outer.t_lo < inner.t_lo
        && inner.t_hi < outer.t_hi;
    if !strictly {
        return invalid("inner cylinder must lie strictly inside the outer one");
    }
    Ok(Bump {
        inner: inner.clone(),
        outer: outer.clone(),
    })
}

impl Bump {
    fn factors(&self, pt: &SpaceTimePoint) -> (Vec<(f64, f64)>, (f64, f64)) {
        let (ilo, ihi) = self.inner.bounds();
        let (olo, ohi) = self.outer.bounds();
        let space = (0..pt.dim())
            .map(|a| factor(pt.x()[a], ilo[a], ihi[a], olo[a], ohi[a]))
            .collect();
        let time = factor(pt.t, self.inner.t_lo, self.inner.t_hi, self.outer.t_lo, self.outer.t_hi);
        (space, time)
    }

    pub fn value(&self, pt: &SpaceTimePoint) -> f64 {
        let (s, t) = self.factors(pt);
        s.iter().map(|f| f.0).product::<f64>() * t.0
    }

    pub fn gradient(&self, pt: &SpaceTimePoint) -> Vec<f64> {
        let (s, t) = self.factors(pt);
        (0..s.len())
            .map(|a| {
                let others: f64 = s.iter().enumerate().filter(|(b, _)| *b != a).map(|(_, f)| f.0).product();
                s[a].1 * others * t.0
            })
            .collect()
    }

    pub fn time_derivative(&self, pt: &SpaceTimePoint) -> f64 {
        let (s, t) = self.factors(pt);
        s.iter().map(|f| f.0).product::<f64>() * t.1
    }

    /// `d(zeta^p)/dt = p zeta^{p-1} d(zeta)/dt`.
    pub fn time_derivative_pow(&self, pt: &SpaceTimePoint, p: f64) -> f64 {
        let z = self.value(pt);
        if z == 0.0 {
            return 0.0;
        }
        p * z.powf(p - 1.0) * self.time_derivative(pt)
    }
}

impl Field for Bump {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn try_eval(&self, pt: &SpaceTimePoint) -> Result<f64> {
        Ok(self.value(pt))
    }

    fn locus(&self) -> Option<SingularLocus> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_transition() {
        let inner = Cylinder::cube(&[0.0], 0.5, 0.25, 0.75).unwrap();
        let outer = Cylinder::cube(&[0.0], 1.0, 0.0, 1.0).unwrap();
        let b = make_bump(&inner, &outer).unwrap();
        assert_eq!(b.value(&SpaceTimePoint::new(&[0.1], 0.5)), 1.0);
        assert_eq!(b.value(&SpaceTimePoint::new(&[1.5], 0.5)), 0.0);
        let mid = SpaceTimePoint::new(&[0.75], 0.5);
        assert!((b.value(&mid) - 0.5).abs() < 1e-15);
        // Peak slope 30/16 over a shell of width 0.5.
        assert!((b.gradient(&mid)[0] + 3.75).abs() < 1e-12);
        assert!(make_bump(&outer, &inner).is_err());
    }
}
