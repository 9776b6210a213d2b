//! Catalog of benchmark velocity fields, initial conditions, and exact
//! solutions.

use crate::{Result, SldgError};
use std::f64::consts::PI;

/// A prescribed velocity field. 1D problems use the `x` component only.
pub trait Flow: Sync {
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64);
}

/// The velocity fields used by the benchmark suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VelocityField {
    Zero,
    Constant { a: f64, b: f64 },
    /// Rigid body rotation `(-y, x)` about the origin.
    Rigid2d,
    /// `u_t + (sin(x) u)_x = 0`; the 1D variable-coefficient test.
    Sine1d,
    /// Swirling deformation flow on `[-pi, pi]^2`. With `cosine_time` the
    /// amplitude is `g(t) = pi cos(pi t / period)` and the flow retraces
    /// itself over each period; otherwise `g = 1`.
    Swirl { period: f64, cosine_time: bool },
    /// Reversing vortex on the unit square; every trajectory completes two
    /// full revolutions over one period, so the exact solution at `t = n T`
    /// is the initial condition.
    Blossey { period: f64 },
}

impl VelocityField {
    pub fn divergence_free(&self) -> bool {
        !matches!(self, VelocityField::Sine1d)
    }

    /// Period after which the flow map returns to the identity, when the
    /// field is time-reversing.
    pub fn reversal_period(&self) -> Option<f64> {
        match self {
            VelocityField::Swirl { period, cosine_time: true } => Some(*period),
            VelocityField::Blossey { period } => Some(*period),
            _ => None,
        }
    }
}

impl Flow for VelocityField {
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        match *self {
            VelocityField::Zero => (0.0, 0.0),
            VelocityField::Constant { a, b } => (a, b),
            VelocityField::Rigid2d => (-y, x),
            VelocityField::Sine1d => (x.sin(), 0.0),
            VelocityField::Swirl { period, cosine_time } => {
                let g = if cosine_time { PI * (PI * t / period).cos() } else { 1.0 };
                let a = -(x / 2.0).cos().powi(2) * y.sin() * g;
                let b = x.sin() * (y / 2.0).cos().powi(2) * g;
                (a, b)
            }
            VelocityField::Blossey { period } => {
                let (rx, ry) = (x - 0.5, y - 0.5);
                let r = rx.hypot(ry);
                // angular velocity a_theta / r; smooth through r = 0
                let s = (4.0 * r).powi(6);
                let chi = (1.0 - s) / (1.0 + s);
                let f = 4.0 * PI / period * (1.0 - (2.0 * PI * t / period).cos() * chi);
                (f * ry, -f * rx)
            }
        }
    }
}

/// One entry of the benchmark suite.
#[derive(Clone, Debug)]
pub struct BenchmarkProblem {
    pub name: &'static str,
    /// 1 or 2.
    pub dim: usize,
    /// `[x_lo, x_hi, y_lo, y_hi]`; the `y` extent is unused in 1D.
    pub domain: [f64; 4],
    pub field: VelocityField,
    pub default_t_final: f64,
    kind: Kind,
}

#[derive(Clone, Copy, Debug)]
enum Kind {
    Linear1d,
    VarCoef1d,
    Linear2d,
    Rigid2d,
    Rigid2dShapes,
    SwirlCos,
    SwirlG1,
    Blossey,
}

pub const PROBLEM_NAMES: [&str; 8] = [
    "linear1d",
    "varcoef1d",
    "linear2d",
    "rigid2d",
    "rigid2d_shapes",
    "swirl_cos",
    "swirl_g1",
    "blossey",
];

/// Looks up a fully populated benchmark problem by name.
pub fn catalog(name: &str) -> Result<BenchmarkProblem> {
    let two_pi = 2.0 * PI;
    let p = match name {
        "linear1d" => BenchmarkProblem {
            name: "linear1d",
            dim: 1,
            domain: [0.0, two_pi, 0.0, 0.0],
            field: VelocityField::Constant { a: 1.0, b: 0.0 },
            default_t_final: 20.0,
            kind: Kind::Linear1d,
        },
        "varcoef1d" => BenchmarkProblem {
            name: "varcoef1d",
            dim: 1,
            domain: [0.0, two_pi, 0.0, 0.0],
            field: VelocityField::Sine1d,
            default_t_final: 1.0,
            kind: Kind::VarCoef1d,
        },
        "linear2d" => BenchmarkProblem {
            name: "linear2d",
            dim: 2,
            domain: [0.0, two_pi, 0.0, two_pi],
            field: VelocityField::Constant { a: 1.0, b: 1.0 },
            default_t_final: PI,
            kind: Kind::Linear2d,
        },
        "rigid2d" => BenchmarkProblem {
            name: "rigid2d",
            dim: 2,
            domain: [-two_pi, two_pi, -two_pi, two_pi],
            field: VelocityField::Rigid2d,
            default_t_final: two_pi,
            kind: Kind::Rigid2d,
        },
        "rigid2d_shapes" => BenchmarkProblem {
            name: "rigid2d_shapes",
            dim: 2,
            domain: [-two_pi, two_pi, -two_pi, two_pi],
            field: VelocityField::Rigid2d,
            default_t_final: two_pi,
            kind: Kind::Rigid2dShapes,
        },
        "swirl_cos" => BenchmarkProblem {
            name: "swirl_cos",
            dim: 2,
            domain: [-PI, PI, -PI, PI],
            field: VelocityField::Swirl { period: 1.5, cosine_time: true },
            default_t_final: 1.5,
            kind: Kind::SwirlCos,
        },
        "swirl_g1" => BenchmarkProblem {
            name: "swirl_g1",
            dim: 2,
            domain: [-PI, PI, -PI, PI],
            field: VelocityField::Swirl { period: 1.5, cosine_time: false },
            default_t_final: 5.0 * PI,
            kind: Kind::SwirlG1,
        },
        "blossey" => BenchmarkProblem {
            name: "blossey",
            dim: 2,
            domain: [0.0, 1.0, 0.0, 1.0],
            field: VelocityField::Blossey { period: 2.0 },
            default_t_final: 2.0,
            kind: Kind::Blossey,
        },
        other => return Err(SldgError::UnknownProblem(other.to_string())),
    };
    Ok(p)
}

impl BenchmarkProblem {
    pub fn initial(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            Kind::Linear1d => x.sin(),
            Kind::VarCoef1d => 1.0,
            Kind::Linear2d => (x + y).sin(),
            Kind::Rigid2d => (-x * x - y * y).exp(),
            Kind::Rigid2dShapes => leveque_shapes(x, y),
            Kind::SwirlCos => cosine_bell(x, y),
            Kind::SwirlG1 => {
                if (x - PI).hypot(y - PI) <= 8.0 * PI / 5.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Blossey => cosine_squared_bell(x, y),
        }
    }

    /// Exact solution at time `t`, when one is known there. The swirl and
    /// vortex flows retrace themselves, so their exact solution is only
    /// available at integer multiples of the reversal period.
    pub fn exact(&self, x: f64, y: f64, t: f64) -> Option<f64> {
        match self.kind {
            Kind::Linear1d => Some((x - t).sin()),
            Kind::VarCoef1d => Some(varcoef1d_exact(x, t)),
            Kind::Linear2d => Some((x + y - 2.0 * t).sin()),
            Kind::Rigid2d | Kind::Rigid2dShapes => {
                // material point came from the backward-rotated position
                let (c, s) = (t.cos(), t.sin());
                Some(self.initial(x * c + y * s, -x * s + y * c))
            }
            Kind::SwirlCos | Kind::Blossey => {
                let period = self.field.reversal_period().expect("reversing flow");
                let cycles = t / period;
                if (cycles - cycles.round()).abs() < 1e-9 {
                    Some(self.initial(x, y))
                } else {
                    None
                }
            }
            Kind::SwirlG1 => None,
        }
    }

    pub fn has_exact_at(&self, t: f64) -> bool {
        self.exact(self.domain[0], self.domain[2], t).is_some()
    }
}

/// Exact solution of `u_t + (sin(x) u)_x = 0` with `u(x, 0) = 1`. The
/// textbook quotient `sin(2 atan(e^{-t} tan(x/2))) / sin(x)` is `0/0` at
/// `x = 0, pi, 2pi`; multiplying through by `cos^2(x/2)` gives this
/// everywhere-regular form.
fn varcoef1d_exact(x: f64, t: f64) -> f64 {
    let e = (-t).exp();
    let c = (x / 2.0).cos();
    let s = (x / 2.0).sin();
    e / (c * c + e * e * s * s)
}

/// C^5 cosine bell of the swirling deformation test: amplitude and radius
/// `0.3 pi`, centered at `(0.3 pi, 0)`.
fn cosine_bell(x: f64, y: f64) -> f64 {
    let r0 = 0.3 * PI;
    let r = (x - 0.3 * PI).hypot(y);
    if r < r0 {
        r0 * (r * PI / (2.0 * r0)).cos().powi(6)
    } else {
        0.0
    }
}

/// Cosine-squared bell of the reversing-vortex test, support radius 0.2
/// around `(0.3, 0.5)`.
fn cosine_squared_bell(x: f64, y: f64) -> f64 {
    let r = 5.0 * (x - 0.3).hypot(y - 0.5);
    if r <= 1.0 {
        let c = 0.5 * (1.0 + (PI * r).cos());
        c * c
    } else {
        0.0
    }
}

/// Slotted disk, cone, and smooth hump scaled to `[-2pi, 2pi]^2`: radius
/// `0.3 pi`, centers on a circle of radius `pi` at angles 90/270/180
/// degrees, slot width one third of the disk diameter.
fn leveque_shapes(x: f64, y: f64) -> f64 {
    let r0 = 0.3 * PI;
    let slot_half_width = r0 / 3.0;

    let d_disk = x.hypot(y - PI);
    if d_disk <= r0 {
        let in_slot = x.abs() < slot_half_width && y < PI + 2.0 * r0 / 3.0;
        return if in_slot { 0.0 } else { 1.0 };
    }
    let d_cone = x.hypot(y + PI);
    if d_cone <= r0 {
        return 1.0 - d_cone / r0;
    }
    let d_hump = (x + PI).hypot(y);
    if d_hump <= r0 {
        return 0.25 * (1.0 + (PI * d_hump / r0).cos());
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_is_a_lookup_error() {
        assert!(matches!(catalog("nope"), Err(SldgError::UnknownProblem(_))));
    }

    #[test]
    fn linear1d_exact_at_origin_time() {
        let p = catalog("linear1d").unwrap();
        assert_eq!(p.exact(PI, 0.0, 0.0), Some(PI.sin()));
        assert!(p.exact(PI, 0.0, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn varcoef1d_initial_condition_is_one_everywhere() {
        let p = catalog("varcoef1d").unwrap();
        for i in 0..=64 {
            let x = 2.0 * PI * i as f64 / 64.0;
            assert!((p.exact(x, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn varcoef1d_exact_limits() {
        // compression point x = pi grows like e^t, expansion points decay
        let p = catalog("varcoef1d").unwrap();
        let t = 0.7;
        assert!((p.exact(PI, 0.0, t).unwrap() - t.exp()).abs() < 1e-12);
        assert!((p.exact(0.0, 0.0, t).unwrap() - (-t).exp()).abs() < 1e-12);
    }

    #[test]
    fn rigid_field_rotates_counterclockwise() {
        let p = catalog("rigid2d").unwrap();
        assert_eq!(p.field.velocity(1.0, 0.0, 0.0), (0.0, 1.0));
    }

    #[test]
    fn swirl_field_vanishes_at_half_period() {
        let p = catalog("swirl_cos").unwrap();
        let (a, b) = p.field.velocity(0.3, -1.2, 0.75);
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
    }

    #[test]
    fn blossey_speed_at_quarter_radius() {
        // at r = 0.25 the filter (1-(4r)^6)/(1+(4r)^6) vanishes, so the
        // tangential speed is 4 pi r / T = pi / 2 regardless of time
        let f = VelocityField::Blossey { period: 2.0 };
        let (a, b) = f.velocity(0.75, 0.5, 0.0);
        let speed = a.hypot(b);
        assert!((speed - PI / 2.0).abs() < 1e-12, "speed = {speed}");
        // and the field vanishes at the vortex center
        let (a0, b0) = f.velocity(0.5, 0.5, 0.33);
        assert_eq!((a0, b0), (0.0, 0.0));
    }

    #[test]
    fn divergence_free_fields_check_out_numerically() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for name in ["rigid2d", "swirl_cos", "swirl_g1", "blossey"] {
            let p = catalog(name).unwrap();
            assert!(p.field.divergence_free());
            for _ in 0..100 {
                let x = rng.gen_range(p.domain[0]..p.domain[1]);
                let y = rng.gen_range(p.domain[2]..p.domain[3]);
                let t = rng.gen_range(0.0..1.0);
                let dadx =
                    (p.field.velocity(x + h, y, t).0 - p.field.velocity(x - h, y, t).0) / (2.0 * h);
                let dbdy =
                    (p.field.velocity(x, y + h, t).1 - p.field.velocity(x, y - h, t).1) / (2.0 * h);
                assert!(
                    (dadx + dbdy).abs() <= 1e-6,
                    "{name} at ({x:.3},{y:.3},{t:.3}): div = {}",
                    dadx + dbdy
                );
            }
        }
    }

    #[test]
    fn swirl_cos_is_antisymmetric_about_half_period() {
        let p = catalog("swirl_cos").unwrap();
        let period = p.field.reversal_period().unwrap();
        for &(x, y, t) in &[(0.4, -0.9, 0.2), (-2.0, 1.1, 0.6), (1.5, 2.8, 1.0)] {
            let (a1, b1) = p.field.velocity(x, y, t);
            let (a2, b2) = p.field.velocity(x, y, period - t);
            assert!((a1 + a2).abs() < 1e-12 && (b1 + b2).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_at_time_zero_matches_initial_data() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for name in PROBLEM_NAMES {
            let p = catalog(name).unwrap();
            if !p.has_exact_at(0.0) {
                continue;
            }
            for _ in 0..1000 {
                let x = rng.gen_range(p.domain[0]..p.domain[1]);
                let y = if p.dim == 2 {
                    rng.gen_range(p.domain[2]..p.domain[3])
                } else {
                    0.0
                };
                let u0 = p.initial(x, y);
                let ex = p.exact(x, y, 0.0).unwrap();
                assert!((u0 - ex).abs() < 1e-12, "{name} at ({x}, {y})");
            }
        }
    }
}
