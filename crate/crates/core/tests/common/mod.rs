//! Independent oracles shared by the integration tests. Nothing here calls
//! into the planners' closed forms.

#![allow(dead_code)]

/// Composite Simpson rule on `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Position after double integration of `acc` from rest:
/// `x(T) = ∫₀ᵀ (T - s)·acc(s) ds`, and velocity `∫₀ᵀ acc`.
pub fn double_integrate<F: Fn(f64) -> f64>(acc: F, t_end: f64, n: usize) -> (f64, f64) {
    let x = simpson(|s| (t_end - s) * acc(s), 0.0, t_end, n);
    let v = simpson(&acc, 0.0, t_end, n);
    (x, v)
}

/// The prescribed swing law, written out directly for the oracles.
pub fn theta_law(t: f64, p: f64, duration: f64) -> f64 {
    let s = 2.0 / duration;
    let pi = std::f64::consts::PI;
    -2.0 * p * (pi * s * t).sin() + p * (2.0 * pi * s * t).sin()
}

/// Numerical second derivative by central differences.
pub fn second_derivative<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h)
}

/// Full nonlinear swing equation driven by a suspension-point acceleration:
/// `l·θ̈ = -ẍ·cos θ - g·sin θ`. `impulses` are velocity jumps of the
/// suspension point, applied as `Δθ̇ = -Δv·cos θ / l`.
pub struct SwingRun {
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
}

pub fn simulate_swing<F: Fn(f64) -> f64>(
    xdd: F,
    impulses: &[(f64, f64)],
    length: f64,
    gravity: f64,
    t_end: f64,
    dt: f64,
) -> SwingRun {
    let f = |t: f64, th: f64, w: f64| (w, -(xdd(t) * th.cos() + gravity * th.sin()) / length);
    let n = (t_end / dt).round() as usize;
    let (mut th, mut w) = (0.0f64, 0.0f64);
    let mut run = SwingRun {
        times: vec![0.0],
        theta: vec![0.0],
        theta_dot: vec![0.0],
    };
    let apply = |t0: f64, t1: f64, th: f64, w: &mut f64, first: bool| {
        for &(ti, dv) in impulses {
            let hit = if first {
                ti <= t0 + 1e-12 && ti >= t0 - 1e-12
            } else {
                ti > t0 + 1e-12 && ti <= t1 + 1e-12
            };
            if hit {
                *w -= dv * th.cos() / length;
            }
        }
    };
    apply(0.0, 0.0, th, &mut w, true);
    for k in 0..n {
        let t = k as f64 * dt;
        let (k1a, k1b) = f(t, th, w);
        let (k2a, k2b) = f(t + dt / 2.0, th + dt / 2.0 * k1a, w + dt / 2.0 * k1b);
        let (k3a, k3b) = f(t + dt / 2.0, th + dt / 2.0 * k2a, w + dt / 2.0 * k2b);
        let (k4a, k4b) = f(t + dt, th + dt * k3a, w + dt * k3b);
        th += dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        w += dt / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        apply(t, t + dt, th, &mut w, false);
        run.times.push(t + dt);
        run.theta.push(th);
        run.theta_dot.push(w);
    }
    run
}

impl SwingRun {
    pub fn max_abs_theta_after(&self, t0: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.theta)
            .filter(|(t, _)| **t >= t0 - 1e-12)
            .fold(0.0, |m, (_, th)| m.max(th.abs()))
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        let k = self
            .times
            .iter()
            .position(|x| (x - t).abs() < 1e-9)
            .expect("time on grid");
        (self.theta[k], self.theta_dot[k])
    }
}
