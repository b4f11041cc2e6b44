use crate::grid::RadialField;

/// Running trapezoid accumulation of ‖ξ(t)‖⁴_{L⁶} dt.
#[derive(Debug, Clone, Default)]
pub struct StAccumulator {
    last: Option<(f64, f64)>,
    integral: f64,
}

impl StAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a sample with ‖ξ(t)‖_{L⁶} = l6.
    pub fn push(&mut self, t: f64, l6: f64) {
        let v = l6.powi(4);
        if let Some((t0, v0)) = self.last {
            self.integral += 0.5 * (t - t0) * (v + v0);
        }
        self.last = Some((t, v));
    }

    /// ∫‖ξ‖⁴_{L⁶} dt so far.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// The ST norm: fourth root of the integral.
    pub fn value(&self) -> f64 {
        self.integral.powf(0.25)
    }
}

/// ST norm of ξ sampled at the given times.
pub fn st_norm_accumulate(times: &[f64], xi: &[RadialField]) -> f64 {
    let mut acc = StAccumulator::new();
    for (t, x) in times.iter().zip(xi) {
        acc.push(*t, x.norm_lp(6.0));
    }
    acc.value()
}
