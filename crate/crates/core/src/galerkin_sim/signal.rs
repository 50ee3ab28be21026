use serde::{Deserialize, Serialize};

use crate::error::{CertError, Result};

/// Unit-amplitude waveform, `|w(t)| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Zero,
    Constant,
    Sin {
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `1 - exp(-rate t)`
    ExpRise { rate: f64 },
    /// `tanh(k sin(frequency t)) / tanh(k)`
    SmoothSquare { frequency: f64, sharpness: f64 },
}

impl Waveform {
    /// `(w(t), w'(t))`
    fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Waveform::Zero => (0.0, 0.0),
            Waveform::Constant => (1.0, 0.0),
            Waveform::Sin { frequency, phase } => {
                let arg = frequency * t + phase;
                (arg.sin(), frequency * arg.cos())
            }
            Waveform::ExpRise { rate } => {
                let e = (-rate * t).exp();
                (-(-rate * t).exp_m1(), rate * e)
            }
            Waveform::SmoothSquare { frequency, sharpness } => {
                let s = (frequency * t).sin();
                let th = (sharpness * s).tanh();
                let norm = sharpness.tanh();
                (th / norm, sharpness * (1.0 - th * th) * frequency * (frequency * t).cos() / norm)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Waveform::Zero | Waveform::Constant => true,
            Waveform::Sin { frequency, phase } => frequency.is_finite() && phase.is_finite(),
            Waveform::ExpRise { rate } => rate.is_finite() && rate >= 0.0,
            Waveform::SmoothSquare { frequency, sharpness } => frequency.is_finite() && sharpness > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CertError::Config(format!("invalid waveform parameters: {self:?}")))
        }
    }
}

/// `d(t) = amplitude * r(t) * w(t)` with the C^1 smoothstep ramp `r` over
/// `[0, ramp]` (`r = 1` when `ramp = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub waveform: Waveform,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub ramp: f64,
}

impl Signal {
    pub fn zero() -> Self {
        Self { waveform: Waveform::Zero, amplitude: 0.0, ramp: 0.0 }
    }

    pub fn new(waveform: Waveform, amplitude: f64, ramp: f64) -> Self {
        Self { waveform, amplitude, ramp }
    }

    fn envelope(&self, t: f64) -> (f64, f64) {
        if self.ramp <= 0.0 || t >= self.ramp {
            return (1.0, 0.0);
        }
        if t <= 0.0 {
            return (0.0, 0.0);
        }
        let s = t / self.ramp;
        (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s) / self.ramp)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval(t).1
    }

    /// `(d(t), d'(t))`
    pub fn eval(&self, t: f64) -> (f64, f64) {
        if self.amplitude == 0.0 {
            return (0.0, 0.0);
        }
        let (r, dr) = self.envelope(t);
        let (w, dw) = self.waveform.eval(t);
        (self.amplitude * r * w, self.amplitude * (dr * w + r * dw))
    }

    pub fn bound(&self) -> f64 {
        self.amplitude.abs()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.ramp.is_finite() && self.ramp >= 0.0) {
            return Err(CertError::Config("signal amplitude and ramp must be finite, ramp >= 0".into()));
        }
        self.waveform.validate()?;
        if self.value(0.0).abs() > 1e-14 * self.bound() {
            return Err(CertError::Config(format!(
                "disturbances must vanish at t = 0 (got {}); use a ramp",
                self.value(0.0)
            )));
        }
        Ok(())
    }
}

/// Dirichlet data `u(0, t) = d1(t)`, `u(l, t) = d2(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub d1: Signal,
    pub d2: Signal,
}

impl Disturbance {
    pub fn zero() -> Self {
        Self { d1: Signal::zero(), d2: Signal::zero() }
    }

    pub fn left(d1: Signal) -> Self {
        Self { d1, d2: Signal::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        self.d1.validate()?;
        self.d2.validate()
    }

    /// `d_inf = max(sup |d1|, sup |d2|)` as guaranteed by construction.
    pub fn d_inf(&self) -> f64 {
        self.d1.bound().max(self.d2.bound())
    }

    pub fn is_zero(&self) -> bool {
        self.d1.amplitude == 0.0 && self.d2.amplitude == 0.0
    }
}

/// `H(z, t) = (z/l) d2(t) + ((l - z)/l) d1(t)`.
pub fn lift(z: f64, t: f64, l: f64, disturbance: &Disturbance) -> f64 {
    let s = z / l;
    s * disturbance.d2.value(t) + (1.0 - s) * disturbance.d1.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_differences() {
        let sigs = [
            Signal::new(Waveform::Sin { frequency: 1.3, phase: 0.0 }, 0.7, 2.0),
            Signal::new(Waveform::ExpRise { rate: 0.5 }, -0.2, 0.0),
            Signal::new(Waveform::SmoothSquare { frequency: 0.4, sharpness: 3.0 }, 0.1, 1.0),
            Signal::new(Waveform::Constant, 1.0, 3.0),
        ];
        for s in &sigs {
            s.validate().unwrap();
            for t in [0.3, 1.1, 2.5, 7.0] {
                let h = 1e-6;
                let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
                assert!((fd - s.derivative(t)).abs() < 1e-7, "{s:?} {t}");
                assert!(s.value(t).abs() <= s.bound() * (1.0 + 1e-15));
            }
        }
    }

    #[test]
    fn nonzero_start_rejected() {
        assert!(Signal::new(Waveform::Constant, 1.0, 0.0).validate().is_err());
        assert!(Signal::new(Waveform::Sin { frequency: 1.0, phase: 1.0 }, 1.0, 0.0).validate().is_err());
    }

    #[test]
    fn lift_endpoints() {
        let d = Disturbance {
            d1: Signal::new(Waveform::ExpRise { rate: 1.0 }, 0.3, 0.0),
            d2: Signal::new(Waveform::Sin { frequency: 2.0, phase: 0.0 }, -0.5, 0.0),
        };
        let t = 0.8;
        assert_eq!(lift(0.0, t, 2.0, &d), d.d1.value(t));
        assert_eq!(lift(2.0, t, 2.0, &d), d.d2.value(t));
        assert!((lift(1.0, t, 2.0, &d) - 0.5 * (d.d1.value(t) + d.d2.value(t))).abs() < 1e-15);
        assert_eq!(lift(0.4, t, 2.0, &Disturbance::zero()), 0.0);
    }
}
