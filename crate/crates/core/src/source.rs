//! Body forces, fluid sources and heat sources as sums of separable terms
//! `amplitude · shape(x) · profile(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Uniform,
    /// `sin(πx) sin(πy) sin(πz)`, vanishing on the boundary of Ω.
    SineBump,
    /// `x_axis`
    Coordinate { axis: usize },
    /// `exp(-|x - center|² / width²)`
    Gaussian { center: [f64; 3], width: f64 },
}

impl Shape {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            Shape::Uniform => 1.0,
            Shape::SineBump => (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin(),
            Shape::Coordinate { axis } => x[*axis],
            Shape::Gaussian { center, width } => {
                let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
                (-r2 / (width * width)).exp()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Constant,
    /// `t`
    Linear,
    /// `min(t / duration, 1)`
    Ramp { duration: f64 },
    /// `sin(frequency · t)`
    Sine { frequency: f64 },
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Constant => 1.0,
            Profile::Linear => t,
            Profile::Ramp { duration } => (t / duration).min(1.0),
            Profile::Sine { frequency } => (frequency * t).sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarTerm {
    pub amplitude: f64,
    #[serde(default)]
    pub shape: Shape,
    #[serde(default)]
    pub profile: Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorTerm {
    pub amplitude: [f64; 3],
    #[serde(default)]
    pub shape: Shape,
    #[serde(default)]
    pub profile: Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ScalarSource {
    pub terms: Vec<ScalarTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct VectorSource {
    pub terms: Vec<VectorTerm>,
}

impl ScalarSource {
    pub fn constant(v: f64) -> Self {
        Self {
            terms: vec![ScalarTerm {
                amplitude: v,
                shape: Shape::Uniform,
                profile: Profile::Constant,
            }],
        }
    }

    pub fn single(amplitude: f64, shape: Shape, profile: Profile) -> Self {
        Self {
            terms: vec![ScalarTerm {
                amplitude,
                shape,
                profile,
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    pub fn eval(&self, x: [f64; 3], t: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.amplitude * s.shape.eval(x) * s.profile.eval(t))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ScalarTerm {
                    amplitude: t.amplitude * s,
                    ..t.clone()
                })
                .collect(),
        }
    }
}

impl VectorSource {
    pub fn constant(v: [f64; 3]) -> Self {
        Self {
            terms: vec![VectorTerm {
                amplitude: v,
                shape: Shape::Uniform,
                profile: Profile::Constant,
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == [0.0; 3])
    }

    pub fn eval(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for s in &self.terms {
            let w = s.shape.eval(x) * s.profile.eval(t);
            for d in 0..3 {
                out[d] += s.amplitude[d] * w;
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| VectorTerm {
                    amplitude: t.amplitude.map(|a| a * s),
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Sum of two sources, as a concatenation of their terms.
    pub fn plus(&self, other: &Self) -> Self {
        Self {
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        }
    }
}

/// Per-phase sources of the micro model (index 0 matrix, 1 inclusion).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PhaseSources {
    /// Body force per unit volume [N/m³].
    pub force: [VectorSource; 2],
    /// Fluid source [1/s].
    pub fluid: [ScalarSource; 2],
    /// Heat source [W/m³].
    pub heat: [ScalarSource; 2],
}

/// Volume-weighted sources of the homogenized model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct MacroSources {
    pub force: VectorSource,
    pub fluid: [ScalarSource; 2],
    pub heat: [ScalarSource; 2],
}

impl PhaseSources {
    pub fn starred(&self, volumes: [f64; 2]) -> MacroSources {
        MacroSources {
            force: self.force[0].scaled(volumes[0]).plus(&self.force[1].scaled(volumes[1])),
            fluid: [self.fluid[0].scaled(volumes[0]), self.fluid[1].scaled(volumes[1])],
            heat: [self.heat[0].scaled(volumes[0]), self.heat[1].scaled(volumes[1])],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.force.iter().all(|s| s.is_zero())
            && self.fluid.iter().all(|s| s.is_zero())
            && self.heat.iter().all(|s| s.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_scaling() {
        let s = ScalarSource::single(2.0, Shape::Coordinate { axis: 1 }, Profile::Linear);
        assert_eq!(s.eval([0.0, 0.5, 0.0], 3.0), 3.0);
        assert_eq!(s.scaled(0.5).eval([0.0, 0.5, 0.0], 3.0), 1.5);
        let r = Profile::Ramp { duration: 2.0 };
        assert_eq!(r.eval(1.0), 0.5);
        assert_eq!(r.eval(5.0), 1.0);
    }

    #[test]
    fn starred_force_is_volume_weighted_sum() {
        let mut src = PhaseSources::default();
        src.force[0].terms.push(VectorTerm {
            amplitude: [1.0, 0.0, 0.0],
            shape: Shape::Uniform,
            profile: Profile::Constant,
        });
        src.force[1].terms.push(VectorTerm {
            amplitude: [3.0, 0.0, 0.0],
            shape: Shape::Uniform,
            profile: Profile::Constant,
        });
        let m = src.starred([0.875, 0.125]);
        assert_eq!(m.force.eval([0.5; 3], 0.0)[0], 0.875 + 0.375);
    }

    #[test]
    fn json_roundtrip() {
        let s: ScalarSource = serde_json::from_str(r#"[{"amplitude": 1.5, "shape": {"kind": "sine_bump"}}]"#).unwrap();
        assert_eq!(s.terms[0].profile, Profile::Constant);
        let back: ScalarSource = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
