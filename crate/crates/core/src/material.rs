use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

pub fn identity3() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn scale3(m: &Mat3, s: f64) -> Mat3 {
    m.map(|r| r.map(|v| v * s))
}

pub fn transpose3(m: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Voigt index pairs in the order 11, 22, 33, 23, 13, 12.
pub const VOIGT: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Full rank-4 elasticity tensor `c[i][j][k][l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticTensor {
    pub c: [[[[f64; 3]; 3]; 3]; 3],
}

impl ElasticTensor {
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut c = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        c[i][j][k][l] = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                    }
                }
            }
        }
        Self { c }
    }

    /// Builds the tensor from raw Voigt entries, assuming minor symmetries.
    pub fn from_voigt(v: &[[f64; 6]; 6]) -> Self {
        let mut c = [[[[0.0; 3]; 3]; 3]; 3];
        for (a, &(i, j)) in VOIGT.iter().enumerate() {
            for (b, &(k, l)) in VOIGT.iter().enumerate() {
                for (p, q) in [(i, j), (j, i)] {
                    for (r, s) in [(k, l), (l, k)] {
                        c[p][q][r][s] = v[a][b];
                    }
                }
            }
        }
        Self { c }
    }

    pub fn to_voigt(&self) -> [[f64; 6]; 6] {
        let mut v = [[0.0; 6]; 6];
        for (a, &(i, j)) in VOIGT.iter().enumerate() {
            for (b, &(k, l)) in VOIGT.iter().enumerate() {
                v[a][b] = self.c[i][j][k][l];
            }
        }
        v
    }
}

/// Constants of one constituent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// Lamé first parameter [Pa].
    pub lambda: f64,
    /// Shear modulus [Pa].
    pub mu: f64,
    /// Biot-Willis coupling [-].
    pub beta: f64,
    /// Thermal stress coefficient [Pa/K].
    pub gamma: f64,
    /// Thermo-hydraulic coupling [1/K].
    pub alpha: f64,
    /// Storage coefficient [1/Pa].
    pub phi: f64,
    /// Permeability over fluid viscosity [m²/(Pa·s)].
    pub kappa: f64,
    /// Thermal conductivity [W/(m·K)].
    pub conductivity: f64,
    /// Heat capacity [J/(m³·K²)] in the scaled form used by the model.
    pub capacity: f64,
}

impl Phase {
    pub fn elastic_tensor(&self) -> ElasticTensor {
        ElasticTensor::isotropic(self.lambda, self.mu)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let pos = [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("phi", self.phi),
            ("capacity", self.capacity),
            ("kappa", self.kappa),
            ("conductivity", self.conductivity),
        ];
        for (field, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Material(format!(
                    "{name}.{field} must be strictly positive, got {v}"
                )));
            }
        }
        for (field, v) in [("beta", self.beta), ("gamma", self.gamma), ("alpha", self.alpha)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Material(format!("{name}.{field} must be nonnegative, got {v}")));
            }
        }
        if self.phi * self.capacity <= self.alpha * self.alpha {
            return Err(Error::WellPosedness(format!(
                "{name}: storage form not positive, phi*capacity = {} <= alpha^2 = {}",
                self.phi * self.capacity,
                self.alpha * self.alpha
            )));
        }
        Ok(())
    }
}

/// Interface barrier coefficient as a function of the cell coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterfaceProfile {
    Constant(f64),
    Shaped(ShapedProfile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapedProfile {
    /// `offset + gradient · y`
    Affine { offset: f64, gradient: [f64; 3] },
    /// `mean + amplitude · sin(2π frequency y_axis)`
    Sine {
        mean: f64,
        amplitude: f64,
        axis: usize,
        frequency: f64,
    },
}

impl InterfaceProfile {
    pub fn eval(&self, y: [f64; 3]) -> f64 {
        match self {
            InterfaceProfile::Constant(v) => *v,
            InterfaceProfile::Shaped(ShapedProfile::Affine { offset, gradient }) => {
                offset + gradient[0] * y[0] + gradient[1] * y[1] + gradient[2] * y[2]
            }
            InterfaceProfile::Shaped(ShapedProfile::Sine {
                mean,
                amplitude,
                axis,
                frequency,
            }) => mean + amplitude * (2.0 * std::f64::consts::PI * frequency * y[*axis]).sin(),
        }
    }

    /// Lower bound over the closed unit cell.
    pub fn lower_bound(&self) -> f64 {
        match self {
            InterfaceProfile::Constant(v) => *v,
            InterfaceProfile::Shaped(ShapedProfile::Affine { offset, gradient }) => {
                offset + gradient.iter().map(|g| g.min(0.0)).sum::<f64>()
            }
            InterfaceProfile::Shaped(ShapedProfile::Sine { mean, amplitude, .. }) => mean - amplitude.abs(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let InterfaceProfile::Shaped(ShapedProfile::Sine { axis, .. }) = self {
            if *axis > 2 {
                return Err(Error::Config(format!("profile axis {axis} out of range")));
            }
        }
        Ok(())
    }
}

/// Material data of the two constituents plus the interface barriers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseParameters {
    /// Matrix (index 0) and inclusion (index 1).
    pub phases: [Phase; 2],
    /// Hydraulic barrier.
    pub zeta: InterfaceProfile,
    /// Thermal barrier.
    pub omega: InterfaceProfile,
}

impl PhaseParameters {
    /// Both phases share one material; barriers are constant.
    pub fn homogeneous(phase: Phase, zeta: f64, omega: f64) -> Self {
        Self {
            phases: [phase.clone(), phase],
            zeta: InterfaceProfile::Constant(zeta),
            omega: InterfaceProfile::Constant(omega),
        }
    }

    /// Checks positivity of the constants; barriers must stay above a
    /// positive constant unless the interface is declared insulated.
    pub fn validate(&self, insulated: bool) -> Result<()> {
        self.phases[0].validate("phase1")?;
        self.phases[1].validate("phase2")?;
        for (name, p) in [("zeta", &self.zeta), ("omega", &self.omega)] {
            p.validate()?;
            let lb = p.lower_bound();
            if insulated {
                if lb < 0.0 {
                    return Err(Error::Material(format!("{name} must be nonnegative")));
                }
            } else if !(lb > 0.0) {
                return Err(Error::Material(format!(
                    "{name} must be bounded below by a positive constant (lower bound {lb}); \
                     set interface.insulated to allow zero"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) fn sample_phase() -> Phase {
    Phase {
        lambda: 2.0,
        mu: 1.0,
        beta: 0.8,
        gamma: 0.3,
        alpha: 0.1,
        phi: 0.5,
        kappa: 1.0,
        conductivity: 1.5,
        capacity: 1.2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_voigt_entries() {
        let v = ElasticTensor::isotropic(3.0, 2.0).to_voigt();
        assert_eq!(v[0][0], 7.0);
        assert_eq!(v[0][1], 3.0);
        assert_eq!(v[5][5], 2.0);
        assert_eq!(v[0][5], 0.0);
        let back = ElasticTensor::from_voigt(&v);
        assert_eq!(back, ElasticTensor::isotropic(3.0, 2.0));
    }

    #[test]
    fn validation_rejects_bad_storage() {
        let mut p = sample_phase();
        p.alpha = 1.0;
        assert!(matches!(p.validate("x"), Err(Error::WellPosedness(_))));
        let mut p = sample_phase();
        p.mu = 0.0;
        assert!(matches!(p.validate("x"), Err(Error::Material(_))));
    }

    #[test]
    fn barrier_lower_bounds() {
        let s = InterfaceProfile::Shaped(ShapedProfile::Sine {
            mean: 2.0,
            amplitude: 1.0,
            axis: 0,
            frequency: 1.0,
        });
        assert_eq!(s.lower_bound(), 1.0);
        assert!((s.eval([0.25, 0.0, 0.0]) - 3.0).abs() < 1e-15);
        let mut params = PhaseParameters::homogeneous(sample_phase(), 0.0, 1.0);
        assert!(params.validate(false).is_err());
        assert!(params.validate(true).is_ok());
        params.zeta = s;
        assert!(params.validate(false).is_ok());
    }

    #[test]
    fn profile_json_forms() {
        let c: InterfaceProfile = serde_json::from_str("2.5").unwrap();
        assert_eq!(c, InterfaceProfile::Constant(2.5));
        let a: InterfaceProfile = serde_json::from_str(r#"{"kind":"affine","offset":1,"gradient":[0,0,1]}"#).unwrap();
        assert_eq!(a.eval([0.0, 0.0, 0.5]), 1.5);
    }
}
