//! Apparatus parameters and the bundled presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five numbers that define one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Probability that a trigger signal yields a qubit pair.
    pub gamma: f64,
    /// Angle between Alice's two settings, in degrees.
    #[serde(rename = "theta_A_deg")]
    pub theta_a_deg: f64,
    /// Angle between Bob's two settings, in degrees.
    #[serde(rename = "theta_B_deg")]
    pub theta_b_deg: f64,
    #[serde(rename = "eta_A")]
    pub eta_a: f64,
    #[serde(rename = "eta_B")]
    pub eta_b: f64,
}

/// Unit vectors in the xz plane, stored as (x, z).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SettingVectors {
    pub a: [f64; 2],
    pub a_prime: [f64; 2],
    pub b: [f64; 2],
    pub b_prime: [f64; 2],
}

impl SettingVectors {
    pub fn alice(&self, i: usize) -> [f64; 2] {
        if i == 0 {
            self.a
        } else {
            self.a_prime
        }
    }

    pub fn bob(&self, j: usize) -> [f64; 2] {
        if j == 0 {
            self.b
        } else {
            self.b_prime
        }
    }
}

impl ExperimentParams {
    pub fn new(gamma: f64, theta_a_deg: f64, theta_b_deg: f64, eta_a: f64, eta_b: f64) -> Result<Self> {
        let p = Self {
            gamma,
            theta_a_deg,
            theta_b_deg,
            eta_a,
            eta_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        let angle = |x: f64| x > 0.0 && x < 180.0;
        if !unit(self.gamma) {
            return Err(Error::InvalidParams(format!("gamma = {} not in (0, 1]", self.gamma)));
        }
        if !unit(self.eta_a) || !unit(self.eta_b) {
            return Err(Error::InvalidParams(format!(
                "efficiencies ({}, {}) not in (0, 1]",
                self.eta_a, self.eta_b
            )));
        }
        if !angle(self.theta_a_deg) || !angle(self.theta_b_deg) {
            return Err(Error::InvalidParams(format!(
                "angles ({}, {}) not in (0, 180) degrees",
                self.theta_a_deg, self.theta_b_deg
            )));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.theta_a_deg, self.theta_b_deg, self.eta_a, self.eta_b)
    }

    pub fn delft() -> Self {
        Self { gamma: 1.0, theta_a_deg: 90.0, theta_b_deg: 80.6, eta_a: 0.971, eta_b: 0.963 }
    }

    pub fn vienna() -> Self {
        Self { gamma: 0.0035, theta_a_deg: 64.0, theta_b_deg: 64.0, eta_a: 0.786, eta_b: 0.762 }
    }

    pub fn boulder() -> Self {
        Self { gamma: 0.0005, theta_a_deg: 60.2, theta_b_deg: 60.2, eta_a: 0.747, eta_b: 0.756 }
    }

    pub fn munich() -> Self {
        Self { gamma: 1.0, theta_a_deg: 90.0, theta_b_deg: 90.0, eta_a: 0.975, eta_b: 0.975 }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "delft" => Some(Self::delft()),
            "vienna" => Some(Self::vienna()),
            "boulder" => Some(Self::boulder()),
            "munich" => Some(Self::munich()),
            _ => None,
        }
    }

    /// A preset name, or a path to a JSON file with the five named fields.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(p) = Self::preset(name_or_path) {
            return Ok(p);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(Error::InvalidParams(format!(
                "{name_or_path} is neither a preset nor a file"
            )));
        }
        let p: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    /// Setting directions: a, a' symmetric about z at half-angle theta_A / 2.
    pub fn setting_vectors(&self) -> SettingVectors {
        let ha = self.theta_a_deg.to_radians() / 2.0;
        let hb = self.theta_b_deg.to_radians() / 2.0;
        SettingVectors {
            a: [ha.sin(), ha.cos()],
            a_prime: [-ha.sin(), ha.cos()],
            b: [hb.sin(), hb.cos()],
            b_prime: [-hb.sin(), hb.cos()],
        }
    }
}
