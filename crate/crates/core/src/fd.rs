//! Fundamental diagrams: the flow-density relationship of a road link.
//!
//! All quantities here are normalized: capacity is in vehicles per timestep,
//! speeds are fractions of the link traversed per timestep, and jam density
//! is in vehicles for the whole link. [`normalize`] converts from
//! conventional units.

use crate::TOLERANCE;
use thiserror::Error;

/// Normalized fundamental diagram of one link at one timestep.
///
/// The inverse-lambda shape admits two flow values for densities between the
/// low and high critical densities; the congestion metastate of the link
/// picks the active branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalDiagram {
    /// Capacity, vehicles per timestep.
    pub capacity: f64,
    /// Free-flow speed, fraction of link length per timestep (CFL: <= 1).
    pub free_flow_speed: f64,
    /// Congestion wave speed, fraction of link length per timestep (CFL: <= 1).
    pub congestion_wave_speed: f64,
    /// Jam density, vehicles.
    pub jam_density: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FdError {
    /// Normalized free-flow or wave speed exceeds one cell per timestep.
    #[error("CFL violation: normalized {name} = {value} exceeds 1")]
    CflViolation { name: &'static str, value: f64 },
    /// Low critical density exceeds high critical density.
    #[error("fundamental diagram shape violation: low critical density {low} > high critical density {high}")]
    ShapeViolation { low: f64, high: f64 },
    /// Free-flow speed is zero, so critical densities are undefined.
    #[error("degenerate fundamental diagram: free-flow speed is 0")]
    DegenerateDiagram,
    #[error("fundamental diagram parameter {name} = {value} is not finite and nonnegative")]
    InvalidParameter { name: &'static str, value: f64 },
}

impl FundamentalDiagram {
    /// Builds a diagram from already-normalized values, checking CFL and shape.
    pub fn new(
        capacity: f64,
        free_flow_speed: f64,
        congestion_wave_speed: f64,
        jam_density: f64,
    ) -> Result<Self, FdError> {
        let fd = FundamentalDiagram {
            capacity,
            free_flow_speed,
            congestion_wave_speed,
            jam_density,
        };
        fd.validate()?;
        Ok(fd)
    }

    pub fn validate(&self) -> Result<(), FdError> {
        for (name, value) in [
            ("capacity", self.capacity),
            ("free_flow_speed", self.free_flow_speed),
            ("congestion_wave_speed", self.congestion_wave_speed),
            ("jam_density", self.jam_density),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(FdError::InvalidParameter { name, value });
            }
        }
        if self.free_flow_speed > 1.0 + TOLERANCE {
            return Err(FdError::CflViolation {
                name: "free-flow speed",
                value: self.free_flow_speed,
            });
        }
        if self.congestion_wave_speed > 1.0 + TOLERANCE {
            return Err(FdError::CflViolation {
                name: "congestion wave speed",
                value: self.congestion_wave_speed,
            });
        }
        // Zero free-flow speed leaves the critical densities undefined; the
        // all-zero diagram is accepted as a degenerate closed link.
        if self.free_flow_speed > 0.0 {
            let (low, high) = self.critical_densities()?;
            if low > high + TOLERANCE {
                return Err(FdError::ShapeViolation { low, high });
            }
        }
        Ok(())
    }

    /// Low and high critical densities `(n-, n+)`.
    ///
    /// Between them the diagram is two-valued; equality gives the triangular
    /// special case.
    pub fn critical_densities(&self) -> Result<(f64, f64), FdError> {
        if self.free_flow_speed <= 0.0 {
            return Err(FdError::DegenerateDiagram);
        }
        let low = self.congestion_wave_speed * self.jam_density
            / (self.free_flow_speed + self.congestion_wave_speed);
        let high = self.capacity / self.free_flow_speed;
        Ok((low, high))
    }

    /// Returns a copy with the capacity scaled by `factor` (control hooks).
    pub fn with_capacity_scaled(&self, factor: f64) -> Self {
        FundamentalDiagram {
            capacity: self.capacity * factor,
            ..*self
        }
    }
}

/// Converts raw per-hour/per-mile style parameters to the normalized diagram.
///
/// `raw_capacity` in vehicles per hour, speeds in distance per hour, jam
/// density in vehicles per distance, `link_length` in the same distance unit
/// and `dt` in hours.
pub fn normalize(
    raw_capacity: f64,
    raw_free_flow_speed: f64,
    raw_wave_speed: f64,
    raw_jam_density: f64,
    link_length: f64,
    dt: f64,
) -> Result<FundamentalDiagram, FdError> {
    for (name, value) in [
        ("raw capacity", raw_capacity),
        ("raw free-flow speed", raw_free_flow_speed),
        ("raw wave speed", raw_wave_speed),
        ("raw jam density", raw_jam_density),
    ] {
        if !value.is_finite() || value < 0.0 {
            return Err(FdError::InvalidParameter { name, value });
        }
    }
    if !(link_length > 0.0) || !(dt > 0.0) {
        return Err(FdError::InvalidParameter {
            name: "link length / dt",
            value: if link_length > 0.0 { dt } else { link_length },
        });
    }
    FundamentalDiagram::new(
        raw_capacity * dt,
        raw_free_flow_speed * dt / link_length,
        raw_wave_speed * dt / link_length,
        raw_jam_density * link_length,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DT_10S: f64 = 10.0 / 3600.0;

    #[test]
    fn normalize_quarter_mile_link() {
        // 1800 vph over a quarter mile with a 10 s step: 5 vehicles per step,
        // free-flow speed 2/3 of the link per step, wave speed 1/6.
        let fd = normalize(1800.0, 60.0, 15.0, 120.0, 0.25, DT_10S).unwrap();
        assert_relative_eq!(fd.capacity, 5.0, max_relative = 1e-12);
        assert_relative_eq!(fd.free_flow_speed, 60.0 * DT_10S / 0.25, max_relative = 1e-12);
        assert_relative_eq!(fd.congestion_wave_speed, 15.0 * DT_10S / 0.25, max_relative = 1e-12);
        assert_relative_eq!(fd.jam_density, 30.0, max_relative = 1e-12);
    }

    #[test]
    fn normalize_rejects_inconsistent_shape() {
        // A 200 vpm jam density with these speeds puts the branch crossing
        // above the critical density; no length or timestep can fix it.
        let err = normalize(1800.0, 60.0, 15.0, 200.0, 0.25, DT_10S).unwrap_err();
        match err {
            FdError::ShapeViolation { low, high } => {
                assert_relative_eq!(low, 10.0, max_relative = 1e-9);
                assert_relative_eq!(high, 7.5, max_relative = 1e-9);
            }
            other => panic!("expected shape violation, got {other:?}"),
        }
    }

    #[test]
    fn normalize_zero_diagram_is_valid() {
        let fd = normalize(0.0, 0.0, 0.0, 0.0, 1.0, DT_10S).unwrap();
        assert_eq!(fd.capacity, 0.0);
        assert_eq!(fd.jam_density, 0.0);
    }

    #[test]
    fn normalize_rejects_cfl_violation() {
        // 60 mph over a 0.1 mile link with a 10 s step covers 1.67 links per step.
        let err = normalize(7200.0, 60.0, 15.0, 200.0, 0.1, DT_10S).unwrap_err();
        assert!(matches!(err, FdError::CflViolation { .. }), "got {err:?}");
    }

    #[test]
    fn critical_densities_plug_in() {
        let fd = FundamentalDiagram::new(50.0, 1.0, 0.25, 200.0).unwrap();
        let (low, high) = fd.critical_densities().unwrap();
        assert_relative_eq!(low, 40.0);
        assert_relative_eq!(high, 50.0);
    }

    #[test]
    fn critical_densities_triangular_case() {
        let fd = FundamentalDiagram::new(40.0, 1.0, 1.0, 80.0).unwrap();
        let (low, high) = fd.critical_densities().unwrap();
        assert_relative_eq!(low, 40.0);
        assert_relative_eq!(high, 40.0);
    }

    #[test]
    fn critical_densities_wide_inverse_lambda() {
        let fd = FundamentalDiagram::new(60.0, 1.0, 0.25, 200.0).unwrap();
        let (low, high) = fd.critical_densities().unwrap();
        assert_relative_eq!(low, 40.0);
        assert_relative_eq!(high, 60.0);
    }

    #[test]
    fn shape_violation_detected() {
        // n- = 0.5*200/1.5 = 66.7 > n+ = 20/1 = 20.
        let err = FundamentalDiagram::new(20.0, 1.0, 0.5, 200.0).unwrap_err();
        assert!(matches!(err, FdError::ShapeViolation { .. }), "got {err:?}");
    }

    #[test]
    fn degenerate_diagram_reported() {
        let fd = FundamentalDiagram {
            capacity: 10.0,
            free_flow_speed: 0.0,
            congestion_wave_speed: 0.5,
            jam_density: 100.0,
        };
        assert_eq!(fd.critical_densities().unwrap_err(), FdError::DegenerateDiagram);
    }

    #[test]
    fn normalization_scale_consistency() {
        // Doubling dt doubles capacity and both speeds, leaves jam density alone.
        let a = normalize(1800.0, 30.0, 10.0, 150.0, 0.5, DT_10S).unwrap();
        let b = normalize(1800.0, 30.0, 10.0, 150.0, 0.5, 2.0 * DT_10S).unwrap();
        assert_relative_eq!(b.capacity, 2.0 * a.capacity, max_relative = 1e-12);
        assert_relative_eq!(b.free_flow_speed, 2.0 * a.free_flow_speed, max_relative = 1e-12);
        assert_relative_eq!(b.congestion_wave_speed, 2.0 * a.congestion_wave_speed, max_relative = 1e-12);
        assert_eq!(b.jam_density, a.jam_density);
        // Critical densities are invariant under the time rescaling.
        let (la, ha) = a.critical_densities().unwrap();
        let (lb, hb) = b.critical_densities().unwrap();
        assert_relative_eq!(la, lb, max_relative = 1e-12);
        assert_relative_eq!(ha, hb, max_relative = 1e-12);
    }
}
