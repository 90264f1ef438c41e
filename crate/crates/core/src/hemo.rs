//! Patient-derived flow parameters, the tunnel area profile and a reduced-order pressure-drop
//! estimate.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centerline::Centerline;
use crate::mesh::{plane_intersection_detailed, polygon, LabeledSurfaceMesh, Plane, Vec2};
use crate::tps::FinalDomain;

/// Blood density, g/cm³.
pub const BLOOD_DENSITY: f64 = 1.06;
/// Blood dynamic viscosity, g/(cm·s).
pub const BLOOD_VISCOSITY: f64 = 0.04;
/// dyn/cm² per mmHg.
pub const DYN_PER_MMHG: f64 = 1333.22;

#[derive(Debug, Error, PartialEq)]
pub enum HemoError {
    #[error("annulus diameter must be positive, got {0}")]
    BadDiameter(f64),
    #[error("cardiac output must be non-negative, got {0}")]
    BadCardiacOutput(f64),
    #[error("flow must be positive, got {0}")]
    ZeroFlow(f64),
    #[error("section {index} has zero area")]
    ZeroArea { index: usize },
    #[error("the area profile needs at least 2 samples, got {0}")]
    ShortProfile(usize),
    #[error("arclength is not strictly increasing at sample {0}")]
    NotIncreasing(usize),
    #[error("centerline sample {index}: {reason}")]
    Section { index: usize, reason: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = HemoError> = std::result::Result<T, E>;

/// Area of a circular orifice of diameter `d_z0`.
pub fn target_area(d_z0: f64) -> Result<f64> {
    if !(d_z0 > 0.0) {
        return Err(HemoError::BadDiameter(d_z0));
    }
    Ok(PI * (d_z0 / 2.0).powi(2))
}

/// L/min to cm³/s.
pub fn flow_from_cardiac_output(co: f64) -> Result<f64> {
    if !(co >= 0.0) {
        return Err(HemoError::BadCardiacOutput(co));
    }
    Ok(co * 1000.0 / 60.0)
}

/// Outlet resistance in dyn·s/cm⁵ that holds `map_target` (mmHg) at flow `q_in` (cm³/s).
pub fn resistance_from_map(map_target: f64, q_in: f64) -> Result<f64> {
    if !(q_in > 0.0) {
        return Err(HemoError::ZeroFlow(q_in));
    }
    Ok(map_target * DYN_PER_MMHG / q_in)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientParameters {
    /// m².
    pub bsa: f64,
    /// Measured native annulus diameter, cm. Kept for reporting only.
    pub d_pt: f64,
    /// Normative annulus diameter at z-score 0, cm.
    pub d_z0: f64,
    /// cm².
    pub a_target: f64,
}

impl PatientParameters {
    pub fn new(bsa: f64, d_pt: f64, d_z0: f64) -> Result<Self> {
        Ok(PatientParameters {
            bsa,
            d_pt,
            d_z0,
            a_target: target_area(d_z0)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HemodynamicParameters {
    /// L/min.
    pub cardiac_output: f64,
    /// mmHg.
    pub map_target: f64,
    /// cm³/s.
    pub q_in: f64,
    /// dyn·s/cm⁵.
    pub outlet_resistance: f64,
    pub fluid_density: f64,
    pub fluid_viscosity: f64,
}

impl HemodynamicParameters {
    /// Derives inflow and outlet resistance with blood properties.
    pub fn new(cardiac_output: f64, map_target: f64) -> Result<Self> {
        let q_in = flow_from_cardiac_output(cardiac_output)?;
        Ok(HemodynamicParameters {
            cardiac_output,
            map_target,
            q_in,
            outlet_resistance: resistance_from_map(map_target, q_in)?,
            fluid_density: BLOOD_DENSITY,
            fluid_viscosity: BLOOD_VISCOSITY,
        })
    }
}

/// One row of the published patient tables, with the values as printed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatientFixture {
    pub id: u32,
    pub bsa: f64,
    pub d_pt: f64,
    pub d_z0: f64,
    pub printed_a_target: f64,
    pub cardiac_output: f64,
    pub map_target: f64,
    pub printed_q_in: f64,
    pub printed_resistance: f64,
    /// False when the printed target area disagrees with the circular-orifice formula.
    pub a_target_consistent: bool,
}

impl PatientFixture {
    pub fn patient(&self) -> PatientParameters {
        PatientParameters::new(self.bsa, self.d_pt, self.d_z0).expect("fixture diameters are positive")
    }

    pub fn hemodynamics(&self) -> HemodynamicParameters {
        HemodynamicParameters::new(self.cardiac_output, self.map_target).expect("fixture flows are positive")
    }
}

/// The four published cases. Patient 4's printed target area (0.119 cm²) does not follow
/// from its diameter (π·0.485² ≈ 0.739 cm²) and is flagged, not corrected.
pub fn patient_fixtures() -> Vec<PatientFixture> {
    let row = |id, bsa, d_pt, d_z0, a, co, map, q, r, ok| PatientFixture {
        id,
        bsa,
        d_pt,
        d_z0,
        printed_a_target: a,
        cardiac_output: co,
        map_target: map,
        printed_q_in: q,
        printed_resistance: r,
        a_target_consistent: ok,
    };
    vec![
        row(1, 0.45, 1.51, 1.04, 0.849, 3.89, 64.0, 64.8, 1316.0, true),
        row(2, 0.37, 1.36, 0.94, 0.694, 3.81, 57.0, 63.5, 1196.0, true),
        row(3, 0.33, 1.42, 0.89, 0.622, 3.01, 65.0, 50.2, 1727.0, true),
        row(4, 0.39, 1.32, 0.97, 0.119, 2.32, 38.0, 38.7, 1310.0, false),
    ]
}

/// Cross-sectional area along the tunnel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaProfile {
    /// Centerline sample of each entry.
    pub indices: Vec<usize>,
    /// Cumulative centerline arclength, cm.
    pub arclength: Vec<f64>,
    /// cm².
    pub area: Vec<f64>,
    /// `sqrt(area / π)`, cm.
    pub effective_radius: Vec<f64>,
}

impl AreaProfile {
    pub fn new(indices: Vec<usize>, arclength: Vec<f64>, area: Vec<f64>) -> Result<Self> {
        if arclength.len() != area.len() || indices.len() != area.len() {
            return Err(HemoError::Invalid("profile columns differ in length".into()));
        }
        if area.len() < 2 {
            return Err(HemoError::ShortProfile(area.len()));
        }
        if let Some(i) = (1..arclength.len()).find(|&i| !(arclength[i] > arclength[i - 1])) {
            return Err(HemoError::NotIncreasing(i));
        }
        if let Some(i) = area.iter().position(|a| !(*a > 0.0)) {
            return Err(HemoError::ZeroArea { index: indices[i] });
        }
        let effective_radius = area.iter().map(|a| (a / PI).sqrt()).collect();
        Ok(AreaProfile {
            indices,
            arclength,
            area,
            effective_radius,
        })
    }

    pub fn min_area(&self) -> f64 {
        self.area.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_area(&self) -> f64 {
        self.area.iter().sum::<f64>() / self.area.len() as f64
    }
}

/// Area of the smallest plane-section loop of `mesh` around `plane.point`.
pub fn enclosing_section_area(mesh: &LabeledSurfaceMesh, plane: &Plane) -> Option<f64> {
    let c = plane.to_2d(&plane.point);
    plane_intersection_detailed(mesh, plane)
        .loops
        .into_iter()
        .filter_map(|lp| {
            let flat: Vec<Vec2> = lp.points.iter().map(|p| plane.to_2d(p)).collect();
            (flat.len() >= 3 && polygon::point_in_polygon(&c, &flat)).then(|| polygon::loop_area(&flat))
        })
        .min_by(f64::total_cmp)
}

/// Re-measures the tunnel on the final domain. Interior samples use the plane section
/// through the sample; the two end samples sit on the caps, whose planes the section plane
/// coincides with, so the cap areas are used there.
pub fn area_profile(final_domain: &FinalDomain, center: &Centerline) -> Result<AreaProfile> {
    let mesh = &final_domain.mesh;
    let m = center.points.len();
    if m < 2 || center.tangents.len() != m {
        return Err(HemoError::ShortProfile(m));
    }
    let mut arclength = vec![0.0];
    for j in 1..m {
        arclength.push(arclength[j - 1] + (center.points[j] - center.points[j - 1]).norm());
    }
    let interior: Vec<Result<f64>> = {
        use rayon::prelude::*;
        (1..m - 1)
            .into_par_iter()
            .map(|j| {
                let plane = Plane::new(center.points[j], center.tangents[j]).map_err(|e| HemoError::Section {
                    index: j,
                    reason: e.to_string(),
                })?;
                enclosing_section_area(mesh, &plane).ok_or_else(|| HemoError::Section {
                    index: j,
                    reason: "no section loop encloses the centerline point".into(),
                })
            })
            .collect()
    };
    let mut area = vec![projected_cap_area(mesh, final_domain.vsd_cap_label, &center.tangents[0])];
    for a in interior {
        area.push(a?);
    }
    area.push(projected_cap_area(mesh, final_domain.aortic_cap_label, &center.tangents[m - 1]));
    AreaProfile::new((0..m).collect(), arclength, area)
}

/// Area of the faces labeled `label` projected along `axis`.
fn projected_cap_area(mesh: &LabeledSurfaceMesh, label: i32, axis: &crate::mesh::Vec3) -> f64 {
    let n = axis.normalize();
    mesh.faces_with_label(label)
        .iter()
        .map(|&f| 0.5 * mesh.face_cross(f).dot(&n))
        .sum::<f64>()
        .abs()
}

/// Pressure drops in mmHg.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureDrop {
    pub dp_viscous: f64,
    pub dp_bernoulli: f64,
    pub dp_total: f64,
}

/// Series Poiseuille resistance along the profile plus the Bernoulli term between its ends.
/// Each segment uses the mean of its end effective radii.
pub fn pressure_drop_estimate(profile: &AreaProfile, hemo: &HemodynamicParameters) -> Result<PressureDrop> {
    let q = hemo.q_in;
    if !(q > 0.0) {
        return Err(HemoError::ZeroFlow(q));
    }
    let n = profile.area.len();
    if n < 2 {
        return Err(HemoError::ShortProfile(n));
    }
    if let Some(i) = profile.area.iter().position(|a| !(*a > 0.0)) {
        return Err(HemoError::ZeroArea {
            index: profile.indices.get(i).copied().unwrap_or(i),
        });
    }
    let mu = hemo.fluid_viscosity;
    let viscous: f64 = (0..n - 1)
        .map(|i| {
            let dl = profile.arclength[i + 1] - profile.arclength[i];
            let r = 0.5 * (profile.effective_radius[i] + profile.effective_radius[i + 1]);
            8.0 * mu * dl * q / (PI * r.powi(4))
        })
        .sum();
    let (a_in, a_out) = (profile.area[0], profile.area[n - 1]);
    let bernoulli = 0.5 * hemo.fluid_density * q * q * (1.0 / (a_out * a_out) - 1.0 / (a_in * a_in));
    let dp_viscous = viscous / DYN_PER_MMHG;
    let dp_bernoulli = bernoulli / DYN_PER_MMHG;
    Ok(PressureDrop {
        dp_viscous,
        dp_bernoulli,
        dp_total: dp_viscous + dp_bernoulli,
    })
}

/// Role of a face region for an external flow solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryRole {
    Inlet,
    Outlet,
    Wall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfdManifest {
    /// Face label to boundary role.
    pub face_roles: BTreeMap<i32, BoundaryRole>,
    pub label_names: BTreeMap<String, i32>,
    pub baffle_label: i32,
    pub fluid_density: f64,
    pub fluid_viscosity: f64,
    /// Inflow through the inlet face, cm³/s.
    pub inflow: f64,
    pub parabolic_inflow_profile: bool,
    /// Resistance at the outlet face, dyn·s/cm⁵.
    pub outlet_resistance: f64,
}

/// Boundary roles for the final domain: VSD cap inlet, aortic cap outlet, everything else wall.
pub fn cfd_manifest(final_domain: &FinalDomain, hemo: &HemodynamicParameters) -> CfdManifest {
    let face_roles = final_domain
        .mesh
        .label_set()
        .into_iter()
        .map(|l| {
            let role = if l == final_domain.vsd_cap_label {
                BoundaryRole::Inlet
            } else if l == final_domain.aortic_cap_label {
                BoundaryRole::Outlet
            } else {
                BoundaryRole::Wall
            };
            (l, role)
        })
        .collect();
    CfdManifest {
        face_roles,
        label_names: final_domain.mesh.label_map().clone(),
        baffle_label: final_domain.baffle_label,
        fluid_density: hemo.fluid_density,
        fluid_viscosity: hemo.fluid_viscosity,
        inflow: hemo.q_in,
        parabolic_inflow_profile: true,
        outlet_resistance: hemo.outlet_resistance,
    }
}
