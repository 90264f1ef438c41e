//! The planning pipeline from in-memory inputs to the final domain and its estimates.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use baffle_core::boundary::{self, densify_with, make_placeholder, order_points, BoundaryCurve, SparsePointSet};
use baffle_core::centerline::{self, build_centerline_from, cap_frame, tangent_at, CapFrame, Centerline};
use baffle_core::domain::{
    self, build_capped_domain, interface_loop, regularize_loop_with, transfer_labels, DomainBundle, DomainReport,
    RegularizeOptions,
};
use baffle_core::hemo::{
    self, area_profile, cfd_manifest, pressure_drop_estimate, target_area, AreaProfile, CfdManifest,
    HemodynamicParameters, PressureDrop,
};
use baffle_core::mesh::{anatomical_label_map, check_topology, Bvh, LabeledSurfaceMesh, TopologyReport, Vec3};
use baffle_core::sections::{self, extract_sections_with, profile_csv, reshape_all, Reshaped, SectionRecord};
use baffle_core::tps::{self, build_final_domain, parameterize_landmarks, tps_fit_with, FinalDomain, TpsOptions};

/// Pipeline stage, used to tag errors and choose the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Input,
    BaffleBoundary,
    DomainPrep,
    Centerline,
    SectionsShaping,
    SurfaceTps,
    Hemodynamics,
    MeshCore,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Input => "input",
            Stage::BaffleBoundary => "baffle-boundary",
            Stage::DomainPrep => "domain-prep",
            Stage::Centerline => "centerline",
            Stage::SectionsShaping => "sections-shaping",
            Stage::SurfaceTps => "surface-tps",
            Stage::Hemodynamics => "hemodynamics",
            Stage::MeshCore => "mesh-core",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Input => 2,
            Stage::BaffleBoundary => 3,
            Stage::DomainPrep => 4,
            Stage::Centerline => 5,
            Stage::SectionsShaping => 6,
            Stage::SurfaceTps => 7,
            Stage::Hemodynamics => 8,
            Stage::MeshCore => 9,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A stage-tagged failure with a JSON diagnostic payload.
#[derive(Clone, Debug, Error, Serialize, Deserialize)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
    pub diagnostics: Value,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl Into<String>, diagnostics: Value) -> Self {
        PipelineError {
            stage,
            message: message.into(),
            diagnostics,
        }
    }

    /// Wraps an error, recording its debug form and its chain of causes.
    pub fn from_error(stage: Stage, err: &(dyn std::error::Error + 'static)) -> Self {
        let mut causes = Vec::new();
        let mut source = err.source();
        while let Some(s) = source {
            causes.push(s.to_string());
            source = s.source();
        }
        Self::new(stage, err.to_string(), json!({ "detail": format!("{err:?}"), "causes": causes }))
    }

    pub fn exit_code(&self) -> i32 {
        self.stage.exit_code()
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

fn tag<E: std::error::Error + 'static>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::from_error(stage, &e)
}

/// Every overridable numeric parameter of the pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub loop_rays: usize,
    pub loop_smooth_window: usize,
    pub loop_smooth_passes: usize,
    pub boundary_samples: usize,
    /// Largest surface-projection distance of a boundary sample, as a fraction of the curve's
    /// mean radius.
    pub max_projection_fraction: f64,
    pub centerline_samples: usize,
    pub tangent_window: usize,
    /// Sections whose RV-wall vertex fraction exceeds this are discarded.
    pub rv_fraction_limit: f64,
    /// cm².
    pub area_tolerance: f64,
    pub tps_regularization: f64,
    pub tps_merge_tolerance: f64,
    pub tps_landmark_tolerance: f64,
    /// Vertex spacing of the baffle patch in cm; the boundary spacing when absent.
    pub baffle_grid_spacing: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            loop_rays: domain::DEFAULT_RAYS,
            loop_smooth_window: domain::DEFAULT_SMOOTH_WINDOW,
            loop_smooth_passes: domain::DEFAULT_SMOOTH_PASSES,
            boundary_samples: boundary::DEFAULT_SAMPLES,
            max_projection_fraction: boundary::MAX_PROJECTION_FRACTION,
            centerline_samples: centerline::DEFAULT_SAMPLES,
            tangent_window: centerline::DEFAULT_WINDOW,
            rv_fraction_limit: sections::RV_FRACTION_LIMIT,
            area_tolerance: sections::DEFAULT_AREA_TOL,
            tps_regularization: 0.0,
            tps_merge_tolerance: tps::MERGE_TOL,
            tps_landmark_tolerance: tps::LANDMARK_TOL,
            baffle_grid_spacing: None,
        }
    }
}

/// Names of the three structures whose interfaces define the VSD and aortic loops.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StructureNames {
    pub lv: String,
    pub rv: String,
    pub aorta: String,
}

impl Default for StructureNames {
    fn default() -> Self {
        StructureNames {
            lv: "LV".into(),
            rv: "RV".into(),
            aorta: "ao".into(),
        }
    }
}

/// Patient data: the normative annulus diameter, optionally overridden by an explicit
/// target area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientSpec {
    /// Normative aortic annulus diameter at z-score 0, cm.
    pub d_z0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bsa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_pt: Option<f64>,
    /// cm². Replaces the area computed from `d_z0` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_target: Option<f64>,
}

impl PatientSpec {
    pub fn target_area(&self) -> Result<f64> {
        match self.a_target {
            Some(a) if a > 0.0 && a.is_finite() => Ok(a),
            Some(a) => Err(PipelineError::new(
                Stage::Input,
                format!("target area {a} is not positive"),
                json!({ "a_target": a }),
            )),
            None => target_area(self.d_z0).map_err(tag(Stage::Hemodynamics)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HemoSpec {
    /// L/min.
    pub cardiac_output: f64,
    /// Mean arterial pressure target, mmHg.
    pub map: f64,
}

/// Mesh input: a combined blood-pool mesh with per-structure meshes, or one mesh that
/// already carries the structure labels.
#[derive(Clone, Debug)]
pub enum MeshSource {
    Bundle(DomainBundle),
    Labeled(LabeledSurfaceMesh),
}

impl MeshSource {
    /// Approximate resident size in bytes.
    pub fn approx_bytes(&self) -> usize {
        let one = |m: &LabeledSurfaceMesh| m.vertices().len() * 24 + m.face_count() * 16;
        match self {
            MeshSource::Bundle(b) => one(&b.combined) + b.structures.values().map(one).sum::<usize>(),
            MeshSource::Labeled(m) => one(m),
        }
    }
}

/// Everything one pipeline run needs, already loaded.
#[derive(Clone, Debug)]
pub struct PlanInputs {
    pub meshes: MeshSource,
    pub points: SparsePointSet,
    pub patient: PatientSpec,
    pub hemodynamics: HemoSpec,
    pub structures: StructureNames,
    pub tolerances: Tolerances,
}

/// Labels assigned along the way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageLabels {
    pub lv: i32,
    pub rv: i32,
    pub aorta: i32,
    pub vsd_cap: i32,
    pub aortic_cap: i32,
    pub rv_wall: i32,
    pub placeholder: i32,
    pub baffle: i32,
}

/// Results of every stage.
#[derive(Clone, Debug)]
pub struct PlanOutputs {
    pub a_target: f64,
    pub hemodynamics: HemodynamicParameters,
    pub labels: StageLabels,
    pub domain_report: DomainReport,
    pub ordered_points: Vec<Vec3>,
    pub boundary: BoundaryCurve,
    pub inlet: CapFrame,
    pub outlet: CapFrame,
    pub centerline: Centerline,
    pub section_records: Vec<SectionRecord>,
    pub reshaped: Reshaped,
    pub landmark_count: usize,
    pub rim_landmark_count: usize,
    pub final_domain: FinalDomain,
    pub area_profile: AreaProfile,
    pub dp_estimate: PressureDrop,
    pub cfd: CfdManifest,
    pub topology: TopologyReport,
    /// Whether every boundary-curve point is a vertex of the final mesh, coordinates unchanged.
    pub boundary_preserved: bool,
}

impl PlanOutputs {
    /// The per-section amplitude CSV.
    pub fn sections_csv(&self) -> String {
        profile_csv(&self.section_records, &self.reshaped)
    }

    /// `j,arclength,area,effective_radius` with 1-based `j`.
    pub fn area_profile_csv(&self) -> String {
        let p = &self.area_profile;
        let mut out = String::from("j,arclength,area,effective_radius\n");
        for k in 0..p.area.len() {
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.9}\n",
                p.indices[k] + 1,
                p.arclength[k],
                p.area[k],
                p.effective_radius[k]
            ));
        }
        out
    }
}

/// Label of a named structure: from the mesh's label map, else the conventional one.
fn resolve_label(mesh: &LabeledSurfaceMesh, name: &str) -> Result<i32> {
    mesh.label_map()
        .get(name)
        .copied()
        .or_else(|| anatomical_label_map().get(name).copied())
        .filter(|&l| mesh.has_label(l))
        .ok_or_else(|| {
            PipelineError::new(
                Stage::DomainPrep,
                format!("no faces carry the label of structure {name:?}"),
                json!({ "structure": name, "labels_present": mesh.label_set() }),
            )
        })
}

/// Runs every stage in order.
pub fn run_pipeline(inputs: &PlanInputs) -> Result<PlanOutputs> {
    let tol = &inputs.tolerances;
    let a_target = inputs.patient.target_area()?;
    let hemodynamics = HemodynamicParameters::new(inputs.hemodynamics.cardiac_output, inputs.hemodynamics.map)
        .map_err(tag(Stage::Hemodynamics))?;
    let points = inputs.points.clone();
    points.validate().map_err(tag(Stage::BaffleBoundary))?;

    // domain preparation
    let dp = Stage::DomainPrep;
    let labeled = match &inputs.meshes {
        MeshSource::Bundle(bundle) => transfer_labels(bundle).map_err(tag(dp))?,
        MeshSource::Labeled(mesh) => mesh.clone(),
    };
    let names = &inputs.structures;
    let (lv, rv, aorta) = (
        resolve_label(&labeled, &names.lv)?,
        resolve_label(&labeled, &names.rv)?,
        resolve_label(&labeled, &names.aorta)?,
    );
    log::info!("labels: {} = {lv}, {} = {rv}, {} = {aorta}", names.lv, names.rv, names.aorta);
    let regularize = RegularizeOptions {
        n_rays: tol.loop_rays,
        start_fraction: 0.0,
        smooth_window: tol.loop_smooth_window,
        smooth_passes: tol.loop_smooth_passes,
    };
    let surface = Bvh::new(&labeled);
    let vsd_raw = interface_loop(&labeled, lv, rv).map_err(tag(dp))?;
    let ao_raw = interface_loop(&labeled, rv, aorta).map_err(tag(dp))?;
    let vsd = regularize_loop_with(&vsd_raw, &surface, &regularize).map_err(tag(dp))?;
    let ao = regularize_loop_with(&ao_raw, &surface, &regularize).map_err(tag(dp))?;
    let (capped, domain_report) = build_capped_domain(&labeled, &vsd, &ao).map_err(tag(dp))?;
    log::info!("capped domain: {} faces", capped.mesh.face_count());

    // boundary curve and placeholder
    let bb = Stage::BaffleBoundary;
    points.check_near(&capped.mesh).map_err(tag(bb))?;
    let ordered = order_points(&points).map_err(tag(bb))?;
    let curve = densify_with(
        &ordered,
        &Bvh::new(&capped.mesh),
        tol.boundary_samples,
        tol.max_projection_fraction,
    )
    .map_err(tag(bb))?;
    let placeholder = make_placeholder(&capped, &curve).map_err(tag(bb))?;
    log::info!("placeholder label {}", placeholder.placeholder_label);

    // centerline
    let cl = Stage::Centerline;
    let inlet = cap_frame(&placeholder.mesh, capped.vsd_cap_label).map_err(tag(cl))?;
    let outlet =
        cap_frame(&placeholder.mesh, capped.aortic_cap_label).map_err(tag(cl))?;
    let mut center = build_centerline_from(
        inlet.centroid,
        inlet.normal,
        inlet.effective_radius,
        outlet.centroid,
        -outlet.normal,
        outlet.effective_radius,
        tol.centerline_samples,
    )
    .map_err(tag(cl))?;
    center.tangents = (1..=center.points.len())
        .map(|j| tangent_at(&center, j, tol.tangent_window))
        .collect::<std::result::Result<_, _>>()
        .map_err(tag(cl))?;

    // sections and shaping
    let ss = Stage::SectionsShaping;
    let set = extract_sections_with(
        &placeholder.mesh,
        &center,
        &curve,
        capped.rv_wall_label,
        placeholder.placeholder_label,
        tol.rv_fraction_limit,
    )
    .map_err(tag(ss))?;
    let reshaped = reshape_all(&set.sections, a_target, tol.area_tolerance).map_err(tag(ss))?;
    log::info!(
        "{} sections accepted, {} raised after smoothing",
        set.sections.len(),
        reshaped.raised.len()
    );

    // surface synthesis
    let st = Stage::SurfaceTps;
    let landmarks = parameterize_landmarks(&placeholder, &curve, &set.sections, &reshaped.shaped)
        .map_err(tag(st))?;
    let tps_opts = TpsOptions {
        regularization: tol.tps_regularization,
        merge_tol: tol.tps_merge_tolerance,
        landmark_tol: tol.tps_landmark_tolerance,
    };
    let map = tps_fit_with(&landmarks.source, &landmarks.target, &tps_opts).map_err(tag(st))?;
    let final_domain = build_final_domain(&placeholder, &capped, &landmarks, &map, tol.baffle_grid_spacing)
        .map_err(tag(st))?;
    log::info!("final domain: {} faces", final_domain.mesh.face_count());

    // estimates
    let hs = Stage::Hemodynamics;
    let profile = area_profile(&final_domain, &center).map_err(tag(hs))?;
    let dp_estimate = pressure_drop_estimate(&profile, &hemodynamics).map_err(tag(hs))?;
    let cfd = cfd_manifest(&final_domain, &hemodynamics);
    let topology = check_topology(&final_domain.mesh);
    let boundary_preserved = boundary_is_preserved(&curve, &final_domain.mesh);

    Ok(PlanOutputs {
        a_target,
        hemodynamics,
        labels: StageLabels {
            lv,
            rv,
            aorta,
            vsd_cap: capped.vsd_cap_label,
            aortic_cap: capped.aortic_cap_label,
            rv_wall: capped.rv_wall_label,
            placeholder: placeholder.placeholder_label,
            baffle: final_domain.baffle_label,
        },
        domain_report,
        ordered_points: ordered.points,
        boundary: curve,
        inlet,
        outlet,
        centerline: center,
        section_records: set.records,
        reshaped,
        landmark_count: landmarks.source.len(),
        rim_landmark_count: landmarks.rim_count,
        final_domain,
        area_profile: profile,
        dp_estimate,
        cfd,
        topology,
        boundary_preserved,
    })
}

/// Exact bitwise membership of every curve point among the mesh vertices.
pub fn boundary_is_preserved(curve: &BoundaryCurve, mesh: &LabeledSurfaceMesh) -> bool {
    let key = |p: &Vec3| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
    let vertices: std::collections::BTreeSet<[u64; 3]> = mesh.vertices().iter().map(key).collect();
    curve.points.iter().all(|p| vertices.contains(&key(p)))
}

/// Fixed parameters that are echoed for reference but not configurable.
pub fn fixed_parameters() -> BTreeMap<String, f64> {
    [
        ("blood_density", hemo::BLOOD_DENSITY),
        ("blood_viscosity", hemo::BLOOD_VISCOSITY),
        ("dyn_per_mmhg", hemo::DYN_PER_MMHG),
        ("min_sparse_points", boundary::MIN_POINTS as f64),
        ("max_sparse_points", boundary::MAX_POINTS as f64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}
