//! Plan configuration files, output writing and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use baffle_core::boundary::SparsePointSet;
use baffle_core::centerline::Centerline;
use baffle_core::domain::{DomainBundle, DomainReport};
use baffle_core::hemo::{AreaProfile, HemodynamicParameters, PressureDrop};
use baffle_core::mesh::io::{parse_json, parse_obj, parse_vtk, sidecar_path, write_json, write_vtk};
use baffle_core::mesh::{LabeledSurfaceMesh, MeshFormat, TopologyReport, Vec3};
use baffle_core::sections::{AmplitudeProfile, SectionRecord};
use baffle_core::tps::FinalReport;

use crate::pipeline::{
    fixed_parameters, run_pipeline, HemoSpec, MeshSource, PatientSpec, PipelineError, PlanInputs, PlanOutputs,
    Result, Stage, StageLabels, StructureNames, Tolerances,
};
use crate::report;

pub const FINAL_MESH_JSON: &str = "final_mesh.json";
pub const FINAL_MESH_VTK: &str = "final_mesh.vtk";
pub const SECTIONS_CSV: &str = "sections.csv";
pub const AREA_PROFILE_CSV: &str = "area_profile.csv";
pub const CFD_MANIFEST: &str = "cfd_manifest.json";
pub const REPORT_TXT: &str = "report.txt";
pub const MANIFEST: &str = "manifest.json";

/// Mesh file references of a config. Paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    /// Unlabeled combined mesh plus one mesh per structure, keyed by structure name.
    Bundle {
        combined: PathBuf,
        structures: BTreeMap<String, PathBuf>,
    },
    /// A single mesh already labeled by structure.
    Labeled { mesh: PathBuf },
}

/// The JSON file given to `plan --config`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub meshes: MeshConfig,
    /// Sparse suture points: `{"points": [[x, y, z], ...]}` or three columns per line.
    pub points: PathBuf,
    pub patient: PatientSpec,
    pub hemodynamics: HemoSpec,
    #[serde(default)]
    pub structures: StructureNames,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl PlanConfig {
    /// Every input file path, relative to the config directory.
    pub fn input_paths(&self) -> Vec<PathBuf> {
        let mut paths = match &self.meshes {
            MeshConfig::Bundle { combined, structures } => {
                let mut v = vec![combined.clone()];
                v.extend(structures.values().cloned());
                v
            }
            MeshConfig::Labeled { mesh } => vec![mesh.clone()],
        };
        paths.push(self.points.clone());
        paths
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn input_error(message: String, path: &Path) -> PipelineError {
    PipelineError::new(Stage::Input, message, json!({ "path": path.display().to_string() }))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display()), path))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| input_error(format!("{} is not UTF-8", path.display()), path))
}

/// A config with its inputs loaded and digested.
#[derive(Clone, Debug)]
pub struct LoadedPlan {
    pub config: PlanConfig,
    pub inputs: PlanInputs,
    /// SHA-256 of each input file, keyed by the path as written in the config. OBJ label
    /// sidecars appear under their own relative path.
    pub digests: BTreeMap<String, String>,
}

/// Reads the config and every file it references. Missing or unreadable files are input
/// errors; malformed meshes are mesh-core errors; malformed point files are boundary errors.
pub fn load_plan(config_path: &Path) -> Result<LoadedPlan> {
    let text = read_text(config_path)?;
    let config: PlanConfig = serde_json::from_str(&text)
        .map_err(|e| input_error(format!("invalid config {}: {e}", config_path.display()), config_path))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut digests = BTreeMap::new();
    let mut load = |rel: &Path| -> Result<LabeledSurfaceMesh> {
        let path = base.join(rel);
        let format = MeshFormat::from_path(&path)
            .ok_or_else(|| input_error(format!("unknown mesh format for {}", rel.display()), rel))?;
        let bytes = read_bytes(&path)?;
        digests.insert(rel.display().to_string(), sha256_hex(&bytes));
        let text = String::from_utf8(bytes).map_err(|_| input_error(format!("{} is not UTF-8", rel.display()), rel))?;
        let parsed = match format {
            MeshFormat::ObjWithLabelSidecar => {
                let side = sidecar_path(&path);
                let labels = if side.exists() {
                    let bytes = read_bytes(&side)?;
                    digests.insert(sidecar_path(rel).display().to_string(), sha256_hex(&bytes));
                    Some(String::from_utf8_lossy(&bytes).into_owned())
                } else {
                    None
                };
                parse_obj(&text, labels.as_deref())
            }
            MeshFormat::AsciiLegacyPolydata => parse_vtk(&text),
            MeshFormat::ArtifactJson => parse_json(&text),
        };
        parsed.map_err(|e| {
            let mut err = PipelineError::from_error(Stage::MeshCore, &e);
            err.diagnostics["path"] = json!(rel.display().to_string());
            err
        })
    };
    let meshes = match &config.meshes {
        MeshConfig::Bundle { combined, structures } => {
            let combined = load(combined)?;
            let structures = structures
                .iter()
                .map(|(name, rel)| Ok((name.clone(), load(rel)?)))
                .collect::<Result<_>>()?;
            MeshSource::Bundle(DomainBundle { combined, structures })
        }
        MeshConfig::Labeled { mesh } => MeshSource::Labeled(load(mesh)?),
    };
    let points_path = base.join(&config.points);
    let points_text = read_text(&points_path)?;
    digests.insert(config.points.display().to_string(), sha256_hex(points_text.as_bytes()));
    let points = parse_points(&points_text, &config.points)?;
    let inputs = PlanInputs {
        meshes,
        points,
        patient: config.patient.clone(),
        hemodynamics: config.hemodynamics.clone(),
        structures: config.structures.clone(),
        tolerances: config.tolerances.clone(),
    };
    Ok(LoadedPlan { config, inputs, digests })
}

/// Parses a point file. Syntax errors are input errors; a wrong point count or other
/// content problems are boundary errors.
pub fn parse_points(text: &str, origin: &Path) -> Result<SparsePointSet> {
    use baffle_core::boundary::BoundaryError;
    let parsed = if text.trim_start().starts_with('{') {
        SparsePointSet::from_json(text)
    } else {
        SparsePointSet::from_text(text)
    };
    parsed.map_err(|e| {
        let stage = match e {
            BoundaryError::Json(_) => Stage::Input,
            BoundaryError::Parse { .. } if !text.trim_start().starts_with('{') => Stage::Input,
            _ => Stage::BaffleBoundary,
        };
        let mut err = PipelineError::from_error(stage, &e);
        err.diagnostics["path"] = json!(origin.display().to_string());
        err
    })
}

/// Record of one plan run: what went in, every parameter and each stage's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config: PlanConfig,
    /// SHA-256 of each input file, keyed by config-relative path.
    pub input_digests: BTreeMap<String, String>,
    pub label_map: BTreeMap<String, i32>,
    pub labels: StageLabels,
    pub sparse_points: Vec<Vec3>,
    pub ordered_points: Vec<Vec3>,
    pub tolerances: Tolerances,
    pub fixed_parameters: BTreeMap<String, f64>,
    pub a_target: f64,
    pub hemodynamics: HemodynamicParameters,
    pub domain_report: DomainReport,
    pub boundary: Vec<Vec3>,
    pub boundary_preserved: bool,
    pub centerline: Centerline,
    pub section_records: Vec<SectionRecord>,
    pub amplitude_profile: AmplitudeProfile,
    pub raised_sections: Vec<usize>,
    pub landmark_count: usize,
    pub rim_landmark_count: usize,
    pub final_report: FinalReport,
    pub area_profile: AreaProfile,
    pub dp_estimate: PressureDrop,
    pub topology: TopologyReport,
    /// SHA-256 of each output file in the run directory, keyed by file name.
    pub output_digests: BTreeMap<String, String>,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], digests: &mut BTreeMap<String, String>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| input_error(format!("cannot write {}: {e}", path.display()), &path))?;
    digests.insert(name.to_string(), sha256_hex(bytes));
    Ok(())
}

/// Writes every output file and the manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, plan: &LoadedPlan, out: &PlanOutputs) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| input_error(format!("cannot create {}: {e}", dir.display()), dir))?;
    let mesh = &out.final_domain.mesh;
    let mut digests = BTreeMap::new();
    write_file(dir, FINAL_MESH_JSON, write_json(mesh).as_bytes(), &mut digests)?;
    write_file(dir, FINAL_MESH_VTK, write_vtk(mesh).as_bytes(), &mut digests)?;
    let sections_csv = out.sections_csv();
    write_file(dir, SECTIONS_CSV, sections_csv.as_bytes(), &mut digests)?;
    write_file(dir, AREA_PROFILE_CSV, out.area_profile_csv().as_bytes(), &mut digests)?;
    let cfd = serde_json::to_string_pretty(&out.cfd).expect("serializable");
    write_file(dir, CFD_MANIFEST, cfd.as_bytes(), &mut digests)?;

    let mut manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: plan.config.clone(),
        input_digests: plan.digests.clone(),
        label_map: mesh.label_map().clone(),
        labels: out.labels.clone(),
        sparse_points: plan.inputs.points.points.clone(),
        ordered_points: out.ordered_points.clone(),
        tolerances: plan.inputs.tolerances.clone(),
        fixed_parameters: fixed_parameters(),
        a_target: out.a_target,
        hemodynamics: out.hemodynamics.clone(),
        domain_report: out.domain_report.clone(),
        boundary: out.boundary.points.clone(),
        boundary_preserved: out.boundary_preserved,
        centerline: out.centerline.clone(),
        section_records: out.section_records.clone(),
        amplitude_profile: out.reshaped.profile.clone(),
        raised_sections: out.reshaped.raised.clone(),
        landmark_count: out.landmark_count,
        rim_landmark_count: out.rim_landmark_count,
        final_report: out.final_domain.report.clone(),
        area_profile: out.area_profile.clone(),
        dp_estimate: out.dp_estimate,
        topology: out.topology.clone(),
        output_digests: BTreeMap::new(),
    };
    let summary = report::summarize(&manifest, &sections_csv).map_err(|e| input_error(e.to_string(), dir))?;
    write_file(dir, REPORT_TXT, report::render_text(&summary).as_bytes(), &mut digests)?;
    manifest.output_digests = digests;
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| input_error(format!("cannot write {}: {e}", path.display()), &path))?;
    Ok(manifest)
}

/// Loads the config, runs the pipeline and writes the outputs.
pub fn cmd_plan(config_path: &Path, out_dir: &Path) -> Result<RunManifest> {
    let plan = load_plan(config_path)?;
    let outputs = run_pipeline(&plan.inputs)?;
    write_outputs(out_dir, &plan, &outputs)
}
