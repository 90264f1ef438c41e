//! Writes procedurally generated phantom cases to disk as ready-to-plan configs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;

use baffle_core::mesh::io::write_json;
use baffle_core::phantom::{VentricleParams, VentriclePhantom};

use crate::pipeline::HemoSpec;

/// Writes the phantom's combined and structure meshes, its sparse points and a config that
/// references them into `dir`. Returns the config path.
pub fn write_phantom_case(
    dir: &Path,
    params: VentricleParams,
    a_target: f64,
    hemodynamics: &HemoSpec,
) -> io::Result<PathBuf> {
    let phantom = VentriclePhantom::for_target_area(params, a_target);
    let meshes = dir.join("meshes");
    fs::create_dir_all(&meshes)?;
    fs::write(meshes.join("combined.json"), write_json(&phantom.combined))?;
    let mut structures = serde_json::Map::new();
    for (name, mesh) in &phantom.structures {
        let file = format!("{name}.json");
        fs::write(meshes.join(&file), write_json(mesh))?;
        structures.insert(name.clone(), json!(format!("meshes/{file}")));
    }
    let points: Vec<[f64; 3]> = phantom.sparse_points.iter().map(|p| [p.x, p.y, p.z]).collect();
    fs::write(dir.join("points.json"), serde_json::to_string_pretty(&json!({ "points": points }))?)?;
    let config = json!({
        "meshes": { "kind": "bundle", "combined": "meshes/combined.json", "structures": structures },
        "points": "points.json",
        "patient": { "d_z0": 2.0 * (a_target / std::f64::consts::PI).sqrt(), "a_target": a_target },
        "hemodynamics": hemodynamics,
    });
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config)?)?;
    Ok(path)
}
