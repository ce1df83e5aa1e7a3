//! Writes the bundled meshes and `manifest.json` recording their counts
//! and exact surface areas.
//!
//! ```text
//! cargo run -p fatigue-core --example fixtures -- fixtures
//! ```

use std::path::PathBuf;

use fatigue_core::fem::generate::{ball, facet_area, notched_bar, patch_bar, unit_cube, NotchSpec};
use fatigue_core::fem::{save_mesh, ElementKind, Mesh};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let blunt = NotchSpec { depth: 0.1, radius: 0.8, ..NotchSpec::default() };
    let meshes: Vec<(&str, String, Mesh<f64>, Option<f64>)> = vec![
        ("unit_cube_tet4.mesh", "unit_cube(tet4, 2)".into(), unit_cube(ElementKind::Tet4, 2)?, Some(6.0)),
        (
            "patch_bar_hex8.mesh",
            "patch_bar(hex8, [3, 2, 2], 3)".into(),
            patch_bar(ElementKind::Hex8, [3, 2, 2], 3.0)?,
            Some(14.0),
        ),
        (
            "notched_bar_tet10.mesh",
            "notched_bar(tet10, [8, 2, 1], depth 0.3, radius 0.35)".into(),
            notched_bar(ElementKind::Tet10, [8, 2, 1], &NotchSpec::default())?,
            None,
        ),
        (
            "blunt_notch_hex20.mesh",
            "notched_bar(hex20, [24, 6, 3], depth 0.1, radius 0.8)".into(),
            notched_bar(ElementKind::Hex20, [24, 6, 3], &blunt)?,
            None,
        ),
        ("ball_tet4.mesh", "ball(2, 1)".into(), ball(2, 1.0)?, None),
    ];
    let mut entries = serde_json::Map::new();
    for (name, generator, mesh, exact_area) in &meshes {
        save_mesh(mesh, &dir.join(name))?;
        let facet = (mesh.elements[0].kind == ElementKind::Tet4).then(|| facet_area(mesh));
        entries.insert(
            name.to_string(),
            json!({
                "generator": generator,
                "kind": mesh.elements[0].kind.name(),
                "nodes": mesh.nodes.len(),
                "elements": mesh.elements.len(),
                "boundary_faces": mesh.faces.len(),
                "tags": mesh.tags(),
                "exact_area": exact_area,
                "facet_area": facet,
            }),
        );
    }
    let manifest = serde_json::to_string_pretty(&json!({ "meshes": entries }))?;
    std::fs::write(dir.join("manifest.json"), manifest + "\n")?;
    println!("wrote {} meshes to {}", meshes.len(), dir.display());
    Ok(())
}
