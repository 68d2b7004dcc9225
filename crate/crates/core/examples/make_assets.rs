//! Writes the bundled part library to `data/assets` (or the directory given
//! as the first argument). Parts are authored in their own frame: the
//! mounting face lies on x = 0 and the part protrudes toward +x.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use artigen::geometry::{build_lathe, build_prism, compute_aabb, obj_to_string, Mesh};
use nalgebra::{Matrix3, Vector3};

struct Part {
    id: &'static str,
    label: &'static str,
    mesh: Mesh,
    supports: Vec<(&'static str, Vector3<f64>)>,
}

/// U-shaped pull: two standoffs `span` apart joined by a grip `depth` out.
fn bar(id: &'static str, span: f64, depth: f64, bar: f64, height: f64) -> Part {
    let (h, w) = (0.5 * span, 0.5 * span - bar);
    let profile = [
        [0.0, -h],
        [depth, -h],
        [depth, h],
        [0.0, h],
        [0.0, w],
        [depth - bar, w],
        [depth - bar, -w],
        [0.0, -w],
    ];
    let mesh = build_prism(&profile, &Vector3::z(), height)
        .expect("valid profile")
        .translated(&Vector3::new(0.0, 0.0, -0.5 * height));
    let foot = 0.5 * (h + w);
    Part {
        id,
        label: "shared/handle",
        mesh,
        supports: vec![
            ("mount_left", Vector3::new(0.0, -foot, 0.0)),
            ("mount_right", Vector3::new(0.0, foot, 0.0)),
            ("grip", Vector3::new(depth, 0.0, 0.0)),
        ],
    }
}

/// Solid of revolution about +x from a `(radius, distance from the mount)`
/// profile.
fn turned(id: &'static str, label: &'static str, profile: &[[f64; 2]]) -> Part {
    let along_z = build_lathe(profile, 32).expect("valid profile");
    // Quarter turn about y: (x, y, z) -> (z, y, -x).
    let z_to_x = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
    let mesh = along_z.similarity(1.0, &z_to_x, &Vector3::zeros());
    let depth = profile.last().expect("profile")[1];
    let widest = profile.iter().cloned().fold([0.0, 0.0], |a, p| if p[0] > a[0] { p } else { a });
    Part {
        id,
        label,
        mesh,
        supports: vec![
            ("base", Vector3::zeros()),
            ("tip", Vector3::new(depth, 0.0, 0.0)),
            ("rim", Vector3::new(widest[1], widest[0], 0.0)),
        ],
    }
}

fn parts() -> Vec<Part> {
    vec![
        bar("bar_handle_short", 0.096, 0.03, 0.01, 0.012),
        bar("bar_handle_long", 0.16, 0.035, 0.012, 0.014),
        bar("bar_handle_slim", 0.128, 0.025, 0.008, 0.008),
        bar("bar_handle_deep", 0.11, 0.045, 0.012, 0.016),
        turned("knob_mushroom", "shared/handle", &[[0.006, 0.0], [0.006, 0.012], [0.015, 0.02], [0.015, 0.026], [0.0, 0.03]]),
        turned("knob_cylinder", "shared/handle", &[[0.012, 0.0], [0.012, 0.025]]),
        turned("dial_fluted", "shared/knob", &[[0.02, 0.0], [0.02, 0.004], [0.017, 0.016], [0.0, 0.018]]),
        turned("dial_flat", "shared/knob", &[[0.018, 0.0], [0.018, 0.012]]),
        turned("dial_stepped", "shared/knob", &[[0.02, 0.0], [0.02, 0.006], [0.012, 0.008], [0.012, 0.02]]),
    ]
}

fn write(dir: &Path, part: &Part) -> std::io::Result<()> {
    let b = compute_aabb(&part.mesh).expect("non-empty mesh");
    let mut meta = String::new();
    let _ = writeln!(meta, "label {}", part.label);
    let _ = writeln!(meta, "bbox_min {} {} {}", b.min.x, b.min.y, b.min.z);
    let _ = writeln!(meta, "bbox_max {} {} {}", b.max.x, b.max.y, b.max.z);
    for (name, p) in &part.supports {
        let _ = writeln!(meta, "support {name} {} {} {}", p.x, p.y, p.z);
    }
    std::fs::write(dir.join(format!("{}.meta", part.id)), meta)?;
    std::fs::write(dir.join(format!("{}.obj", part.id)), obj_to_string(&part.mesh, None, None))
}

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/assets")));
    std::fs::create_dir_all(&dir)?;
    for part in parts() {
        part.mesh.validate().expect("closed mesh");
        write(&dir, &part)?;
    }
    Ok(())
}
