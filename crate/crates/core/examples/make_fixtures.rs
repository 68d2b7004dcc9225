//! Writes `tests/fixtures/broken_dishwasher`: a dishwasher built like the
//! generator builds it but without ground repair, so the open door drives
//! its handle into the floor.

use std::path::PathBuf;

use artigen::pipeline::{build_articulated, default_data_dir, generate_object, CategoryData};
use artigen::plausibility::{insert_gaps, motion_sweep_check, GroundRepair, ViolationKind};
use artigen::rng::SeededStream;
use artigen::tree::canonicalize;

const MASTER_SEED: u64 = 8;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/broken_dishwasher")));
    let data = CategoryData::load(&default_data_dir(), "dishwasher")?;
    // Among the first 200 objects, the one that needed the tallest base.
    let index = (0..200)
        .filter_map(|i| match generate_object(&data, MASTER_SEED, i, 16).ok()?.repair {
            GroundRepair::BaseInserted { height } => Some((height, i)),
            _ => None,
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, i)| i)
        .ok_or("no object needed a base")?;
    let tree = build_articulated(&data, &SeededStream::for_object(MASTER_SEED, index))?;
    let (tree, _) = insert_gaps(&tree)?;
    let mut tree = canonicalize(&tree);
    tree.rename_refs();
    let report = motion_sweep_check(&tree, 16)?;
    assert!(report.violations.iter().any(|v| v.kind == ViolationKind::GroundPenetration));
    if out.exists() {
        std::fs::remove_dir_all(&out)?;
    }
    artigen::export::write_urdf(&tree, &out)?;
    println!("object {index}: {} violations", report.violations.len());
    Ok(())
}
