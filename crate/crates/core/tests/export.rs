use std::fs;
use std::path::Path;

use artigen::export::{
    parse_urdf, parse_urdf_str, sample_material, sha256_hex, urdf_string, write_urdf, ExportError, MaterialRange,
};
use artigen::geometry::{build_box, obj_to_string, parse_obj, Aabb, Mesh};
use artigen::joints::{JointKind, JointSpec};
use artigen::pipeline::{default_data_dir, generate_object, write_object, CategoryData};
use artigen::rng::SeededStream;
use artigen::tree::{ArticulationTree, JointSlot, SemanticLabel};
use nalgebra::Vector3;
use proptest::prelude::*;

fn corpus(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus").join(name)).unwrap()
}

fn two_link(kind: JointKind, limits: Option<(f64, f64)>) -> ArticulationTree {
    let mut t = ArticulationTree::with_root("box", SemanticLabel::new("box", "body"));
    let joint = JointSpec::at(kind, Vector3::new(0.25, 0.0, 0.5), Vector3::y(), limits);
    t.add_child(0, SemanticLabel::new("box", "lid"), JointSlot::Simple(joint));
    t
}

#[test]
fn fixed_pair_has_one_joint_and_no_limit() {
    let xml = urdf_string(&two_link(JointKind::Fixed, None)).unwrap();
    assert_eq!(xml.matches("<link ").count(), 2);
    assert_eq!(xml.matches("<joint ").count(), 1);
    assert!(xml.contains("type=\"fixed\""));
    assert!(!xml.contains("<limit"));
    assert_eq!(xml, urdf_string(&two_link(JointKind::Fixed, None)).unwrap());
}

#[test]
fn limits_parse_back_exactly() {
    let t = two_link(JointKind::Prismatic, Some((0.0, 0.475)));
    let parsed = parse_urdf_str(&urdf_string(&t).unwrap()).unwrap();
    assert!(parsed.warnings.is_empty());
    let j = parsed.tree.joint(1).unwrap();
    assert_eq!(j.kind, JointKind::Prismatic);
    assert_eq!(j.limits, Some((0.0, 0.475)));
    assert_eq!(j.origin.translation.vector, Vector3::new(0.25, 0.0, 0.5));
    assert_eq!(j.axis, Vector3::y());
}

#[test]
fn structural_errors() {
    let two_roots = r#"<robot name="x"><link name="a"/><link name="b"/></robot>"#;
    assert!(matches!(parse_urdf_str(two_roots), Err(ExportError::MultipleRoots(_))));
    let cycle = r#"<robot name="x"><link name="a"/><link name="b"/>
        <joint name="j1" type="fixed"><parent link="a"/><child link="b"/></joint>
        <joint name="j2" type="fixed"><parent link="b"/><child link="a"/></joint></robot>"#;
    assert!(parse_urdf_str(cycle).is_err());
    let unknown = r#"<robot name="x"><link name="a"/>
        <joint name="j" type="fixed"><parent link="a"/><child link="zz"/></joint></robot>"#;
    assert!(matches!(parse_urdf_str(unknown), Err(ExportError::UnknownLink { .. })));
    let floating = r#"<robot name="x"><link name="a"/><link name="b"/>
        <joint name="j" type="floating"><parent link="a"/><child link="b"/></joint></robot>"#;
    assert!(matches!(parse_urdf_str(floating), Err(ExportError::UnsupportedJointType { .. })));
    assert!(matches!(parse_urdf_str("<robot"), Err(ExportError::MalformedXml(_))));
}

#[test]
fn hand_written_mixed_file() {
    let p = parse_urdf_str(&corpus("laptop_01.urdf")).unwrap();
    let kinds: Vec<_> = (1..p.tree.len()).map(|n| p.tree.joint(n).unwrap().kind).collect();
    assert!(kinds.contains(&JointKind::Revolute));
    assert_eq!(p.tree.root(), Some(0));
    for name in ["storage_01.urdf", "microwave_01.urdf", "faucet_01.urdf", "lamp_01.urdf"] {
        let p = parse_urdf_str(&corpus(name)).unwrap();
        assert_eq!(p.tree.len(), corpus(name).matches("<link ").count(), "{name}");
    }
}

#[test]
fn unit_cube_obj() {
    let cube = build_box(&Aabb::from_center_extent(Vector3::zeros(), Vector3::repeat(1.0)), 0.0).unwrap();
    let text = obj_to_string(&cube, None, None);
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 8);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 12);
    assert_eq!(parse_obj(&text).unwrap(), cube);
}

#[test]
fn bundle_rewrite_is_a_fixpoint() {
    let data = CategoryData::load(&default_data_dir(), "lamp").unwrap();
    let obj = generate_object(&data, 31, 0, 16).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let first = write_urdf(&obj.tree, &dir.path().join("a")).unwrap();
    let parsed = parse_urdf(&first.dir.join(&first.urdf_path)).unwrap();
    assert!(parsed.warnings.is_empty());
    let second = write_urdf(&parsed.tree, &dir.path().join("b")).unwrap();
    assert_eq!(first.files(), second.files());
    for f in first.files() {
        assert_eq!(fs::read(first.dir.join(&f)).unwrap(), fs::read(second.dir.join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_checksums_match_files() {
    let data = CategoryData::load(&default_data_dir(), "cabinet").unwrap();
    let obj = generate_object(&data, 5, 3, 16).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_object(&obj, 5, dir.path()).unwrap();
    assert_eq!((manifest.master_seed, manifest.object_index), (5, 3));
    let root = dir.path().join("cabinet_3");
    let on_disk: serde_json::Value = serde_json::from_slice(&fs::read(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk["files"].as_array().unwrap().len(), manifest.files.len());
    assert!(manifest.files.iter().any(|f| f.path == "object.urdf"));
    for f in &manifest.files {
        assert_eq!(sha256_hex(&fs::read(root.join(&f.path)).unwrap()), f.sha256);
    }
    for m in manifest.materials.values() {
        assert!(m.base_color.iter().chain([&m.roughness, &m.specular, &m.noise_amplitude]).all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn materials_stay_in_range() {
    let palette = [MaterialRange {
        name: "wood".into(),
        color_lo: [0.4, 0.2, 0.1],
        color_hi: [0.7, 0.5, 0.3],
        roughness: (0.5, 0.9),
        specular: (0.0, 0.3),
        noise: (0.0, 0.1),
    }];
    let mut rng = SeededStream::new(1);
    for _ in 0..1000 {
        let m = sample_material(&mut rng, &palette).unwrap();
        assert!((0.5..=0.9).contains(&m.roughness) && (0.0..=0.3).contains(&m.specular));
        assert!(m.base_color.iter().all(|c| (0.0..=1.0).contains(c)));
    }
    assert_eq!(sample_material(&mut rng, &[]), Err(ExportError::EmptyPalette));
}

fn random_mesh(seed: u64, with_uvs: bool) -> Mesh {
    let mut rng = SeededStream::new(seed);
    let n = 3 + rng.index(40);
    let vertices: Vec<_> = (0..n)
        .map(|_| Vector3::new(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)))
        .collect();
    let faces: Vec<[u32; 3]> = (0..n)
        .map(|i| [i as u32, ((i + 1) % n) as u32, ((i + 2) % n) as u32])
        .collect();
    let mut m = Mesh::from_triangles(vertices, faces);
    if with_uvs {
        m.uvs = Some((0..n).map(|_| [rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)]).collect());
    }
    m
}

proptest! {
    #[test]
    fn obj_round_trip_is_exact(seed in any::<u64>(), uvs in any::<bool>()) {
        let m = random_mesh(seed, uvs);
        let back = parse_obj(&obj_to_string(&m, None, None)).unwrap();
        prop_assert_eq!(back, m);
    }
}
