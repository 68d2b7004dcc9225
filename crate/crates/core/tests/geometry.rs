use artigen::geometry::{
    align_support_points, assign_bounding_boxes, build_box, build_lathe, compute_aabb, recompute_normals, Aabb,
    AssetLibrary, LayoutTemplate, Mesh,
};
use artigen::joints::assign_joint_kinds;
use artigen::joints::JointRuleTable;
use artigen::pipeline::{build_articulated, default_data_dir, list_categories, CategoryData};
use artigen::rng::SeededStream;
use artigen::tree::{canonicalize, grow_tree, GrowthGrammar};
use nalgebra::{Isometry3, Matrix3, Point3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;

fn unit_cube() -> Mesh {
    build_box(&Aabb::from_center_extent(Vector3::zeros(), Vector3::repeat(1.0)), 0.0).unwrap()
}

#[test]
fn aabb_examples() {
    let b = compute_aabb(&unit_cube()).unwrap();
    assert_eq!(b.min, Vector3::repeat(-0.5));
    assert_eq!(b.max, Vector3::repeat(0.5));

    let single = Mesh {
        vertices: vec![Vector3::new(1.0, 2.0, 3.0)],
        ..Mesh::default()
    };
    let b = compute_aabb(&single).unwrap();
    assert_eq!((b.min, b.max), (Vector3::new(1.0, 2.0, 3.0), Vector3::new(1.0, 2.0, 3.0)));

    let mut rng = SeededStream::new(4);
    let cloud = Mesh {
        vertices: (0..1000)
            .map(|_| Vector3::new(rng.uniform(-5.0, 5.0), rng.uniform(-1.0, 3.0), rng.uniform(0.0, 9.0)))
            .collect(),
        ..Mesh::default()
    };
    let b = compute_aabb(&cloud).unwrap();
    for axis in 0..3 {
        let lo = cloud.vertices.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
        let hi = cloud.vertices.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((b.min[axis], b.max[axis]), (lo, hi));
    }
    assert!(compute_aabb(&Mesh::default()).is_err());
}

fn outward(m: &Mesh) -> bool {
    let c = m.vertices.iter().sum::<Vector3<f64>>() / m.vertices.len() as f64;
    m.faces.iter().all(|f| {
        let (a, b, d) = (m.vertices[f[0] as usize], m.vertices[f[1] as usize], m.vertices[f[2] as usize]);
        (b - a).cross(&(d - a)).dot(&((a + b + d) / 3.0 - c)) > 0.0
    })
}

#[test]
fn orientation_repair() {
    let cube = unit_cube();
    assert_eq!(recompute_normals(&cube).unwrap().faces, cube.faces);

    let mut flipped = cube.clone();
    for f in flipped.faces.iter_mut().step_by(4).take(3) {
        f.swap(1, 2);
    }
    assert!(!outward(&flipped));
    let fixed = recompute_normals(&flipped).unwrap();
    assert!(outward(&fixed));
    assert!((fixed.signed_volume() - 1.0).abs() < 1e-12);
    assert!(fixed.normals.iter().all(|n| (n.norm() - 1.0).abs() < 1e-6));

    let lathe = build_lathe(&[[0.5, 0.0], [0.5, 1.0]], 64).unwrap();
    let mut rng = SeededStream::new(9);
    let mut noisy = lathe.clone();
    for f in &mut noisy.faces {
        if rng.bernoulli(0.5) {
            f.swap(1, 2);
        }
    }
    let repaired = recompute_normals(&noisy).unwrap();
    assert!((repaired.signed_volume() - lathe.signed_volume()).abs() <= 1e-12);
}

#[test]
fn handle_mounts_recover_doubled_scale() {
    let lib = AssetLibrary::load(&default_data_dir().join("assets")).unwrap();
    assert!(lib.entries.len() >= 8);
    let handle = lib.entries.iter().find(|e| e.id == "bar_handle_long").unwrap();
    let mounts: Vec<Vector3<f64>> = handle
        .support_points
        .iter()
        .filter(|(name, _)| name.starts_with("mount"))
        .map(|(_, p)| *p)
        .collect();
    assert_eq!(mounts.len(), 2);
    // Drawer front at x = 0.45, handle centred at (y, z) = (0.1, 0.6).
    let place = |p: &Vector3<f64>| p * 2.0 + Vector3::new(0.45, 0.1, 0.6);
    let targets: Vec<_> = mounts.iter().map(place).collect();
    let al = align_support_points(&handle.mesh, &mounts, &targets).unwrap();
    assert!((al.transform.scale - 2.0).abs() <= 1e-9);
    assert!(al.rms <= 1e-9);
    for (p, q) in mounts.iter().zip(&targets) {
        assert!((al.transform.apply(p) - q).norm() <= 1e-9);
    }
}

#[test]
fn library_assets_are_valid() {
    let lib = AssetLibrary::load(&default_data_dir().join("assets")).unwrap();
    for e in &lib.entries {
        e.mesh.validate().unwrap();
        assert!(e.mesh.is_closed() && e.mesh.signed_volume() > 0.0, "{}", e.id);
        let grown = e.canonical_bbox.inflate(0.01 * e.canonical_bbox.extent().max());
        assert!(!e.support_points.is_empty());
        for (_, p) in &e.support_points {
            assert!(grown.contains_point(p, 0.0), "{}", e.id);
        }
    }
}

#[test]
fn layout_places_children_inside_their_regions() {
    let mut checked = 0;
    for cat in list_categories(&default_data_dir()) {
        let dir = default_data_dir();
        let g = GrowthGrammar::load(&dir.join(format!("{cat}.grammar"))).unwrap();
        let layout = LayoutTemplate::load(&dir.join(format!("{cat}.layout"))).unwrap();
        let rules = JointRuleTable::load(&dir.join(format!("{cat}.joints"))).unwrap();
        for seed in 0..50 {
            let t = grow_tree(&g, &mut SeededStream::new(seed)).unwrap();
            let t = assign_joint_kinds(&canonicalize(&t), &rules).unwrap();
            let placed = assign_bounding_boxes(&t, &layout, &mut SeededStream::new(seed)).unwrap();
            for (n, region) in placed.regions.iter().enumerate() {
                let node = &placed.tree.nodes[n];
                if node.label.is_dummy() {
                    continue;
                }
                let bbox = node.bbox.expect("every real node has a box");
                assert!(bbox.is_valid());
                if let Some(r) = region {
                    assert!(r.contains_box(&bbox, 1e-9), "{cat} seed {seed} node {n}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000, "{checked} boxes checked");
}

#[test]
fn generated_meshes_satisfy_mesh_invariants() {
    for cat in list_categories(&default_data_dir()) {
        let data = CategoryData::load(&default_data_dir(), &cat).unwrap();
        for i in 0..10 {
            let t = build_articulated(&data, &SeededStream::for_object(1, i)).unwrap();
            for (key, m) in &t.meshes {
                m.validate().unwrap_or_else(|e| panic!("{cat}_{i} {key}: {e}"));
                assert!(m.faces.iter().flatten().all(|&k| (k as usize) < m.vertices.len()));
                assert!(m.normals.iter().all(|n| (n.norm() - 1.0).abs() <= 1e-6));
                assert!(m.signed_volume() > 0.0);
            }
        }
    }
}

fn axis_rotation(i: usize) -> Matrix3<f64> {
    artigen::geometry::axis_rotations()[i % 24]
}

proptest! {
    #[test]
    fn aabb_contains_transformed_vertices(
        axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        angle in -3.2f64..3.2,
        shift in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
        bevel in 0.0f64..0.1,
    ) {
        let mesh = build_box(&Aabb::new(Vector3::new(-0.3, -0.2, 0.0), Vector3::new(0.4, 0.6, 0.5)), bevel).unwrap();
        let rot = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(axis.0, axis.1, axis.2)), angle);
        let pose = Isometry3::from_parts(Translation3::new(shift.0, shift.1, shift.2), rot);
        let moved = mesh.transformed(&pose);
        let b = compute_aabb(&moved).unwrap();
        for v in &mesh.vertices {
            prop_assert!(b.contains_point(&(pose * Point3::from(*v)).coords, 1e-12));
        }
        prop_assert!(compute_aabb(&mesh).unwrap().transformed(&pose).contains_box(&b, 1e-12));
    }

    #[test]
    fn exact_support_sets_align(rot in 0usize..24, scale in 0.1f64..10.0, k in 3usize..8, seed in any::<u64>()) {
        let mut rng = SeededStream::new(seed);
        let src: Vec<Vector3<f64>> = (0..k).map(|_| Vector3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))).collect();
        let r = axis_rotation(rot);
        let t = Vector3::new(0.3, -0.7, 1.1);
        let dst: Vec<_> = src.iter().map(|p| r * p * scale + t).collect();
        let al = align_support_points(&unit_cube(), &src, &dst).unwrap();
        prop_assert!(al.rms <= 1e-6);
    }
}
