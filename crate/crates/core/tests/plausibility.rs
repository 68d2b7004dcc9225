use std::collections::BTreeMap;
use std::f64::consts::PI;

use artigen::geometry::{build_box, compute_aabb, Aabb};
use artigen::joints::{forward_kinematics, rest_poses, JointKind, JointSpec};
use artigen::pipeline::{build_articulated, default_data_dir, generate_object, list_categories, CategoryData};
use artigen::plausibility::{
    ground_clearance_fix, insert_gap, insert_gaps, lowest_point, motion_sweep_check, GapOutcome, GroundFixPolicy,
    GroundRepair, ViolationKind, SWEEP_TOLERANCE,
};
use artigen::rng::SeededStream;
use artigen::tree::{ArticulationTree, JointSlot, SemanticLabel};
use nalgebra::{Point3, Vector3};

const BAR_LEN: f64 = 1.0;
const BAR_HALF: f64 = 0.02;

/// Unit box on the ground with a bar hinged about +y at `(1, 0, h)`. At angle
/// θ the bar's lowest corner sits at `h + L cos θ - t sin θ`.
fn hinged_bar(h: f64, limits: (f64, f64)) -> ArticulationTree {
    let mut t = ArticulationTree::with_root("box", SemanticLabel::new("box", "body"));
    let body = Aabb::new(Vector3::zeros(), Vector3::repeat(1.0));
    t.meshes.insert("body".into(), build_box(&body, 0.0).unwrap());
    t.nodes[0].mesh_ref = Some("body".into());
    t.nodes[0].bbox = Some(body);
    let joint = JointSpec::at(JointKind::Revolute, Vector3::new(1.0, 0.0, h), Vector3::y(), Some(limits));
    let bar = t.add_child(0, SemanticLabel::new("box", "lid"), JointSlot::Simple(joint));
    let local = Aabb::new(Vector3::new(-BAR_HALF, -0.3, 0.0), Vector3::new(BAR_HALF, 0.3, BAR_LEN));
    t.meshes.insert("bar".into(), build_box(&local, 0.0).unwrap());
    t.nodes[bar].mesh_ref = Some("bar".into());
    t.nodes[bar].bbox = Some(local.translated(&Vector3::new(1.0, 0.0, h)));
    t
}

fn bar_min_z(h: f64, theta: f64) -> f64 {
    let t = hinged_bar(h, (0.0, PI));
    let poses = forward_kinematics(&t, &BTreeMap::from([(1, theta)])).unwrap();
    t.mesh_of(1)
        .unwrap()
        .vertices
        .iter()
        .map(|v| (poses[1] * Point3::from(*v)).z)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn limit_clamp_matches_dense_scan() {
    // Ground contact begins exactly at 2.0 rad.
    let h = -(BAR_LEN * 2.0f64.cos() - BAR_HALF * 2.0f64.sin());
    let tree = hinged_bar(h, (0.0, PI));
    let (fixed, repair) = ground_clearance_fix(&tree, GroundFixPolicy::LimitClamp, 16).unwrap();
    let GroundRepair::LimitsClamped(changes) = &repair else {
        panic!("expected clamped limits, got {repair:?}");
    };
    assert_eq!(changes.len(), 1);
    let (lo, hi) = fixed.joint(1).unwrap().limits.unwrap();
    assert_eq!(lo, 0.0);
    assert!((2.0 - 1e-3..=2.0).contains(&hi), "upper limit {hi}");

    let first_bad = (0..10_000)
        .map(|i| PI * i as f64 / 9_999.0)
        .find(|&th| bar_min_z(h, th) < -SWEEP_TOLERANCE)
        .unwrap();
    assert!(hi <= first_bad && first_bad - hi <= 1e-3, "clamp {hi}, scan {first_bad}");

    assert!(motion_sweep_check(&fixed, 16).unwrap().passed());
    assert_eq!(rest_poses(&fixed).unwrap(), rest_poses(&tree).unwrap());
}

#[test]
fn base_insert_lifts_by_the_dip() {
    let r = BAR_LEN.hypot(BAR_HALF);
    let tree = hinged_bar(r - 0.05, (0.0, PI));
    assert!((lowest_point(&tree, 16).unwrap() + 0.05).abs() < 1e-9);
    assert!(!motion_sweep_check(&tree, 16).unwrap().passed());
    let (fixed, repair) = ground_clearance_fix(&tree, GroundFixPolicy::BaseInsert, 16).unwrap();
    let GroundRepair::BaseInserted { height } = repair else {
        panic!("expected a base, got {repair:?}");
    };
    assert!(height >= 0.05);
    assert_eq!(fixed.len(), tree.len() + 1);
    assert!(lowest_point(&fixed, 16).unwrap() >= -SWEEP_TOLERANCE);
    let report = motion_sweep_check(&fixed, 16).unwrap();
    assert!(report.violations.iter().all(|v| v.kind != ViolationKind::GroundPenetration));
}

#[test]
fn clear_object_is_unchanged() {
    let tree = hinged_bar(0.5, (0.0, 1.0));
    for policy in [GroundFixPolicy::BaseInsert, GroundFixPolicy::LimitClamp] {
        let (fixed, repair) = ground_clearance_fix(&tree, policy, 16).unwrap();
        assert_eq!(repair, GroundRepair::Unchanged);
        assert_eq!(fixed, tree);
    }
}

#[test]
fn mesh_below_ground_is_unfixable_by_clamping() {
    let tree = hinged_bar(-0.5, (0.0, 1.0));
    assert!(ground_clearance_fix(&tree, GroundFixPolicy::LimitClamp, 16).is_err());
}

#[test]
fn repair_is_idempotent() {
    for (policy, h) in [(GroundFixPolicy::BaseInsert, 0.3), (GroundFixPolicy::LimitClamp, 0.6)] {
        let tree = hinged_bar(h, (0.0, PI));
        let (once, _) = ground_clearance_fix(&tree, policy, 16).unwrap();
        let (twice, repair) = ground_clearance_fix(&once, policy, 16).unwrap();
        assert_eq!(repair, GroundRepair::Unchanged);
        let (a, b) = (rest_poses(&once).unwrap(), rest_poses(&twice).unwrap());
        for (p, q) in a.iter().zip(&b) {
            assert!((p.to_homogeneous() - q.to_homogeneous()).abs().max() <= 1e-9);
        }
        assert_eq!(once, twice);
    }
}

#[test]
fn static_box_passes_and_sunken_box_reports_depth() {
    let mut t = ArticulationTree::with_root("box", SemanticLabel::new("box", "body"));
    t.meshes.insert("m".into(), build_box(&Aabb::new(Vector3::zeros(), Vector3::repeat(1.0)), 0.0).unwrap());
    t.nodes[0].mesh_ref = Some("m".into());
    assert!(motion_sweep_check(&t, 16).unwrap().passed());
    t.meshes.insert(
        "m".into(),
        build_box(&Aabb::new(Vector3::new(0.0, 0.0, -0.1), Vector3::new(1.0, 1.0, 0.9)), 0.0).unwrap(),
    );
    let r = motion_sweep_check(&t, 16).unwrap();
    assert_eq!(r.violations.len(), 1);
    assert_eq!(r.violations[0].kind, ViolationKind::GroundPenetration);
    assert!((r.violations[0].depth - 0.1).abs() < 1e-12);
}

#[test]
fn gap_skips_fixed_edges_and_keeps_topology() {
    let data = CategoryData::load(&default_data_dir(), "cabinet").unwrap();
    for i in 0..10 {
        let tree = build_articulated(&data, &SeededStream::for_object(2, i)).unwrap();
        for n in 0..tree.len() {
            let fixed = tree.joint(n).is_none_or(|j| j.kind == JointKind::Fixed);
            let (after, outcome) = insert_gap(&tree, n).unwrap();
            if fixed {
                assert_eq!(outcome, GapOutcome::NotArticulated);
                assert_eq!(after, tree);
            }
        }
        let (after, applied) = insert_gaps(&tree).unwrap();
        let articulated = (0..tree.len()).filter(|&n| tree.joint(n).is_some_and(|j| j.kind != JointKind::Fixed)).count();
        assert_eq!(applied.len(), articulated);
        assert_eq!(after.parent, tree.parent);
        assert_eq!(after.edge_joint, tree.edge_joint);
        for (key, m) in &tree.meshes {
            let g = &after.meshes[key];
            assert_eq!(g.faces, m.faces);
            assert_eq!(g.vertices.len(), m.vertices.len());
        }
        for &n in &applied {
            let before = compute_aabb(tree.mesh_of(n).unwrap()).unwrap();
            let after = compute_aabb(after.mesh_of(n).unwrap()).unwrap();
            assert!((after.center() - before.center()).norm() < 1e-12);
        }
    }
}

#[test]
fn reported_violations_reproduce_under_kinematics() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/broken_dishwasher/object.urdf");
    let tree = artigen::export::parse_urdf(std::path::Path::new(path)).unwrap().tree;
    let report = motion_sweep_check(&tree, 16).unwrap();
    assert!(!report.passed());
    for v in &report.violations {
        let poses = forward_kinematics(&tree, &v.config).unwrap();
        match v.kind {
            ViolationKind::GroundPenetration => {
                let n = v.nodes[0];
                let z = tree
                    .mesh_of(n)
                    .unwrap()
                    .vertices
                    .iter()
                    .map(|p| (poses[n] * Point3::from(*p)).z)
                    .fold(f64::INFINITY, f64::min);
                assert!(-z > SWEEP_TOLERANCE);
                assert!((-z - v.depth).abs() < 1e-12);
            }
            ViolationKind::PartInterpenetration => {
                let boxes: Vec<_> = v
                    .nodes
                    .iter()
                    .map(|&n| artigen::geometry::Obb::from_aabb(&compute_aabb(tree.mesh_of(n).unwrap()).unwrap(), &poses[n]))
                    .collect();
                assert!(boxes[0].penetration(&boxes[1]) > SWEEP_TOLERANCE);
            }
        }
    }
}

#[test]
fn pipeline_output_passes_sweep_in_every_category() {
    for cat in list_categories(&default_data_dir()) {
        let data = CategoryData::load(&default_data_dir(), &cat).unwrap();
        for i in 0..20 {
            let obj = generate_object(&data, 99, i, 16).unwrap();
            assert!(motion_sweep_check(&obj.tree, 16).unwrap().passed(), "{cat}_{i}");
        }
    }
}
