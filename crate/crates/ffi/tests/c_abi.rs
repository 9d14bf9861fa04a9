use std::ffi::{CStr, CString};
use std::ptr;

use spectral_augment_ffi::*;

fn last_error() -> String {
    let p = sa_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn graph(text: &str) -> *mut SaGraph {
    let c = CString::new(text).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(sa_graph_from_edge_list(c.as_ptr(), &mut g), SaStatus::Ok);
    g
}

#[test]
fn graph_roundtrip_through_json() {
    unsafe {
        let g = graph("3 3\n0 1\n1 2\n0 2 0.5\n");
        assert_eq!(sa_graph_num_nodes(g), 3);
        assert_eq!(sa_graph_num_edges(g), 3);
        let mut s = ptr::null_mut();
        assert_eq!(sa_graph_to_json(g, &mut s), SaStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(sa_graph_from_json(s, &mut h), SaStatus::Ok);
        assert_eq!(sa_graph_num_edges(h), 3);
        sa_string_free(s);
        sa_graph_free(g);
        sa_graph_free(h);
    }
}

#[test]
fn parse_error_sets_message() {
    unsafe {
        let c = CString::new("2 1\n0 0\n").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(sa_graph_from_edge_list(c.as_ptr(), &mut g), SaStatus::Parse);
        assert!(g.is_null());
        assert!(last_error().contains("line 2"));
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(sa_graph_from_json(ptr::null(), &mut g), SaStatus::NullPointer);
        assert_eq!(sa_graph_num_nodes(ptr::null()), 0);
        sa_graph_free(ptr::null_mut());
        sa_plan_free(ptr::null_mut());
        sa_string_free(ptr::null_mut());
    }
}

#[test]
fn spectrum_of_triangle() {
    unsafe {
        let g = graph("3 3\n0 1\n1 2\n0 2\n");
        let mut vals = [0.0; 3];
        let mut vecs = [0.0; 9];
        assert_eq!(sa_graph_spectrum(g, 3, vals.as_mut_ptr(), vecs.as_mut_ptr()), SaStatus::Ok);
        assert!(vals[0].abs() < 1e-12);
        assert!((vals[1] - 1.5).abs() < 1e-12 && (vals[2] - 1.5).abs() < 1e-12);
        assert_eq!(
            sa_graph_spectrum(g, 4, vals.as_mut_ptr(), ptr::null_mut()),
            SaStatus::InvalidArgument
        );
        sa_graph_free(g);
    }
}

#[test]
fn optimize_sample_and_cluster() {
    unsafe {
        let mut g = ptr::null_mut();
        let mut labels = vec![0usize; 60];
        assert_eq!(sa_generate_rpg(3, 20, 0.95, 4.0, 1, &mut g, labels.as_mut_ptr()), SaStatus::Ok);
        let m = sa_graph_num_edges(g);
        let mut plan = ptr::null_mut();
        let budget = 0.2 * m as f64;
        assert_eq!(
            sa_plan_optimize(g, SaMode::EdgeDrop, budget, 3, 0.1, 5, 0, &mut plan),
            SaStatus::Ok
        );
        assert_eq!(sa_plan_len(plan), m);
        let mut values = vec![0.0; m];
        assert_eq!(sa_plan_values(plan, values.as_mut_ptr(), m), SaStatus::Ok);
        assert!(values.iter().sum::<f64>() <= budget + 1e-9);
        let mut loss = -1.0;
        assert_eq!(sa_plan_loss(g, plan, 3, &mut loss), SaStatus::Ok);
        assert!(loss >= 0.0);

        let mut view = ptr::null_mut();
        assert_eq!(sa_plan_sample(g, plan, 0.1, 7, &mut view), SaStatus::Ok);
        assert!(sa_graph_num_edges(view) <= m);

        let (mut a, mut b) = (vec![0usize; 60], vec![0usize; 60]);
        assert_eq!(sa_spectral_clustering(g, 3, 0, a.as_mut_ptr()), SaStatus::Ok);
        assert_eq!(sa_spectral_clustering(view, 3, 0, b.as_mut_ptr()), SaStatus::Ok);
        let mut ratio = -1.0;
        assert_eq!(
            sa_community_change_ratio(a.as_ptr(), b.as_ptr(), 60, 3, &mut ratio),
            SaStatus::Ok
        );
        assert!((0.0..=1.0).contains(&ratio));

        let mut text = ptr::null_mut();
        assert_eq!(sa_plan_to_json(plan, &mut text), SaStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(sa_plan_from_json(text, &mut again), SaStatus::Ok);
        assert_eq!(sa_plan_len(again), m);
        sa_string_free(text);
        sa_plan_free(again);
        sa_plan_free(plan);
        sa_graph_free(view);
        sa_graph_free(g);
    }
}

#[test]
fn feature_mask_without_features_fails() {
    unsafe {
        let g = graph("2 1\n0 1\n");
        let mut plan = ptr::null_mut();
        assert_eq!(sa_plan_uniform(g, SaMode::FeatureMask, 1.0, &mut plan), SaStatus::InvalidGraph);
        assert!(plan.is_null());
        sa_graph_free(g);
    }
}

#[test]
fn projection_in_place() {
    unsafe {
        let mut v = [0.5, 0.5];
        let p = v.as_mut_ptr();
        assert_eq!(sa_project_budget(p, 2, 0.6, p), SaStatus::Ok);
        assert!((v[0] - 0.3).abs() < 1e-11 && (v[1] - 0.3).abs() < 1e-11);
        assert_eq!(sa_project_budget(p, 2, -1.0, p), SaStatus::InvalidArgument);
    }
}

#[test]
fn change_ratio_rejects_bad_labels() {
    unsafe {
        let a = [0usize, 1, 2];
        let mut r = 0.0;
        assert_eq!(
            sa_community_change_ratio(a.as_ptr(), a.as_ptr(), 3, 2, &mut r),
            SaStatus::InvalidArgument
        );
    }
}

#[test]
fn sampling_suite_passes() {
    unsafe {
        let mut ok = false;
        assert_eq!(sa_verify(SaSuite::Sampling, 0, &mut ok), SaStatus::Ok);
        assert!(ok);
    }
}
