//! C ABI over `spectral-augment`.
//!
//! Graphs and plans cross the boundary as opaque handles that the caller
//! releases with the matching `*_free` function. Every fallible call returns
//! an [`SaStatus`]; on failure [`sa_last_error_message`] describes the error
//! for the calling thread. Strings returned through `char **` out-parameters
//! are owned by the caller and released with [`sa_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spectral_augment::augment::{
    initialize_plan, pgd_optimize, project_budget, sample_view, spectral_change_loss, Mode,
    PerturbationPlan, PgdConfig,
};
use spectral_augment::community::{community_change_ratio, spectral_clustering, CommunityAssignment};
use spectral_augment::graph::{generate_er, generate_rpg, parse_edge_list, Graph, RpgParams};
use spectral_augment::spectral::graph_spectrum;
use spectral_augment::verify::{run_verify, Suite};
use spectral_augment::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    InvalidGraph = 5,
    InvalidPlan = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaMode {
    EdgeDrop = 0,
    EdgeAdd = 1,
    NodeDrop = 2,
    FeatureMask = 3,
}

impl From<SaMode> for Mode {
    fn from(m: SaMode) -> Self {
        match m {
            SaMode::EdgeDrop => Mode::EdgeDrop,
            SaMode::EdgeAdd => Mode::EdgeAdd,
            SaMode::NodeDrop => Mode::NodeDrop,
            SaMode::FeatureMask => Mode::FeatureMask,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaSuite {
    All = 0,
    Theorems = 1,
    Gradients = 2,
    Sampling = 3,
}

/// Opaque graph handle.
pub struct SaGraph(Graph);

/// Opaque perturbation plan handle.
pub struct SaPlan(PerturbationPlan);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SaStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => SaStatus::Parse,
        Error::InvalidGraph(_) | Error::MissingFeatures => SaStatus::InvalidGraph,
        Error::InconsistentPlan(_)
        | Error::InfeasiblePlan(_)
        | Error::MaskMismatch { .. }
        | Error::DuplicateFlip(..) => SaStatus::InvalidPlan,
        Error::Asymmetric(_) | Error::NoConvergence { .. } | Error::Degenerate(_) | Error::ZeroVolume(_) => {
            SaStatus::Numerical
        }
        Error::Io(_) => SaStatus::Io,
        _ => SaStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), (SaStatus, String)>>(f: F) -> SaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SaStatus::Panic
        }
    }
}

fn lib<T>(r: Result<T, Error>) -> Result<T, (SaStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SaStatus, String) {
    (SaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (SaStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (SaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SaStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (SaStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (SaStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s)
        .map_err(|_| (SaStatus::InvalidArgument, "string contains nul".into()))?
        .into_raw();
    Ok(())
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], (SaStatus, String)> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (SaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn sa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a graph from JSON (`{"n", "edges", "features"?, "labels"?}`).
#[no_mangle]
pub unsafe extern "C" fn sa_graph_from_json(json: *const c_char, out: *mut *mut SaGraph) -> SaStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let (g, _) = lib(Graph::from_json(text))?;
        write_out(out, SaGraph(g))
    })
}

/// Parses a graph from the `n m` header plus `i j [w]` lines format.
#[no_mangle]
pub unsafe extern "C" fn sa_graph_from_edge_list(text: *const c_char, out: *mut *mut SaGraph) -> SaStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        write_out(out, SaGraph(lib(parse_edge_list(text))?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_graph_to_json(g: *const SaGraph, out: *mut *mut c_char) -> SaStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        write_string(out, g.0.to_json(None))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_graph_free(g: *mut SaGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sa_graph_num_nodes(g: *const SaGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

#[no_mangle]
pub unsafe extern "C" fn sa_graph_num_edges(g: *const SaGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Random partition graph. `labels_out` may be NULL; otherwise it must hold
/// `num_class * nodes_per_class` entries.
#[no_mangle]
pub unsafe extern "C" fn sa_generate_rpg(
    num_class: usize,
    nodes_per_class: usize,
    homophily: f64,
    avg_degree: f64,
    seed: u64,
    out: *mut *mut SaGraph,
    labels_out: *mut usize,
) -> SaStatus {
    guard(|| {
        let (g, labels) = lib(generate_rpg(&RpgParams {
            num_class,
            nodes_per_class,
            homophily,
            avg_degree,
            seed,
        }))?;
        if !labels_out.is_null() {
            out_slice(labels_out, labels.len(), "labels_out")?.copy_from_slice(&labels);
        }
        write_out(out, SaGraph(g))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_generate_er(n: usize, p: f64, seed: u64, out: *mut *mut SaGraph) -> SaStatus {
    guard(|| write_out(out, SaGraph(lib(generate_er(n, p, seed))?)))
}

/// The `k` lowest normalized-Laplacian eigenvalues into `eigenvalues_out`
/// and, unless NULL, the eigenvectors row-major (`n x k`) into
/// `eigenvectors_out`.
#[no_mangle]
pub unsafe extern "C" fn sa_graph_spectrum(
    g: *const SaGraph,
    k: usize,
    eigenvalues_out: *mut f64,
    eigenvectors_out: *mut f64,
) -> SaStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let sp = lib(graph_spectrum(&g.0, k))?;
        out_slice(eigenvalues_out, k, "eigenvalues_out")?.copy_from_slice(sp.eigenvalues.as_slice());
        if !eigenvectors_out.is_null() {
            let n = g.0.n();
            let dst = out_slice(eigenvectors_out, n * k, "eigenvectors_out")?;
            for i in 0..n {
                for c in 0..k {
                    dst[i * k + c] = sp.eigenvectors[(i, c)];
                }
            }
        }
        Ok(())
    })
}

/// Uniform plan: every support entry at `min(1, budget / |support|)`.
#[no_mangle]
pub unsafe extern "C" fn sa_plan_uniform(
    g: *const SaGraph,
    mode: SaMode,
    budget: f64,
    out: *mut *mut SaPlan,
) -> SaStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        write_out(out, SaPlan(lib(PerturbationPlan::uniform(&g.0, mode.into(), budget))?))
    })
}

/// Spectral-change-optimized plan: seeded initialization followed by
/// `iters` projected gradient steps of size `eta`.
#[no_mangle]
pub unsafe extern "C" fn sa_plan_optimize(
    g: *const SaGraph,
    mode: SaMode,
    budget: f64,
    k: usize,
    eta: f64,
    iters: usize,
    seed: u64,
    out: *mut *mut SaPlan,
) -> SaStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let start = lib(initialize_plan(&g.0, mode.into(), budget, k, 0.2, seed))?;
        let cfg = PgdConfig {
            eta,
            iters,
            k,
            ..Default::default()
        };
        let res = lib(pgd_optimize(&g.0, &start, &cfg))?;
        write_out(out, SaPlan(res.plan))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_plan_from_json(json: *const c_char, out: *mut *mut SaPlan) -> SaStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        write_out(out, SaPlan(lib(PerturbationPlan::from_json(text))?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_plan_to_json(p: *const SaPlan, out: *mut *mut c_char) -> SaStatus {
    guard(|| {
        let p = handle(p, "plan")?;
        write_string(out, p.0.to_json())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_plan_free(p: *mut SaPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Support size, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn sa_plan_len(p: *const SaPlan) -> usize {
    p.as_ref().map_or(0, |p| p.0.len())
}

/// Copies `min(len, support size)` plan values into `out`.
#[no_mangle]
pub unsafe extern "C" fn sa_plan_values(p: *const SaPlan, out: *mut f64, len: usize) -> SaStatus {
    guard(|| {
        let p = handle(p, "plan")?;
        let m = len.min(p.0.len());
        out_slice(out, m, "out")?.copy_from_slice(&p.0.values[..m]);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_plan_loss(g: *const SaGraph, p: *const SaPlan, k: usize, out: *mut f64) -> SaStatus {
    guard(|| {
        let (g, p) = (handle(g, "graph")?, handle(p, "plan")?);
        lib(p.0.validate(&g.0))?;
        let loss = lib(spectral_change_loss(&g.0, &p.0, k))?;
        *out_slice(out, 1, "out")?.first_mut().expect("one slot") = loss;
        Ok(())
    })
}

/// Gumbel-samples a mask from the plan and returns the augmented graph.
#[no_mangle]
pub unsafe extern "C" fn sa_plan_sample(
    g: *const SaGraph,
    p: *const SaPlan,
    tau: f64,
    seed: u64,
    out: *mut *mut SaGraph,
) -> SaStatus {
    guard(|| {
        let (g, p) = (handle(g, "graph")?, handle(p, "plan")?);
        lib(p.0.validate(&g.0))?;
        let view = lib(sample_view(&g.0, &p.0, tau, seed))?;
        write_out(out, SaGraph(view.graph))
    })
}

/// Spectral clustering into `k` clusters; `labels_out` holds one entry per node.
#[no_mangle]
pub unsafe extern "C" fn sa_spectral_clustering(
    g: *const SaGraph,
    k: usize,
    seed: u64,
    labels_out: *mut usize,
) -> SaStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let a = lib(spectral_clustering(&g.0, k, seed))?;
        out_slice(labels_out, a.labels.len(), "labels_out")?.copy_from_slice(&a.labels);
        Ok(())
    })
}

/// Fraction of nodes whose label changes after optimally aligning `after`
/// to `before`; labels must lie in `[0, k)`.
#[no_mangle]
pub unsafe extern "C" fn sa_community_change_ratio(
    before: *const usize,
    after: *const usize,
    n: usize,
    k: usize,
    out: *mut f64,
) -> SaStatus {
    guard(|| {
        let a = lib(CommunityAssignment::new(in_slice(before, n, "before")?.to_vec(), k))?;
        let b = lib(CommunityAssignment::new(in_slice(after, n, "after")?.to_vec(), k))?;
        *out_slice(out, 1, "out")?.first_mut().expect("one slot") = lib(community_change_ratio(&a, &b))?;
        Ok(())
    })
}

/// Projection onto `{s in [0,1]^len : sum(s) <= budget}`; `out` may alias
/// `values`.
#[no_mangle]
pub unsafe extern "C" fn sa_project_budget(values: *const f64, len: usize, budget: f64, out: *mut f64) -> SaStatus {
    guard(|| {
        let v = in_slice(values, len, "values")?.to_vec();
        if !(budget >= 0.0) {
            return Err((SaStatus::InvalidArgument, format!("budget {budget} must be >= 0")));
        }
        out_slice(out, len, "out")?.copy_from_slice(&project_budget(&v, budget));
        Ok(())
    })
}

/// Runs a self-check suite; `passed_out` receives the overall verdict.
#[no_mangle]
pub unsafe extern "C" fn sa_verify(suite: SaSuite, seed: u64, passed_out: *mut bool) -> SaStatus {
    guard(|| {
        let suite = match suite {
            SaSuite::All => Suite::All,
            SaSuite::Theorems => Suite::Theorems,
            SaSuite::Gradients => Suite::Gradients,
            SaSuite::Sampling => Suite::Sampling,
        };
        *out_slice(passed_out, 1, "passed_out")?.first_mut().expect("one slot") = run_verify(suite, seed).overall;
        Ok(())
    })
}
