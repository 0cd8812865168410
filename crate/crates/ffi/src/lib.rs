//! C interface to in2v-core.
//!
//! Objects are opaque handles created by `*_new`/`*_load` style functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`In2vStatus`]; on failure [`in2v_last_error`] describes the problem for
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use in2v_core::extend::extend;
use in2v_core::{EmbeddingMatrix, ExtendConfig, Graph, In2vError, SplitAssignment, TrainConfig};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum In2vStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    DegenerateInput = 5,
    Numerical = 6,
    Panic = 7,
}

/// Undirected graph in compressed sparse row form.
pub struct In2vGraph {
    inner: Graph,
}

/// Dense row-major embedding matrix.
pub struct In2vEmbedding {
    inner: EmbeddingMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &In2vError) -> In2vStatus {
    match e {
        In2vError::Parse { .. } | In2vError::Json { .. } | In2vError::Csv(_) => In2vStatus::Parse,
        In2vError::Io { .. } | In2vError::MissingArtifact { .. } => In2vStatus::Io,
        In2vError::DegenerateInput(_) => In2vStatus::DegenerateInput,
        In2vError::NumericalOverflow(_) => In2vStatus::Numerical,
        _ => In2vStatus::InvalidArgument,
    }
}

struct Fail(In2vStatus, String);

impl From<In2vError> for Fail {
    fn from(e: In2vError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(In2vStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> In2vStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            In2vStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            In2vStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(In2vStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Parses optional JSON; a null pointer means the type's defaults.
unsafe fn json_arg<T: serde::de::DeserializeOwned + Default>(p: *const c_char, what: &str) -> Result<T, Fail> {
    if p.is_null() {
        return Ok(T::default());
    }
    serde_json::from_str(str_arg(p, what)?).map_err(|e| Fail(In2vStatus::Parse, format!("{what}: {e}")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn in2v_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn in2v_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `num_nodes` nodes from `num_edges` pairs `(src[i], dst[i])`.
///
/// # Safety
/// `src` and `dst` must point to `num_edges` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn in2v_graph_from_edges(
    num_nodes: usize,
    src: *const u64,
    dst: *const u64,
    num_edges: usize,
    out: *mut *mut In2vGraph,
) -> In2vStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let src = slice_arg(src, num_edges, "src")?;
        let dst = slice_arg(dst, num_edges, "dst")?;
        let edges: Vec<(usize, usize)> = src.iter().zip(dst).map(|(&a, &b)| (a as usize, b as usize)).collect();
        let g = Graph::from_edges(num_nodes, &edges)?;
        *out = Box::into_raw(Box::new(In2vGraph { inner: g }));
        Ok(())
    })
}

/// Reads a whitespace-separated edge list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn in2v_graph_load(path: *const c_char, out: *mut *mut In2vGraph) -> In2vStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = Graph::load_edge_list(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(In2vGraph { inner: g }));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn in2v_graph_num_nodes(g: *const In2vGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.num_nodes())
}

/// Number of stored adjacency entries (each undirected edge counts twice).
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn in2v_graph_num_directed_edges(g: *const In2vGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.directed_edge_count())
}

/// # Safety
/// `g` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn in2v_graph_free(g: *mut In2vGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Copies a row-major `rows x dim` matrix into a new embedding.
///
/// # Safety
/// `data` must point to `rows * dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_from_data(
    rows: usize,
    dim: usize,
    data: *const f64,
    out: *mut *mut In2vEmbedding,
) -> In2vStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let len = rows
            .checked_mul(dim)
            .ok_or_else(|| Fail(In2vStatus::InvalidArgument, "rows * dim overflows".into()))?;
        let data = slice_arg(data, len, "data")?;
        let e = EmbeddingMatrix::from_vec(rows, dim, data.to_vec())?;
        *out = Box::into_raw(Box::new(In2vEmbedding { inner: e }));
        Ok(())
    })
}

/// Reads a binary embedding file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_load(path: *const c_char, out: *mut *mut In2vEmbedding) -> In2vStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let e = EmbeddingMatrix::load(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(In2vEmbedding { inner: e }));
        Ok(())
    })
}

/// Writes the binary embedding format (values stored as f32).
///
/// # Safety
/// `e` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_save(e: *const In2vEmbedding, path: *const c_char) -> In2vStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("embedding"))?;
        e.inner.save(str_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_rows(e: *const In2vEmbedding) -> usize {
    e.as_ref().map_or(0, |e| e.inner.rows())
}

/// # Safety
/// `e` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_dim(e: *const In2vEmbedding) -> usize {
    e.as_ref().map_or(0, |e| e.inner.dim())
}

/// Copies the row-major values into `out`, which must hold `rows * dim` doubles.
///
/// # Safety
/// `e` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_copy(e: *const In2vEmbedding, out: *mut f64, len: usize) -> In2vStatus {
    guard(|| {
        let e = e.as_ref().ok_or_else(|| null("embedding"))?;
        let src = e.inner.values();
        if len != src.len() {
            return Err(Fail(
                In2vStatus::InvalidArgument,
                format!("buffer holds {len} values, embedding has {}", src.len()),
            ));
        }
        if out.is_null() && len > 0 {
            return Err(null("out"));
        }
        if len > 0 {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(src);
        }
        Ok(())
    })
}

/// # Safety
/// `e` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn in2v_embedding_free(e: *mut In2vEmbedding) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Trains node2vec embeddings on `g`. `config_json` is a training config
/// document or null for defaults; `seed` replaces its seed.
///
/// # Safety
/// `g` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn in2v_train(
    g: *const In2vGraph,
    config_json: *const c_char,
    seed: u64,
    out: *mut *mut In2vEmbedding,
) -> In2vStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let mut cfg: TrainConfig = json_arg(config_json, "config_json")?;
        cfg.seed = seed;
        let outcome = in2v_core::train(&g.inner, &cfg)?;
        *out = Box::into_raw(Box::new(In2vEmbedding { inner: outcome.embedding }));
        Ok(())
    })
}

/// Extends embeddings of the training nodes to all of `g`.
///
/// `train_emb` row `i` belongs to the `i`-th smallest id in `train_nodes`.
/// `config_json` selects the method (`in2v`, `feature_propagation`, `matmul`)
/// and its parameters; null means post-hoc extension with lambda 1, delay 0.
///
/// # Safety
/// Handles must be live; `train_nodes` must point to `num_train` values.
#[no_mangle]
pub unsafe extern "C" fn in2v_extend(
    g: *const In2vGraph,
    train_emb: *const In2vEmbedding,
    train_nodes: *const u64,
    num_train: usize,
    config_json: *const c_char,
    out: *mut *mut In2vEmbedding,
) -> In2vStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let e = train_emb.as_ref().ok_or_else(|| null("train_emb"))?;
        let nodes: Vec<usize> = slice_arg(train_nodes, num_train, "train_nodes")?
            .iter()
            .map(|&v| v as usize)
            .collect();
        let cfg: ExtendConfig = json_arg(config_json, "config_json")?;
        let (_, mapping) = g.inner.induced_subgraph(&nodes)?;
        let (h, _) = extend(&e.inner, &g.inner, &mapping, &cfg)?;
        *out = Box::into_raw(Box::new(In2vEmbedding { inner: h }));
        Ok(())
    })
}

pub const IN2V_ROLE_TRAIN: u8 = 0;
pub const IN2V_ROLE_VAL: u8 = 1;
pub const IN2V_ROLE_TEST: u8 = 2;

/// Writes the role of every node (`IN2V_ROLE_*`) of a seeded random split.
///
/// # Safety
/// `roles` must point to `num_nodes` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn in2v_split(
    num_nodes: usize,
    train_fraction: f64,
    seed: u64,
    roles: *mut u8,
) -> In2vStatus {
    guard(|| {
        if roles.is_null() && num_nodes > 0 {
            return Err(null("roles"));
        }
        let s = SplitAssignment::generate(num_nodes, train_fraction, seed)?;
        if num_nodes == 0 {
            return Ok(());
        }
        let roles = std::slice::from_raw_parts_mut(roles, num_nodes);
        for (set, role) in [(&s.train, IN2V_ROLE_TRAIN), (&s.val, IN2V_ROLE_VAL), (&s.test, IN2V_ROLE_TEST)] {
            for &v in set {
                roles[v] = role;
            }
        }
        Ok(())
    })
}
