//! C interface to visfocus.
//!
//! Objects cross the boundary as opaque handles. The caller owns every
//! handle it receives and releases it with the matching `*_free` function;
//! strings returned by the library are released with [`vf_string_free`].
//! Fallible calls return a [`VfStatus`], and the message for the most recent
//! failure on the calling thread is available from [`vf_last_error`].
//!
//! States are byte arrays with one entry per region, nonzero meaning the
//! region is preserved. A list of `count` states is `count * regions` bytes,
//! one state after another.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use image::RgbImage;
use visfocus::analysis::{self, AnalysisError, MetricFlag, Provenance};
use visfocus::composer::ComposeError;
use visfocus::logic::LogicError;
use visfocus::predictor::{Label, PredictError};
use visfocus::refine::{BeamScope, CandidateOrder, RefineError, DEFAULT_MAX_QUERIES};
use visfocus::regions::{GroundTruthMaskSet, RegionsError};
use visfocus::{
    BehaviorClass, BehaviorThresholds, FillPolicy, FinalStateSet, LogicExpr, Predictor, Probe,
    RefinementConfig, RegionPartition, Scene, StateVector,
};

/// Bytes available to a predictor callback for its label, NUL included.
pub const VF_LABEL_CAPACITY: usize = 256;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Predictor = 4,
    /// The query budget ran out; any result handle holds a partial set.
    Budget = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfBehavior {
    Holistic = 0,
    Compositional = 1,
    Narrow = 2,
    Distracted = 3,
    Misled = 4,
    Unclassified = 5,
}

impl From<BehaviorClass> for VfBehavior {
    fn from(b: BehaviorClass) -> Self {
        match b {
            BehaviorClass::Holistic => VfBehavior::Holistic,
            BehaviorClass::Compositional => VfBehavior::Compositional,
            BehaviorClass::Narrow => VfBehavior::Narrow,
            BehaviorClass::Distracted => VfBehavior::Distracted,
            BehaviorClass::Misled => VfBehavior::Misled,
            BehaviorClass::Unclassified => VfBehavior::Unclassified,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfCandidateOrder {
    LargestAreaFirst = 0,
    AscendingIndex = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfBeamScope {
    Round = 0,
    Parent = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfFillMode {
    Constant = 0,
    Mean = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfThresholds {
    pub precision_high: f64,
    pub recall_high: f64,
    pub divergence_high: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfMetrics {
    pub precision: f64,
    pub recall: f64,
    pub divergence: f64,
    pub behavior: VfBehavior,
    /// Some state preserved nothing; its precision term counted as 0.
    pub empty_focus_state: bool,
    /// The ground-truth state was empty; recall is 0.
    pub no_ground_truth_match: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VfRefineOptions {
    /// Children kept per state; 0 means unlimited.
    pub beam_size: usize,
    pub beam_scope: VfBeamScope,
    pub candidate_order: VfCandidateOrder,
    pub max_queries: u64,
    pub fill_mode: VfFillMode,
    /// Used when `fill_mode` is constant.
    pub fill_rgb: [u8; 3],
    /// Pass composed pixels to the callback. When false the callback gets
    /// only the state and `rgb` is null.
    pub render_images: bool,
}

/// Answers one probe.
///
/// `state` holds `regions` bytes. `rgb` is the composed image as
/// `width * height * 3` bytes, or null when rendering is off. Write a
/// NUL-terminated UTF-8 label of at most `label_capacity` bytes into `label`
/// and return 0; any other return value aborts the search.
pub type VfPredictFn = Option<
    unsafe extern "C" fn(
        user: *mut c_void,
        state: *const u8,
        regions: usize,
        rgb: *const u8,
        width: u32,
        height: u32,
        label: *mut c_char,
        label_capacity: usize,
    ) -> i32,
>;

pub struct VfPartition(RegionPartition);
pub struct VfExpr(LogicExpr);
pub struct VfFinalStates(FinalStateSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(VfStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(VfStatus::NullArgument, format!("{what} is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure(VfStatus::InvalidArgument, message.into())
    }
}

impl From<RegionsError> for Failure {
    fn from(e: RegionsError) -> Self {
        let status = match e {
            RegionsError::Read { .. } => VfStatus::Io,
            _ => VfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<LogicError> for Failure {
    fn from(e: LogicError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<ComposeError> for Failure {
    fn from(e: ComposeError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<RefineError> for Failure {
    fn from(e: RefineError) -> Self {
        let status = match e {
            RefineError::Predict(_) => VfStatus::Predictor,
            RefineError::BudgetExhausted { .. } => VfStatus::Budget,
            _ => VfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).ok();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VfStatus::Panic
        }
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    out.write(value);
    Ok(())
}

unsafe fn bytes<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn state_from(bits: &[u8]) -> StateVector {
    StateVector::from_bools(&bits.iter().map(|&b| b != 0).collect::<Vec<_>>())
}

unsafe fn states_from(
    states: *const u8,
    count: usize,
    regions: usize,
) -> Result<Vec<StateVector>, Failure> {
    let len = count
        .checked_mul(regions)
        .ok_or_else(|| Failure::invalid("state array size overflows"))?;
    let raw = bytes(states, len, "states")?;
    if regions == 0 {
        return Ok(vec![StateVector::empty(0); count]);
    }
    Ok(raw.chunks(regions).map(state_from).collect())
}

fn into_c_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Message for the most recent failure on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a single-channel label-map PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_load(
    path: *const c_char,
    out: *mut *mut VfPartition,
) -> VfStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::invalid("path is not UTF-8"))?;
        let p = visfocus::load_label_map(path)?;
        write_out(out, Box::into_raw(Box::new(VfPartition(p))))
    })
}

/// Builds a partition from `width * height` row-major label values. Zero
/// marks unsegmented pixels; other values are renumbered by first
/// appearance.
///
/// # Safety
/// `labels` must point to `width * height` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_from_labels(
    width: u32,
    height: u32,
    labels: *const u32,
    out: *mut *mut VfPartition,
) -> VfStatus {
    guard(|| {
        let raw = bytes(labels, width as usize * height as usize, "labels")?;
        let p = RegionPartition::from_raw_labels(width, height, raw)?;
        write_out(out, Box::into_raw(Box::new(VfPartition(p))))
    })
}

/// New partition with regions below `min_area_fraction`, and unsegmented
/// pixels, folded into one last region.
///
/// # Safety
/// `p` must be a live partition handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_merge(
    p: *const VfPartition,
    min_area_fraction: f64,
    out: *mut *mut VfPartition,
) -> VfStatus {
    guard(|| {
        let merged = handle(p, "partition")?
            .0
            .merge_small_regions(min_area_fraction)?;
        write_out(out, Box::into_raw(Box::new(VfPartition(merged))))
    })
}

/// # Safety
/// `p` must be null or a partition handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_free(p: *mut VfPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of regions, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live partition handle.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_region_count(p: *const VfPartition) -> usize {
    p.as_ref().map_or(0, |p| p.0.region_count())
}

/// # Safety
/// `p` must be a live partition handle; `width` and `height` writable.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_dimensions(
    p: *const VfPartition,
    width: *mut u32,
    height: *mut u32,
) -> VfStatus {
    guard(|| {
        let (w, h) = handle(p, "partition")?.0.dimensions();
        write_out(width, w)?;
        write_out(height, h)
    })
}

/// Area of region `region` (1-based) as a fraction of the image.
///
/// # Safety
/// `p` must be a live partition handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_area_fraction(
    p: *const VfPartition,
    region: u32,
    out: *mut f64,
) -> VfStatus {
    guard(|| {
        let p = &handle(p, "partition")?.0;
        let index = (region as usize)
            .checked_sub(1)
            .filter(|&i| i < p.region_count())
            .ok_or_else(|| Failure::invalid(format!("region {region} out of range")))?;
        write_out(out, p.area_fractions()[index])
    })
}

/// Ground-truth state from `mask_count` binary masks of the partition's
/// size, stored one after another (nonzero is foreground). Writes one byte
/// per region into `out_state`.
///
/// # Safety
/// `masks` must hold `mask_count * width * height` bytes and `out_state`
/// room for one byte per region.
#[no_mangle]
pub unsafe extern "C" fn vf_partition_ground_truth(
    p: *const VfPartition,
    masks: *const u8,
    mask_count: usize,
    iou_threshold: f64,
    out_state: *mut u8,
) -> VfStatus {
    guard(|| {
        let p = &handle(p, "partition")?.0;
        let (w, h) = p.dimensions();
        let pixels = w as usize * h as usize;
        let len = pixels
            .checked_mul(mask_count)
            .ok_or_else(|| Failure::invalid("mask array size overflows"))?;
        let raw = bytes(masks, len, "masks")?;
        let mut set = GroundTruthMaskSet::new(w, h);
        if pixels > 0 {
            for mask in raw.chunks(pixels) {
                set.push(mask.iter().map(|&b| b != 0).collect())?;
            }
        }
        let state = p.ground_truth_state(&set, iou_threshold)?;
        if out_state.is_null() {
            return Err(Failure::null("out_state"));
        }
        let out = slice::from_raw_parts_mut(out_state, p.region_count());
        for (i, b) in out.iter_mut().enumerate() {
            *b = state.contains(i) as u8;
        }
        Ok(())
    })
}

/// Factors a set of states into a logic expression.
///
/// # Safety
/// `states` must hold `count * regions` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_translate(
    states: *const u8,
    count: usize,
    regions: usize,
    out: *mut *mut VfExpr,
) -> VfStatus {
    guard(|| {
        let states = states_from(states, count, regions)?;
        let expr = visfocus::translate(&states)?;
        write_out(out, Box::into_raw(Box::new(VfExpr(expr))))
    })
}

/// Text form such as `I1 & (I2 | I3)`. Free with [`vf_string_free`].
///
/// # Safety
/// `e` must be null or a live expression handle.
#[no_mangle]
pub unsafe extern "C" fn vf_expr_render(e: *const VfExpr) -> *mut c_char {
    match e.as_ref() {
        Some(e) => into_c_string(e.0.render()),
        None => {
            set_error("expression is null");
            ptr::null_mut()
        }
    }
}

/// JSON tree form. Free with [`vf_string_free`].
///
/// # Safety
/// `e` must be null or a live expression handle.
#[no_mangle]
pub unsafe extern "C" fn vf_expr_to_json(e: *const VfExpr) -> *mut c_char {
    match e.as_ref() {
        Some(e) => into_c_string(serde_json::to_string(&e.0).expect("expression serializes")),
        None => {
            set_error("expression is null");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `e` must be a live expression handle, `state` must hold `regions` bytes
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_expr_eval(
    e: *const VfExpr,
    state: *const u8,
    regions: usize,
    out: *mut bool,
) -> VfStatus {
    guard(|| {
        let e = &handle(e, "expression")?.0;
        let state = state_from(bytes(state, regions, "state")?);
        write_out(out, e.eval(&state)?)
    })
}

/// # Safety
/// `e` must be null or an expression handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vf_expr_free(e: *mut VfExpr) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

#[no_mangle]
pub extern "C" fn vf_thresholds_default() -> VfThresholds {
    let t = BehaviorThresholds::default();
    VfThresholds {
        precision_high: t.precision_high,
        recall_high: t.recall_high,
        divergence_high: t.divergence_high,
    }
}

unsafe fn thresholds_from(t: *const VfThresholds) -> BehaviorThresholds {
    match t.as_ref() {
        Some(t) => BehaviorThresholds {
            precision_high: t.precision_high,
            recall_high: t.recall_high,
            divergence_high: t.divergence_high,
        },
        None => BehaviorThresholds::default(),
    }
}

/// Classifies a metric triple. A null `thresholds` uses the defaults.
///
/// # Safety
/// `thresholds` must be null or point to a valid value.
#[no_mangle]
pub unsafe extern "C" fn vf_classify(
    precision: f64,
    recall: f64,
    divergence: f64,
    thresholds: *const VfThresholds,
) -> VfBehavior {
    analysis::classify(precision, recall, divergence, &thresholds_from(thresholds)).into()
}

/// Precision, recall and divergence of `count` final states against the
/// ground-truth state `gt`, plus the behavior class.
///
/// # Safety
/// `states` must hold `count * regions` bytes and `gt` `regions` bytes,
/// where `regions` is the partition's region count. `thresholds` may be
/// null; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vf_metrics(
    p: *const VfPartition,
    states: *const u8,
    count: usize,
    gt: *const u8,
    thresholds: *const VfThresholds,
    out: *mut VfMetrics,
) -> VfStatus {
    guard(|| {
        let p = &handle(p, "partition")?.0;
        let m = p.region_count();
        let states = states_from(states, count, m)?;
        let gt = state_from(bytes(gt, m, "gt")?);
        let provenance = Provenance {
            fill_mode: String::new(),
            beam_size: None,
            iou_threshold: 0.0,
        };
        let r = analysis::evaluate(&states, &gt, p, &thresholds_from(thresholds), &provenance)?;
        write_out(
            out,
            VfMetrics {
                precision: r.precision,
                recall: r.recall,
                divergence: r.divergence,
                behavior: r.behavior.into(),
                empty_focus_state: r.flags.contains(&MetricFlag::EmptyFocusState),
                no_ground_truth_match: r.flags.contains(&MetricFlag::NoGroundTruthMatch),
            },
        )
    })
}

#[no_mangle]
pub extern "C" fn vf_refine_options_default() -> VfRefineOptions {
    VfRefineOptions {
        beam_size: 0,
        beam_scope: VfBeamScope::Round,
        candidate_order: VfCandidateOrder::LargestAreaFirst,
        max_queries: DEFAULT_MAX_QUERIES,
        fill_mode: VfFillMode::Constant,
        fill_rgb: [128, 128, 128],
        render_images: true,
    }
}

struct CallbackPredictor {
    f: unsafe extern "C" fn(
        *mut c_void,
        *const u8,
        usize,
        *const u8,
        u32,
        u32,
        *mut c_char,
        usize,
    ) -> i32,
    user: *mut c_void,
    render: bool,
}

// The callback only ever runs on the thread that called `vf_refine`.
unsafe impl Send for CallbackPredictor {}
unsafe impl Sync for CallbackPredictor {}

impl Predictor for CallbackPredictor {
    fn predict(&self, probe: &Probe<'_>) -> Result<Label, PredictError> {
        let bits: Vec<u8> = probe.state.to_bools().into_iter().map(u8::from).collect();
        let image = if self.render {
            Some(probe.render()?)
        } else {
            None
        };
        let (rgb, w, h) = match &image {
            Some(img) => (img.as_raw().as_ptr(), img.width(), img.height()),
            None => (ptr::null(), 0, 0),
        };
        let mut label = [0 as c_char; VF_LABEL_CAPACITY];
        let code = unsafe {
            (self.f)(
                self.user,
                bits.as_ptr(),
                bits.len(),
                rgb,
                w,
                h,
                label.as_mut_ptr(),
                label.len(),
            )
        };
        if code != 0 {
            return Err(PredictError::Model(format!("callback returned {code}")));
        }
        if !label.contains(&0) {
            return Err(PredictError::Malformed(
                "label is not NUL-terminated".into(),
            ));
        }
        let text = unsafe { CStr::from_ptr(label.as_ptr()) }
            .to_str()
            .map_err(|_| PredictError::Malformed("label is not UTF-8".into()))?;
        Label::new(text).map_err(|e| PredictError::Malformed(e.to_string()))
    }
}

/// Finds the final states of an image under a callback model.
///
/// `rgb` is the image as `width * height * 3` bytes matching the partition.
/// A null `options` uses [`vf_refine_options_default`]. On
/// [`VfStatus::Budget`] `*out` still receives the partial result.
///
/// # Safety
/// All pointers must be valid as described; `user` is passed through to
/// `predict` untouched.
#[no_mangle]
pub unsafe extern "C" fn vf_refine(
    rgb: *const u8,
    p: *const VfPartition,
    predict: VfPredictFn,
    user: *mut c_void,
    options: *const VfRefineOptions,
    out: *mut *mut VfFinalStates,
) -> VfStatus {
    guard(|| {
        let p = &handle(p, "partition")?.0;
        let f = predict.ok_or_else(|| Failure::null("predict"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| vf_refine_options_default());
        let (w, h) = p.dimensions();
        let raw = bytes(rgb, w as usize * h as usize * 3, "rgb")?;
        let image = RgbImage::from_raw(w, h, raw.to_vec()).expect("buffer length matches");
        let fill = match opts.fill_mode {
            VfFillMode::Constant => FillPolicy::Constant(opts.fill_rgb),
            VfFillMode::Mean => FillPolicy::Mean,
        };
        let config = RefinementConfig {
            beam_size: (opts.beam_size > 0).then_some(opts.beam_size),
            beam_scope: match opts.beam_scope {
                VfBeamScope::Round => BeamScope::Round,
                VfBeamScope::Parent => BeamScope::Parent,
            },
            candidate_order: match opts.candidate_order {
                VfCandidateOrder::LargestAreaFirst => CandidateOrder::LargestAreaFirst,
                VfCandidateOrder::AscendingIndex => CandidateOrder::AscendingIndex,
            },
            max_queries: opts.max_queries,
        };
        let scene = Scene::new(&image, p, fill)?;
        let model = CallbackPredictor {
            f,
            user,
            render: opts.render_images,
        };
        match visfocus::refine(&scene, "ffi", &model, &config) {
            Ok(finals) => write_out(out, Box::into_raw(Box::new(VfFinalStates(finals)))),
            Err(RefineError::BudgetExhausted { limit, partial }) => {
                let message = RefineError::BudgetExhausted {
                    limit,
                    partial: partial.clone(),
                }
                .to_string();
                write_out(out, Box::into_raw(Box::new(VfFinalStates(*partial))))?;
                Err(Failure(VfStatus::Budget, message))
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Number of final states, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live final-state handle.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_count(f: *const VfFinalStates) -> usize {
    f.as_ref().map_or(0, |f| f.0.states().len())
}

/// # Safety
/// `f` must be null or a live final-state handle.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_region_count(f: *const VfFinalStates) -> usize {
    f.as_ref().map_or(0, |f| f.0.region_count())
}

/// # Safety
/// `f` must be null or a live final-state handle.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_query_count(f: *const VfFinalStates) -> u64 {
    f.as_ref().map_or(0, |f| f.0.query_count())
}

/// # Safety
/// `f` must be null or a live final-state handle.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_is_partial(f: *const VfFinalStates) -> bool {
    f.as_ref().is_some_and(|f| f.0.is_partial())
}

/// Copies state `index` into `out_bits`, one byte per region.
///
/// # Safety
/// `f` must be a live final-state handle and `out_bits` hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_get(
    f: *const VfFinalStates,
    index: usize,
    out_bits: *mut u8,
    len: usize,
) -> VfStatus {
    guard(|| {
        let f = &handle(f, "final states")?.0;
        let state = f
            .states()
            .get(index)
            .ok_or_else(|| Failure::invalid(format!("index {index} out of range")))?;
        if len != state.len() {
            return Err(Failure::invalid(format!(
                "buffer has {len} bytes, state has {}",
                state.len()
            )));
        }
        if out_bits.is_null() && len > 0 {
            return Err(Failure::null("out_bits"));
        }
        for i in 0..len {
            *out_bits.add(i) = state.contains(i) as u8;
        }
        Ok(())
    })
}

/// Label the model gave the full image. Free with [`vf_string_free`].
///
/// # Safety
/// `f` must be null or a live final-state handle.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_reference_label(f: *const VfFinalStates) -> *mut c_char {
    match f.as_ref() {
        Some(f) => into_c_string(f.0.reference_label().to_string()),
        None => {
            set_error("final states is null");
            ptr::null_mut()
        }
    }
}

/// Same JSON document the command-line tool writes. Free with
/// [`vf_string_free`].
///
/// # Safety
/// `f` must be null or a live final-state handle.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_to_json(f: *const VfFinalStates) -> *mut c_char {
    match f.as_ref() {
        Some(f) => into_c_string(f.0.to_json()),
        None => {
            set_error("final states is null");
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `f` must be null or a final-state handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vf_final_states_free(f: *mut VfFinalStates) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}
