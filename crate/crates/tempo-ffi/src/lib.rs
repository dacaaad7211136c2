//! C ABI for the tempo DatalogMTL reasoner.
//!
//! The surface follows the usual C library conventions: an opaque engine
//! handle, integer status codes, a thread-local buffer holding the detail of
//! the most recent failure, and explicit free functions for everything the
//! library allocates. The header in `include/tempo.h` is generated from this
//! file at build time.
//!
//! All text crosses the boundary as NUL-terminated UTF-8. Returned strings
//! are owned by the caller and must be released with [`tempo_string_free`];
//! the pointer from [`tempo_last_error`] is borrowed and only valid on the
//! calling thread until the next library call from that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tempo_core::engine::{answer_query, EngineConfig, EngineError, Entailed};
use tempo_core::magic::{magic_rewrite, MagicError};
use tempo_core::parser::{
    parse_dataset_with, parse_program_with, parse_query_with, ArityTable, ProgramFile,
};
use tempo_core::syntax::{strip_zero_ops, Dataset, Program};

/// Status of a call. Anything other than `Ok` leaves a human-readable
/// explanation in [`tempo_last_error`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TempoStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// An input string was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A program, dataset, or query failed to parse.
    ParseError = 3,
    /// The program or dataset is unbounded, so entailment is undecidable
    /// by materialisation and the query was refused.
    UnboundedInput = 4,
    /// The magic rewriting rejected the program/query combination.
    RewriteError = 5,
}

/// Outcome of a query.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TempoAnswer {
    /// A fixpoint certified that the fact is not entailed.
    No = 0,
    /// The fact is entailed.
    Yes = 1,
    /// The round cap ran out before either answer was certified.
    Unknown = 2,
}

/// An engine holds a parsed program, the facts loaded so far, and the
/// predicate arity table they were checked against.
pub struct TempoEngine {
    arities: ArityTable,
    program: Program,
    dataset: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: TempoStatus, message: String) -> TempoStatus {
    let owned = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").expect("no NUL"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
    status
}

fn magic_status(e: &MagicError) -> TempoStatus {
    match e {
        MagicError::UnboundedInput => TempoStatus::UnboundedInput,
        _ => TempoStatus::RewriteError,
    }
}

fn engine_status(e: &EngineError) -> TempoStatus {
    match e {
        EngineError::Magic(m) => magic_status(m),
    }
}

/// Borrows a required C-string argument.
///
/// # Safety
/// `p` must be NULL or point to a NUL-terminated buffer.
unsafe fn text_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, TempoStatus> {
    if p.is_null() {
        return Err(fail(TempoStatus::NullArgument, format!("{what} is NULL")));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(TempoStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn tempo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Detail of the most recent failure on this thread, or NULL if no call has
/// failed yet. Borrowed; valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn tempo_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `program_text` (rules, optionally embedded facts) and returns a
/// new engine through `out_engine`. On failure `*out_engine` is NULL.
///
/// # Safety
/// `program_text` must be NULL or NUL-terminated; `out_engine` must be NULL
/// or valid for a single pointer write.
#[no_mangle]
pub unsafe extern "C" fn tempo_engine_new(
    program_text: *const c_char,
    out_engine: *mut *mut TempoEngine,
) -> TempoStatus {
    if out_engine.is_null() {
        return fail(TempoStatus::NullArgument, "out_engine is NULL".to_string());
    }
    unsafe { *out_engine = ptr::null_mut() };
    let text = match unsafe { text_arg(program_text, "program_text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    let mut arities = ArityTable::new();
    let file = match parse_program_with(text, &mut arities) {
        Ok(f) => f,
        Err(e) => return fail(TempoStatus::ParseError, e.to_string()),
    };
    let engine = Box::new(TempoEngine { arities, program: file.program, dataset: file.facts });
    unsafe { *out_engine = Box::into_raw(engine) };
    TempoStatus::Ok
}

/// Releases an engine. NULL is a no-op.
///
/// # Safety
/// `engine` must be NULL or a pointer from [`tempo_engine_new`] that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn tempo_engine_free(engine: *mut TempoEngine) {
    if !engine.is_null() {
        drop(unsafe { Box::from_raw(engine) });
    }
}

/// Parses `facts_text` as a dataset and adds the facts to the engine.
/// Predicates must agree in arity with every earlier load.
///
/// # Safety
/// `engine` must be a live engine pointer; `facts_text` must be NULL or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn tempo_engine_add_facts(
    engine: *mut TempoEngine,
    facts_text: *const c_char,
) -> TempoStatus {
    let Some(engine) = (unsafe { engine.as_mut() }) else {
        return fail(TempoStatus::NullArgument, "engine is NULL".to_string());
    };
    let text = match unsafe { text_arg(facts_text, "facts_text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    match parse_dataset_with(text, &mut engine.arities) {
        Ok(d) => {
            for fact in d.facts() {
                engine.dataset.push(fact.clone());
            }
            TempoStatus::Ok
        }
        Err(e) => fail(TempoStatus::ParseError, e.to_string()),
    }
}

/// Number of facts currently loaded (after deduplication).
///
/// # Safety
/// `engine` must be NULL or a live engine pointer; `out_count` must be NULL
/// or valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn tempo_engine_fact_count(
    engine: *const TempoEngine,
    out_count: *mut usize,
) -> TempoStatus {
    let Some(engine) = (unsafe { engine.as_ref() }) else {
        return fail(TempoStatus::NullArgument, "engine is NULL".to_string());
    };
    if out_count.is_null() {
        return fail(TempoStatus::NullArgument, "out_count is NULL".to_string());
    }
    unsafe { *out_count = engine.dataset.facts().len() };
    TempoStatus::Ok
}

/// Answers a ground query such as `P(a)@10` or `P(a)@[2,5]` using the
/// goal-directed (magic) route. `max_rounds` caps the derivation rounds;
/// pass 0 for the default of 1000. `Unknown` means the cap ran out.
///
/// # Safety
/// `engine` must be a live engine pointer; `query_text` must be NULL or
/// NUL-terminated; `out_answer` must be NULL or valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn tempo_engine_query(
    engine: *mut TempoEngine,
    query_text: *const c_char,
    max_rounds: usize,
    out_answer: *mut TempoAnswer,
) -> TempoStatus {
    let Some(engine) = (unsafe { engine.as_mut() }) else {
        return fail(TempoStatus::NullArgument, "engine is NULL".to_string());
    };
    if out_answer.is_null() {
        return fail(TempoStatus::NullArgument, "out_answer is NULL".to_string());
    }
    let text = match unsafe { text_arg(query_text, "query_text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    let query = match parse_query_with(text, &mut engine.arities) {
        Ok(q) => q,
        Err(e) => return fail(TempoStatus::ParseError, e.to_string()),
    };
    let cfg = EngineConfig {
        max_rounds: if max_rounds == 0 { 1000 } else { max_rounds },
        ..EngineConfig::default()
    };
    match answer_query(&engine.program, &engine.dataset, &query, &cfg) {
        Ok(answer) => {
            let out = match answer.entailed {
                Entailed::Yes => TempoAnswer::Yes,
                Entailed::NoCertified => TempoAnswer::No,
                Entailed::Unknown => TempoAnswer::Unknown,
            };
            unsafe { *out_answer = out };
            TempoStatus::Ok
        }
        Err(e) => fail(engine_status(&e), e.to_string()),
    }
}

/// Produces the magic rewriting of the loaded program for `query_text`:
/// the rewritten rules followed by the loaded facts and the magic seed, in
/// the same text format the parser accepts. The result is written to
/// `*out_text` as a NUL-terminated string owned by the caller; release it
/// with [`tempo_string_free`].
///
/// # Safety
/// `engine` must be a live engine pointer; `query_text` must be NULL or
/// NUL-terminated; `out_text` must be NULL or valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn tempo_engine_rewrite(
    engine: *mut TempoEngine,
    query_text: *const c_char,
    out_text: *mut *mut c_char,
) -> TempoStatus {
    let Some(engine) = (unsafe { engine.as_mut() }) else {
        return fail(TempoStatus::NullArgument, "engine is NULL".to_string());
    };
    if out_text.is_null() {
        return fail(TempoStatus::NullArgument, "out_text is NULL".to_string());
    }
    unsafe { *out_text = ptr::null_mut() };
    let text = match unsafe { text_arg(query_text, "query_text") } {
        Ok(t) => t,
        Err(status) => return status,
    };
    let query = match parse_query_with(text, &mut engine.arities) {
        Ok(q) => q,
        Err(e) => return fail(TempoStatus::ParseError, e.to_string()),
    };
    match magic_rewrite(&engine.program, &engine.dataset, &query) {
        Ok((rewrite, extended)) => {
            let file = ProgramFile { program: strip_zero_ops(&rewrite.program), facts: extended };
            let owned =
                CString::new(file.to_string()).expect("rendered programs never contain NUL");
            unsafe { *out_text = owned.into_raw() };
            TempoStatus::Ok
        }
        Err(e) => fail(magic_status(&e), e.to_string()),
    }
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a pointer returned by this library that has not been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn tempo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
