//! Exercises the C ABI exactly as a C caller would: through raw pointers,
//! status codes, and the free functions.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use tempo_ffi::{
    tempo_engine_add_facts, tempo_engine_fact_count, tempo_engine_free, tempo_engine_new,
    tempo_engine_query, tempo_engine_rewrite, tempo_last_error, tempo_string_free, tempo_version,
    TempoAnswer, TempoEngine, TempoStatus,
};

const PROGRAM: &str = "\
boxplus[0,2] P(X) :- I(X,Y), P(Y).
boxplus[0,1] P(X) :- I(X,Y), diamondminus[0,1] P(Y).
I(arthur,beatrice)@9.
";

fn c(text: &str) -> CString {
    CString::new(text).expect("test strings contain no NUL")
}

unsafe fn last_error() -> String {
    let p = tempo_last_error();
    assert!(!p.is_null(), "a failing call must record an error");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_static_semver_string() {
    let p = tempo_version();
    assert!(!p.is_null());
    let v = unsafe { CStr::from_ptr(p) }.to_str().expect("UTF-8");
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn full_session_load_query_rewrite() {
    unsafe {
        let mut engine: *mut TempoEngine = ptr::null_mut();
        assert_eq!(tempo_engine_new(c(PROGRAM).as_ptr(), &mut engine), TempoStatus::Ok);
        assert!(!engine.is_null());

        let mut count = 0usize;
        assert_eq!(tempo_engine_fact_count(engine, &mut count), TempoStatus::Ok);
        assert_eq!(count, 1, "the program file embeds one fact");

        assert_eq!(tempo_engine_add_facts(engine, c("P(beatrice)@9\n").as_ptr()), TempoStatus::Ok);
        assert_eq!(tempo_engine_fact_count(engine, &mut count), TempoStatus::Ok);
        assert_eq!(count, 2);

        let mut answer = TempoAnswer::Unknown;
        assert_eq!(
            tempo_engine_query(engine, c("P(arthur)@10").as_ptr(), 0, &mut answer),
            TempoStatus::Ok
        );
        assert_eq!(answer, TempoAnswer::Yes);

        assert_eq!(
            tempo_engine_query(engine, c("P(arthur)@12").as_ptr(), 0, &mut answer),
            TempoStatus::Ok
        );
        assert_eq!(answer, TempoAnswer::No);

        let mut text: *mut c_char = ptr::null_mut();
        assert_eq!(
            tempo_engine_rewrite(engine, c("P(arthur)@10").as_ptr(), &mut text),
            TempoStatus::Ok
        );
        let rendered = CStr::from_ptr(text).to_str().expect("UTF-8").to_string();
        tempo_string_free(text);
        assert!(rendered.contains("m_P_b(Y) :- diamondplus[0,2] m_P_b(X), I(X,Y)."), "{rendered}");
        assert!(rendered.contains("m_P_b(arthur)@10"), "{rendered}");

        // The rewriting output must itself load as a program file.
        let mut second: *mut TempoEngine = ptr::null_mut();
        assert_eq!(tempo_engine_new(c(&rendered).as_ptr(), &mut second), TempoStatus::Ok);
        tempo_engine_free(second);

        tempo_engine_free(engine);
    }
}

#[test]
fn tight_round_cap_reports_unknown() {
    unsafe {
        let mut engine: *mut TempoEngine = ptr::null_mut();
        assert_eq!(tempo_engine_new(c(PROGRAM).as_ptr(), &mut engine), TempoStatus::Ok);
        assert_eq!(tempo_engine_add_facts(engine, c("P(beatrice)@9").as_ptr()), TempoStatus::Ok);
        let mut answer = TempoAnswer::Yes;
        assert_eq!(
            tempo_engine_query(engine, c("P(carol)@10").as_ptr(), 1, &mut answer),
            TempoStatus::Ok
        );
        assert_eq!(answer, TempoAnswer::Unknown, "one round cannot certify a 'no'");
        tempo_engine_free(engine);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        // NULL arguments.
        assert_eq!(tempo_engine_new(c("P(a)@1").as_ptr(), ptr::null_mut()), {
            TempoStatus::NullArgument
        });
        let mut engine: *mut TempoEngine = ptr::null_mut();
        assert_eq!(tempo_engine_new(ptr::null(), &mut engine), TempoStatus::NullArgument);
        assert!(engine.is_null());
        assert!(last_error().contains("program_text"));

        // Parse error with a useful message.
        assert_eq!(tempo_engine_new(c("P(X) :- .").as_ptr(), &mut engine), TempoStatus::ParseError);
        assert!(engine.is_null());
        assert!(!last_error().is_empty());

        // Arity clash across loads.
        assert_eq!(tempo_engine_new(c("P(X) :- E(X).").as_ptr(), &mut engine), TempoStatus::Ok);
        assert_eq!(tempo_engine_add_facts(engine, c("E(a,b)@1").as_ptr()), TempoStatus::ParseError);
        assert!(last_error().contains("arguments"), "{}", last_error());

        // Invalid UTF-8.
        let bad = [0xffu8, 0xfe, 0x00];
        assert_eq!(
            tempo_engine_add_facts(engine, bad.as_ptr() as *const c_char),
            TempoStatus::InvalidUtf8
        );

        // An unbounded dataset: querying is refused, while the plain
        // rewriting (a syntactic transformation) still goes through.
        assert_eq!(tempo_engine_add_facts(engine, c("E(a)@[0,+inf)").as_ptr()), TempoStatus::Ok);
        let mut answer = TempoAnswer::Yes;
        assert_eq!(
            tempo_engine_query(engine, c("P(a)@1").as_ptr(), 0, &mut answer),
            TempoStatus::UnboundedInput
        );
        assert!(last_error().contains("bounded"), "{}", last_error());
        let mut text: *mut c_char = ptr::null_mut();
        assert_eq!(tempo_engine_rewrite(engine, c("P(a)@1").as_ptr(), &mut text), TempoStatus::Ok);
        assert!(!text.is_null());
        tempo_string_free(text);

        tempo_engine_free(engine);
        tempo_engine_free(ptr::null_mut());
        tempo_string_free(ptr::null_mut());
    }
}
