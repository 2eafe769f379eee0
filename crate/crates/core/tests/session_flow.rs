mod common;

use ticoder_core::candidates::{CandidateRecord, RawCode, RawTest};
use ticoder_core::corpus::Problem;
use ticoder_core::matrix::build_matrix;
use ticoder_core::ranking::ResponseKind;
use ticoder_core::session::{oracle_respond, run_simulated};
use ticoder_core::{CandidateSet, Mode, PreparedProblem, Query, SessionState, Terminal, UserResponse};

fn first_missing() -> PreparedProblem {
    let header = "def find_First_Missing(array):";
    let problem = Problem {
        id: "mbpp/742".into(),
        intent: "Write a python function to find the smallest missing number from a sorted array.".into(),
        header: header.into(),
        prefix: String::new(),
        reference: format!("{header}\n    i = 0\n    while i in array:\n        i += 1\n    return i"),
        hidden_tests: vec!["assert find_First_Missing([0,1,2,3]) == 4".into()],
        entry_point: "find_First_Missing".into(),
    };
    let record = CandidateRecord {
        problem_id: problem.id.clone(),
        codes: vec![
            RawCode {
                id: 0,
                source: format!("{header}\n    for i, x in enumerate(array):\n        if i + 1 != x:\n            return i + 1\n    return len(array) + 1"),
            },
            RawCode {
                id: 1,
                source: format!("{header}\n    i = 0\n    while i in array:\n        i += 1\n    return i"),
            },
            RawCode {
                id: 2,
                source: format!("{header}\n    return max(array) + 1"),
            },
        ],
        tests: vec![RawTest {
            id: 0,
            assertion: "assert find_First_Missing([1,2,4,6])==3".into(),
        }],
    };
    let candidates = CandidateSet::build(&problem, &record).unwrap();
    let matrix = build_matrix(&candidates.codes, &candidates.tests, &problem, &common::limits(), common::sandbox()).unwrap();
    PreparedProblem {
        problem,
        candidates,
        matrix,
    }
}

#[test]
fn output_mode_corrects_expected_value() {
    let p = first_missing();
    // Only the enumerate variant returns 3.
    assert_eq!(p.matrix.pass_set(0), vec![0]);
    let test = p.test(0).unwrap();
    let answer = oracle_respond(&p.problem, test, Mode::Output, common::sandbox(), &common::limits()).unwrap();
    assert_eq!(
        answer,
        UserResponse::FailWithOutput {
            new_expected: "0".into()
        }
    );
    assert_eq!(
        oracle_respond(&p.problem, test, Mode::PassFail, common::sandbox(), &common::limits()).unwrap(),
        UserResponse::Fail
    );

    let mut s = SessionState::new(&p, Mode::Output, 1);
    assert_eq!(s.next_query(&p).unwrap(), Query::Test(0));
    s.apply_response(&p, 0, answer, common::sandbox(), &common::limits()).unwrap();
    let result = s.result(&p);
    assert_eq!(result.approved_tests, vec!["assert find_First_Missing([1,2,4,6]) == 0".to_string()]);
    assert_eq!(s.survivors.to_vec(), vec![1]);
    assert_eq!(result.ranked_codes, vec![1]);
}

#[test]
fn running_example_pass_fail_session() {
    let p = common::prepare_one("running_example.jsonl");
    let run = run_simulated(&p, Mode::PassFail, 3, common::sandbox(), &common::limits()).unwrap();
    // t1 fails for the reference, pruning c1; t2 then fails, pruning c2.
    let kinds: Vec<_> = run.state.transcript.iter().map(|e| (e.test_id, e.response)).collect();
    assert_eq!(kinds[0], (0, ResponseKind::Fail));
    assert_eq!(kinds[1], (1, ResponseKind::Fail));
    assert_eq!(run.history[0], vec![0, 1, 2]);
    assert_eq!(run.history[1], vec![1, 2]);
    assert_eq!(run.history[2], vec![2]);
    assert_eq!(run.result.ranked_codes, vec![2]);
}

#[test]
fn zero_count_queries_are_all_undefined() {
    let p = common::prepare_one("zero_count.jsonl");
    for mode in [Mode::PassFail, Mode::Output] {
        let run = run_simulated(&p, mode, 3, common::sandbox(), &common::limits()).unwrap();
        assert_eq!(run.state.transcript.len(), 3);
        assert!(run.state.transcript.iter().all(|e| e.response == ResponseKind::Undefined));
        assert_eq!(run.state.survivors.len(), 6);
        assert_eq!(run.state.terminal, Terminal::Exhausted);
    }
}
