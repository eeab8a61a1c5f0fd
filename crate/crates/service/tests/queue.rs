mod support;

use std::time::Duration;

use netplan_core::report::{ReportRequest, Role, WeekRange};
use netplan_core::solver::SolverOptions;
use netplan_service::store::{new_run_id, now_rfc3339, sha256_hex, JobState, RunRecord, Store};
use netplan_service::{Service, ServiceError};
use support::{open, wait_terminal, SMALL_CONFIG};

const WAIT: Duration = Duration::from_secs(60);

#[test]
fn submitted_run_completes_with_plan() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(dir.path());
    let rec = svc.submit(Some(SMALL_CONFIG.as_bytes()), SolverOptions::default()).unwrap();
    assert_eq!(rec.state, JobState::Queued);
    let done = wait_terminal(&svc, &rec.id, WAIT);
    assert_eq!(done.state, JobState::Done);
    assert_eq!(done.note.as_deref(), Some("optimal"));
    assert!(done.plan.unwrap().total_units > 0.0);
}

#[test]
fn submit_without_active_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(dir.path());
    assert!(matches!(svc.submit(None, SolverOptions::default()), Err(ServiceError::NoConfig)));
    svc.store().put_config(SMALL_CONFIG.as_bytes()).unwrap().unwrap();
    let rec = svc.submit(None, SolverOptions::default()).unwrap();
    assert_eq!(rec.config_version, Some(1));
    let bad = SMALL_CONFIG.replace("\"horizon\": [1, 2, 3, 4]", "\"horizon\": []");
    assert!(matches!(svc.submit(Some(bad.as_bytes()), SolverOptions::default()), Err(ServiceError::InvalidConfig(_))));
    let opts = SolverOptions { time_limit_secs: 0.0, ..SolverOptions::default() };
    assert!(matches!(svc.submit(None, opts), Err(ServiceError::InvalidOptions(_))));
}

#[test]
fn jobs_run_one_at_a_time_in_submission_order() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(dir.path());
    svc.pause();
    let ids: Vec<String> =
        (0..4).map(|_| svc.submit(Some(SMALL_CONFIG.as_bytes()), SolverOptions::default()).unwrap().id).collect();
    assert_eq!(svc.queue_depth(), 4);
    svc.resume();
    let recs: Vec<RunRecord> = ids.iter().map(|id| wait_terminal(&svc, id, WAIT)).collect();
    assert_eq!(svc.max_concurrent_solves(), 1);
    for pair in recs.windows(2) {
        assert!(pair[0].finished_at.as_ref().unwrap() <= pair[1].started_at.as_ref().unwrap());
    }
    assert_eq!(svc.queue_depth(), 0);
}

fn stranded(state: JobState) -> RunRecord {
    RunRecord {
        id: new_run_id(),
        created_at: now_rfc3339(),
        started_at: (state == JobState::Running).then(now_rfc3339),
        finished_at: None,
        state,
        note: None,
        config_hash: sha256_hex(SMALL_CONFIG.as_bytes()),
        config_version: None,
        config: SMALL_CONFIG.to_string(),
        options: SolverOptions::default(),
        plan: None,
    }
}

#[test]
fn unfinished_runs_resume_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (running, queued) = (stranded(JobState::Running), stranded(JobState::Queued));
    {
        let store = Store::open(dir.path()).unwrap();
        store.put_run(&running).unwrap();
        store.put_run(&queued).unwrap();
    }
    let svc = open(dir.path());
    for id in [&running.id, &queued.id] {
        assert_eq!(wait_terminal(&svc, id, WAIT).state, JobState::Done);
    }
    svc.shutdown();
    let svc = Service::open(dir.path(), None).unwrap();
    assert_eq!(svc.get_run(&running.id).unwrap().state, JobState::Done);
    assert_eq!(svc.completed_runs(), 0);
}

#[test]
fn reports_are_cached_per_request() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(dir.path());
    let id = svc.submit(Some(SMALL_CONFIG.as_bytes()), SolverOptions::default()).unwrap().id;
    wait_terminal(&svc, &id, WAIT);
    let req = ReportRequest::new(&id);
    let (first, hit) = svc.report(Role::Analyst, &req).unwrap();
    assert!(!hit);
    let (second, hit) = svc.report(Role::Analyst, &req).unwrap();
    assert!(hit);
    assert_eq!(first.to_text(), second.to_text());
    let narrowed = ReportRequest { weeks: Some(WeekRange { from: 2, to: 3 }), ..req.clone() };
    assert!(!svc.report(Role::Analyst, &narrowed).unwrap().1);
    assert!(!svc.report(Role::Manager, &req).unwrap().1);
}

#[test]
fn report_on_unfinished_run_is_not_ready() {
    let dir = tempfile::tempdir().unwrap();
    let svc = open(dir.path());
    svc.pause();
    let id = svc.submit(Some(SMALL_CONFIG.as_bytes()), SolverOptions::default()).unwrap().id;
    assert!(matches!(svc.report(Role::Analyst, &ReportRequest::new(&id)), Err(ServiceError::NotReady(_))));
    assert!(matches!(svc.report(Role::Analyst, &ReportRequest::new("missing")), Err(ServiceError::RunNotFound(_))));
    svc.resume();
}
