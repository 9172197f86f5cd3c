use exec_tickets::analytics::{FormulaId, ValuationInputs};
use exec_tickets::harness::verify::{run_verify_with, standard_closed_form};
use exec_tickets::harness::{emit_report, exit_code, load_report, parse_config, render_report, Experiment, ReportFormat};
use exec_tickets::Result;

#[test]
fn corrupted_closed_form_fails_the_suite() {
    fn off_by_one_n(f: FormulaId, mut i: ValuationInputs) -> Result<f64> {
        if f == FormulaId::ExpectedTicketValue {
            i.n += 1.0;
        }
        standard_closed_form(f, i)
    }
    let cfg = parse_config("n = 16\nd = 0.02\ntrials = 1000\nreward = { kind = \"constant\", mean = 1 }\n").unwrap();
    cfg.validate(Experiment::Verify).unwrap();
    let good = run_verify_with(&cfg, standard_closed_form).unwrap();
    assert_eq!(exit_code(&good), 0);
    let bad = run_verify_with(&cfg, off_by_one_n).unwrap();
    assert_eq!(exit_code(&bad), 1);
    let failing: Vec<_> = bad.iter().filter(|r| !r.pass).map(|r| r.label.clone()).collect();
    assert_eq!(failing, ["expected_ticket_value"]);
}

#[test]
fn reports_round_trip_through_files() {
    let cfg = parse_config("n = 12\nd = 0.03\ntrials = 500\nreward = { kind = \"pareto\", mean = 1, shape = 3 }\n").unwrap();
    let rows = run_verify_with(&cfg, standard_closed_form).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for format in [ReportFormat::Csv, ReportFormat::JsonLines] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        emit_report(&rows, format, Some(&a)).unwrap();
        emit_report(&rows, format, Some(&b)).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(load_report(&a, format).unwrap(), rows);
    }
    assert!(render_report(&[], ReportFormat::JsonLines).is_err());
}
