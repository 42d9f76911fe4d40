use proptest::prelude::*;

use condinf::inference::correct_report;
use condinf::io::{
    CovarianceSpec, DeviationSpec, EstimatesSpec, PolyhedronSpec, ProblemDocument, ReportDocument, SelectorSpec,
};

fn labels(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("b{i}_x")).collect()
}

fn selector(d: usize) -> impl Strategy<Value = SelectorSpec> {
    let weights = prop::collection::vec(-3.0..3.0f64, d).prop_filter("nonzero", |w| w.iter().any(|v| v.abs() > 1e-3));
    let expr = prop::collection::vec((0..d, -4i32..=4), 1..4).prop_filter_map("nonzero", move |terms| {
        let mut w = vec![0i32; d];
        for (i, c) in &terms {
            w[*i] += c;
        }
        if w.iter().all(|c| *c == 0) {
            return None;
        }
        let names = labels(d);
        let parts: Vec<String> = terms
            .iter()
            .enumerate()
            .map(|(k, (i, c))| {
                let sign = if *c < 0 { "-" } else if k == 0 { "" } else { "+" };
                format!("{sign} {}*{}", c.abs(), names[*i])
            })
            .collect();
        Some(parts.join(" "))
    });
    prop_oneof![weights.prop_map(SelectorSpec::Weights), expr.prop_map(SelectorSpec::Expr)]
}

fn leaf(d: usize) -> impl Strategy<Value = DeviationSpec> {
    let eta = 0.01..0.5f64;
    let kappa = 0.0..2.0f64;
    let poly = (1..4usize)
        .prop_flat_map(move |m| (prop::collection::vec(selector(d), m), prop::collection::vec(-3.0..3.0f64, m)))
        .prop_map(|(a, c)| PolyhedronSpec { a, c });
    prop_oneof![
        Just(DeviationSpec::Full),
        (selector(d), eta.clone()).prop_map(|(selector, eta)| DeviationSpec::Significance { selector, eta }),
        (selector(d), eta.clone()).prop_map(|(selector, eta)| DeviationSpec::Insignificance { selector, eta }),
        (selector(d), eta.clone()).prop_map(|(selector, eta)| DeviationSpec::OneSidedAbove { selector, eta }),
        (selector(d), eta).prop_map(|(selector, eta)| DeviationSpec::OneSidedBelow { selector, eta }),
        (selector(d), kappa.clone()).prop_map(|(selector, kappa)| DeviationSpec::EconomicAbove { selector, kappa }),
        (selector(d), kappa).prop_map(|(selector, kappa)| DeviationSpec::EconomicBelow { selector, kappa }),
        (prop::collection::vec(poly, 1..3), prop::option::of("[a-z ]{0,12}"))
            .prop_map(|(polyhedra, note)| DeviationSpec::Polyhedra { polyhedra, note }),
    ]
}

fn deviation(d: usize) -> impl Strategy<Value = DeviationSpec> {
    leaf(d).prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(|sets| DeviationSpec::Intersect { sets }),
            prop::collection::vec(inner, 1..3).prop_map(|sets| DeviationSpec::Union { sets }),
        ]
    })
}

fn document() -> impl Strategy<Value = ProblemDocument> {
    (2..5usize).prop_flat_map(|d| {
        (
            0.01..0.3f64,
            selector(d),
            prop::collection::vec(-3.0..3.0f64, d),
            prop::collection::vec(-1.0..1.0f64, d * d),
            any::<bool>(),
            deviation(d),
        )
            .prop_map(move |(alpha, target, values, b, named, deviation)| {
                // B B' + I is symmetric positive definite
                let mut rows = vec![vec![0.0; d]; d];
                for i in 0..d {
                    for j in 0..d {
                        rows[i][j] = (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum::<f64>() + f64::from(u8::from(i == j));
                    }
                }
                ProblemDocument {
                    alpha,
                    target,
                    estimates: EstimatesSpec {
                        labels: named.then(|| labels(d)),
                        values,
                    },
                    covariance: CovarianceSpec { rows },
                    deviation,
                    sweep: None,
                    simulation: None,
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn toml_text_round_trips(doc in document()) {
        let text = doc.to_toml_string().unwrap();
        let back = ProblemDocument::from_toml_str(&text, "fuzz").unwrap();
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn emit_of_parse_is_canonical(doc in document()) {
        // expressions need labels; unlabeled documents fall back to x1, x2, ...
        let problem = match doc.to_problem() {
            Ok(p) => p,
            Err(e) => {
                let msg = e.to_string();
                prop_assert!(msg.contains("unknown label"), "{}", msg);
                return Ok(());
            }
        };
        let canonical = ProblemDocument::from_problem(&problem);
        let text = canonical.to_toml_string().unwrap();
        let reparsed = ProblemDocument::from_toml_str(&text, "canonical").unwrap();
        prop_assert_eq!(&reparsed, &canonical);
        let again = reparsed.to_problem().unwrap();
        prop_assert_eq!(&again, &problem);
        prop_assert_eq!(ProblemDocument::from_problem(&again), canonical);
    }
}

#[test]
fn report_document_round_trips() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/one_sided.toml")).unwrap();
    let problem = ProblemDocument::from_toml_str(&text, "one_sided").unwrap().to_problem().unwrap();
    let report = correct_report(&problem).unwrap();
    let doc = ReportDocument::new(&report, problem.deviation.provenance(), text.as_bytes(), Some(3));
    let json = doc.to_json().unwrap();
    let back = ReportDocument::from_json(&json).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_json().unwrap(), json);
    assert_eq!(back.report().unwrap(), report);
}

#[test]
fn sleep_pooling_document() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sleep_pooling.toml")).unwrap();
    let problem = ProblemDocument::from_toml_str(&text, "sleep").unwrap().to_problem().unwrap();
    // power (2 polyhedra of 4 rows) x interpretability (4 rows) x economic (2 half-spaces)
    assert_eq!(problem.deviation.polyhedra().len(), 2);
    assert!(problem.deviation.polyhedra().iter().all(|p| p.rows() == 9));
    let only_economic = text.replace("eta = 0.05", "eta = 0.05\nparts = [\"economic\"]");
    let p = ProblemDocument::from_toml_str(&only_economic, "sleep").unwrap().to_problem().unwrap();
    assert_eq!(p.deviation.polyhedra().len(), 2);
    assert!(p.deviation.polyhedra().iter().all(|p| p.rows() == 1));
}
