use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treesobol::io::{
    ensemble_to_json, parse_ensemble, parse_posterior, posterior_to_json, read_dataset,
    write_dataset, write_report_csv, PosteriorWriter,
};
use treesobol::{Dataset, PosteriorDraw};
use treesobol_core::{aggregate, Domain, ProductMeasure, RandomEnsemble};

#[test]
fn ensemble_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gen = RandomEnsemble::default();
    for _ in 0..50 {
        let dom = Domain::new(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 7.0]).unwrap();
        let ens = gen.sample(&mut rng, &dom);
        let text = serde_json::to_string(&ensemble_to_json(&ens)).unwrap();
        assert_eq!(parse_ensemble(&text).unwrap(), ens);
    }
}

#[test]
fn posterior_round_trip_and_streaming() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gen = RandomEnsemble::default();
    let draws: Vec<PosteriorDraw> = (0..5)
        .map(|k| PosteriorDraw {
            ensemble: gen.sample(&mut rng, &Domain::unit(2)),
            sigma: 0.5 + k as f64,
        })
        .collect();
    let text = serde_json::to_string(&posterior_to_json(&draws)).unwrap();
    assert_eq!(parse_posterior(&text).unwrap(), draws);

    let mut w = PosteriorWriter::new(Vec::new()).unwrap();
    for d in &draws {
        w.push(&d.ensemble, d.sigma).unwrap();
    }
    let streamed = String::from_utf8(w.finish().unwrap()).unwrap();
    assert_eq!(parse_posterior(&streamed).unwrap(), draws);
    assert!(parse_posterior("[]").unwrap().is_empty());
}

#[test]
fn posterior_needs_positive_sigma() {
    let draw = r#"[{"domain": {"lo": [0], "hi": [1]}, "trees": [{"leaf": 1}], "sigma": -1}]"#;
    assert!(parse_posterior(draw).is_err());
    let missing = r#"[{"domain": {"lo": [0], "hi": [1]}, "trees": [{"leaf": 1}]}]"#;
    assert!(parse_posterior(missing).is_err());
}

#[test]
fn dataset_round_trip() {
    let data = Dataset::new(
        vec![vec![0.1, 0.25], vec![0.3, 0.125], vec![1.0, 0.0]],
        vec![1.5, -2.0, 1e-3],
    )
    .unwrap();
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf).unwrap();
    assert!(buf.starts_with(b"x1,x2,y\n"));
    assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);
}

#[test]
fn report_csv_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let gen = RandomEnsemble::default();
    let ens: Vec<_> = (0..3)
        .map(|_| gen.sample(&mut rng, &Domain::unit(3)))
        .collect();
    let rep = aggregate(&ens, &ProductMeasure::uniform(&Domain::unit(3))).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&rep, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("draw,set,V,S,T"));
    // per block: total, three singletons, three pairs; three draws plus the mean
    assert_eq!(lines.count(), 4 * 7);
    assert!(text.contains("\nmean,1-3,"));
}
