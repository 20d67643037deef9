use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use restool_core::ingest::{
    build_spatial_weights, fill_missing, load_centroids, load_panel, write_panel, Attribute, IndicatorPanel,
    IndicatorSpec, SpatialWeights,
};
use restool_core::Error;

fn write_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(body.as_bytes()).unwrap();
    path
}

fn specs(m: usize) -> Vec<IndicatorSpec> {
    (0..m)
        .map(|j| IndicatorSpec {
            id: format!("x{}", j + 1),
            name: format!("indicator {}", j + 1),
            attribute: if j % 3 == 2 { Attribute::Negative } else { Attribute::Positive },
            weight: None,
        })
        .collect()
}

fn spec_json(specs: &[IndicatorSpec]) -> String {
    serde_json::to_string(specs).unwrap()
}

#[test]
fn full_panel_cell_count_matches_line_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("region,year,indicator,value\n");
    for r in 0..30 {
        for y in 2004..2022 {
            for j in 1..=12 {
                body.push_str(&format!("R{r:02},{y},x{j},{}\n", r as f64 + y as f64 * 0.5 + j as f64));
            }
        }
    }
    let lines = body.lines().count() - 1;
    let values = write_file(dir.path(), "values.csv", &body);
    let spec = write_file(dir.path(), "spec.json", &spec_json(&specs(12)));
    let panel = load_panel(&values, &spec).unwrap();
    assert_eq!(panel.n_cells(), lines);
    assert_eq!(panel.n_cells(), 6480);
    assert_eq!(panel.missing_count(), 0);
}

#[test]
fn empty_value_is_missing() {
    let dir = tempfile::tempdir().unwrap();
    let body = "region,year,indicator,value\nA,2004,x1,1\nA,2005,x1,\nA,2006,x1,3\n";
    let values = write_file(dir.path(), "values.csv", body);
    let spec = write_file(dir.path(), "spec.json", &spec_json(&specs(1)));
    let panel = load_panel(&values, &spec).unwrap();
    assert_eq!(panel.missing_count(), 1);
    let filled = fill_missing(&panel).unwrap();
    assert_eq!(filled.value(0, 0, 1), 2.0);
}

#[test]
fn table_one_style_weights_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"[
        {"id":"a","name":"a","attribute":"+","weight":0.5},
        {"id":"b","name":"b","attribute":"-","weight":0.501}
    ]"#;
    let body = "region,year,indicator,value\nA,2004,a,1\nA,2004,b,2\n";
    let values = write_file(dir.path(), "values.csv", body);
    let spec = write_file(dir.path(), "spec.json", spec);
    let panel = load_panel(&values, &spec).unwrap();
    assert_eq!(panel.indicators()[1].attribute, Attribute::Negative);

    let bad = write_file(
        dir.path(),
        "bad.json",
        r#"[{"id":"a","name":"a","attribute":"+","weight":0.5},{"id":"b","name":"b","attribute":"-","weight":0.51}]"#,
    );
    assert!(matches!(load_panel(&values, &bad), Err(Error::WeightSum { .. })));
}

#[test]
fn adjacency_file() {
    let dir = tempfile::tempdir().unwrap();
    let regions: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
    let adj = write_file(dir.path(), "adj.csv", "region_a,region_b\nA,B\nB,C\n");
    let w = build_spatial_weights(&adj, &regions).unwrap();
    assert_eq!(w.row(1), &[0.5, 0.0, 0.5, 0.0]);
    assert_eq!(w.island_names(), vec!["D".to_string()]);

    let unknown = write_file(dir.path(), "bad.csv", "region_a,region_b\nA,Z\n");
    assert!(matches!(build_spatial_weights(&unknown, &regions), Err(Error::UnknownRegion(_))));
}

#[test]
fn centroid_files() {
    let dir = tempfile::tempdir().unwrap();
    let ll = write_file(dir.path(), "ll.csv", "region,lon,lat\nA,100,30\nB,110,30\nC,105,40\n");
    let g = load_centroids(&ll).unwrap();
    let a = g.point("A").unwrap();
    let b = g.point("B").unwrap();
    assert!((a.y - b.y).abs() < 1e-9);
    assert!(a.x < 0.0 && b.x > 0.0);
    let (lon, lat) = g.to_lonlat(g.point("C").unwrap()).unwrap();
    assert!((lon - 105.0).abs() < 1e-9 && (lat - 40.0).abs() < 1e-9);

    let km = write_file(dir.path(), "km.csv", "region,x_km,y_km\nA,0,0\nB,10,5\n");
    let g = load_centroids(&km).unwrap();
    assert_eq!(g.point("B").unwrap().x, 10.0);
    assert_eq!(g.to_lonlat(g.point("B").unwrap()), None);

    let bad = write_file(dir.path(), "bad.csv", "region,lon,lat\nA,200,30\n");
    assert!(load_centroids(&bad).is_err());
}

fn panel_strategy() -> impl Strategy<Value = IndicatorPanel> {
    (1usize..4, 2usize..6, 1usize..4).prop_flat_map(|(n, k, m)| {
        prop::collection::vec(prop::option::weighted(0.8, -1e6f64..1e6), n * m * k).prop_map(move |cells| {
            let regions = (0..n).map(|i| format!("r{i}")).collect();
            let years = (2000..2000 + k as i32).collect();
            IndicatorPanel::new(regions, years, specs(m), cells).unwrap()
        })
    })
}

fn cell_multiset(panel: &IndicatorPanel) -> BTreeMap<(String, i32, String), Option<u64>> {
    let mut out = BTreeMap::new();
    for (i, r) in panel.regions().iter().enumerate() {
        for (j, s) in panel.indicators().iter().enumerate() {
            for (t, y) in panel.years().iter().enumerate() {
                out.insert((r.clone(), *y, s.id.clone()), panel.get(i, j, t).map(f64::to_bits));
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn write_then_load_round_trips(panel in panel_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let values = dir.path().join("values.csv");
        write_panel(&panel, std::fs::File::create(&values).unwrap()).unwrap();
        let spec = write_file(dir.path(), "spec.json", &spec_json(panel.indicators()));
        let back = load_panel(&values, &spec).unwrap();
        prop_assert_eq!(cell_multiset(&back), cell_multiset(&panel));
    }

    #[test]
    fn fill_is_idempotent(panel in panel_strategy()) {
        if let Ok(once) = fill_missing(&panel) {
            prop_assert_eq!(once.missing_count(), 0);
            let twice = fill_missing(&once).unwrap();
            prop_assert_eq!(cell_multiset(&once), cell_multiset(&twice));
            for (i, _) in panel.regions().iter().enumerate() {
                for j in 0..panel.n_indicators() {
                    for t in 0..panel.n_years() {
                        if let Some(v) = panel.get(i, j, t) {
                            prop_assert_eq!(once.value(i, j, t).to_bits(), v.to_bits());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn weight_rows_are_stochastic(
        n in 2usize..12,
        raw in prop::collection::vec((0usize..12, 0usize..12), 0..40),
    ) {
        let regions: Vec<String> = (0..n).map(|i| format!("r{i}")).collect();
        let pairs: Vec<(String, String)> = raw
            .into_iter()
            .filter(|(a, b)| a < &n && b < &n && a != b)
            .map(|(a, b)| (regions[a].clone(), regions[b].clone()))
            .collect();
        let w = SpatialWeights::from_pairs(&regions, &pairs).unwrap();
        for i in 0..n {
            let s: f64 = w.row(i).iter().sum();
            prop_assert_eq!(w.get(i, i), 0.0);
            prop_assert!(w.row(i).iter().all(|v| *v >= 0.0));
            if w.is_island(i) {
                prop_assert_eq!(s, 0.0);
            } else {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
            for j in 0..n {
                prop_assert_eq!(w.get(i, j) > 0.0, w.get(j, i) > 0.0);
            }
        }
    }
}
