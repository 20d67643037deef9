//! Writes the bundled synthetic dataset: 30 regions on a jittered 6 × 5
//! lon/lat grid, 2004..=2021, the twelve Table 1 indicators with a handful of
//! deliberate gaps, and five driver factors of decreasing explanatory power.
//!
//! ```text
//! cargo run -p restool-cli --example synthetic -- data/synthetic
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COLS: usize = 6;
const ROWS: usize = 5;
const FIRST_YEAR: i32 = 2004;
const YEARS: usize = 18;
const SEED: u64 = 20240611;

/// (id, attribute sign, base level, annual growth, sensitivity to latent
/// resilience).
const INDICATORS: [(&str, f64, f64, f64, f64); 12] = [
    ("x1", -1.0, 1.6, -0.035, 0.45),
    ("x2", -1.0, 0.9, -0.01, 0.25),
    ("x3", 1.0, 420.0, 0.06, 0.55),
    ("x4", 1.0, 1.1, 0.045, 0.6),
    ("x5", 1.0, 5.2e4, 0.07, 0.7),
    ("x6", 1.0, 38.0, 0.09, 0.65),
    ("x7", 1.0, 2600.0, 0.04, 0.35),
    ("x8", 1.0, 3.1e4, 0.05, 0.6),
    ("x9", 1.0, 42.0, 0.06, 0.3),
    ("x10", 1.0, 28.0, 0.01, 0.4),
    ("x11", -1.0, 3.4, -0.04, 0.5),
    ("x12", 1.0, 0.72, 0.015, 0.2),
];

/// Interior cells left empty: (region, indicator, year offset).
const GAPS: [(usize, usize, usize); 9] = [
    (2, 4, 5),
    (2, 4, 6),
    (7, 0, 9),
    (11, 8, 3),
    (14, 11, 12),
    (18, 2, 1),
    (21, 6, 15),
    (25, 9, 8),
    (29, 5, 10),
];

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn round(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/synthetic".into()));
    std::fs::create_dir_all(&dir).expect("create output dir");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let n = COLS * ROWS;
    let regions: Vec<String> = (1..=n).map(|i| format!("P{i:02}")).collect();

    // Row 0 is the north edge; column 0 the west edge.
    let mut centroids = String::from("region,lon,lat\n");
    let mut east = Vec::with_capacity(n);
    for (i, r) in regions.iter().enumerate() {
        let (row, col) = (i / COLS, i % COLS);
        let lon = 98.0 + 4.5 * col as f64 + rng.random_range(-1.2..1.2);
        let lat = 44.0 - 5.0 * row as f64 + rng.random_range(-1.2..1.2);
        writeln!(centroids, "{r},{},{}", round(lon, 3), round(lat, 3)).unwrap();
        east.push((col as f64 / (COLS - 1) as f64, row as f64 / (ROWS - 1) as f64));
    }

    let mut adjacency = String::from("region_a,region_b\n");
    for i in 0..n {
        let (row, col) = (i / COLS, i % COLS);
        if col + 1 < COLS {
            writeln!(adjacency, "{},{}", regions[i], regions[i + 1]).unwrap();
        }
        if row + 1 < ROWS {
            writeln!(adjacency, "{},{}", regions[i], regions[i + COLS]).unwrap();
        }
    }

    // Latent resilience: higher in the east, and the south-east catches up
    // over time, which pulls the weighted centre south.
    let latent: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (ex, sy) = east[i];
            let base = 0.8 * ex + 0.3 * (1.0 - sy) + 0.25 * normal(&mut rng);
            (0..YEARS)
                .map(|t| {
                    let tau = t as f64 / (YEARS - 1) as f64;
                    base + tau * (0.35 * sy + 0.15 * ex) + 0.05 * normal(&mut rng)
                })
                .collect()
        })
        .collect();

    let mut values = String::from("region,year,indicator,value\n");
    for (i, r) in regions.iter().enumerate() {
        let scale: Vec<f64> = INDICATORS.iter().map(|_| (0.25 * normal(&mut rng)).exp()).collect();
        for t in 0..YEARS {
            for (j, (id, sign, level, growth, sens)) in INDICATORS.iter().enumerate() {
                let v = level
                    * scale[j]
                    * (growth * t as f64 + sign * sens * latent[i][t] + 0.06 * normal(&mut rng)).exp();
                let cell = if GAPS.contains(&(i, j, t)) { String::new() } else { round(v, 4).to_string() };
                writeln!(values, "{r},{},{id},{cell}", FIRST_YEAR + t as i32).unwrap();
            }
        }
    }

    // f1 tracks the latent index closely, f5 is pure noise.
    let mut drivers = String::from("region,year,factor,value\n");
    for (i, r) in regions.iter().enumerate() {
        let fixed = rng.random_range(0.0..1.0);
        for t in 0..YEARS {
            let z = latent[i][t];
            let f = [
                ("f1_urbanization", 40.0 + 25.0 * z + 1.5 * normal(&mut rng)),
                ("f2_gdp_per_capita", (1.2 + 0.9 * z + 0.35 * normal(&mut rng)).exp()),
                ("f3_industry_share", 45.0 - 6.0 * z + 6.0 * normal(&mut rng)),
                ("f4_openness", 20.0 + 15.0 * east[i].0 + 8.0 * normal(&mut rng)),
                ("f5_precipitation", 400.0 + 900.0 * fixed + 60.0 * normal(&mut rng)),
            ];
            for (name, v) in f {
                writeln!(drivers, "{r},{},{name},{}", FIRST_YEAR + t as i32, round(v, 4)).unwrap();
            }
        }
    }

    for (name, text) in [
        ("centroids.csv", centroids),
        ("adjacency.csv", adjacency),
        ("values.csv", values),
        ("drivers.csv", drivers),
    ] {
        std::fs::write(dir.join(name), text).expect("write dataset file");
    }
    println!("wrote {} regions x {YEARS} years to {}", n, dir.display());
}
