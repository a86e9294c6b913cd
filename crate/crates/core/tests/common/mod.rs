//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vhfplan_core::geodata::{Building, ContourLine, EnvironmentMap, GeoPoint, LocalPoint, Road, TerrainClass};
use vhfplan_core::models::TrainedModels;
use vhfplan_core::planner::{run_pm1, LinkBudget, TrainingConfig};
use vhfplan_core::synth::{generate_town, SyntheticTown, TownSpec};
use vhfplan_core::tuning::GridSpec;

/// Oracle sampling step along a segment, metres.
pub const ORACLE_STEP: f64 = 0.01;

pub fn origin() -> GeoPoint {
    GeoPoint::new(44.4949, 11.3426).unwrap()
}

/// Crossing-number point-in-polygon test.
pub fn inside(ring: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut odd = false;
    let n = ring.len();
    for k in 0..n {
        let (a, b) = (ring[k], ring[(k + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                odd = !odd;
            }
        }
    }
    odd
}

fn point_at(a: &LocalPoint, b: &LocalPoint, t: f64) -> [f64; 3] {
    [a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)]
}

/// Midpoint samples `ORACLE_STEP` apart along `a -> b`, as parameters.
fn samples(a: &LocalPoint, b: &LocalPoint) -> impl Iterator<Item = f64> {
    let n = (a.distance(b) / ORACLE_STEP).ceil().max(1.0) as usize;
    (0..n).map(move |k| (k as f64 + 0.5) / n as f64)
}

/// Per building, the sampled length of the segment inside the footprint and
/// below the roof.
pub fn sampled_chords(buildings: &[Building], a: &LocalPoint, b: &LocalPoint) -> Vec<f64> {
    let len = a.distance(b);
    let n = (len / ORACLE_STEP).ceil().max(1.0);
    let mut hits = vec![0usize; buildings.len()];
    for t in samples(a, b) {
        let p = point_at(a, b, t);
        for (k, bl) in buildings.iter().enumerate() {
            if p[2] < bl.base_elevation + bl.roof_height && inside(&bl.footprint, [p[0], p[1]]) {
                hits[k] += 1;
            }
        }
    }
    hits.iter().map(|&h| h as f64 / n * len).collect()
}

/// Sampled underground runs as `(t_start, t_end)` pairs.
pub fn sampled_runs(terrain: impl Fn(f64, f64) -> f64, a: &LocalPoint, b: &LocalPoint) -> Vec<(f64, f64)> {
    let n = (a.distance(b) / ORACLE_STEP).ceil().max(1.0);
    let half = 0.5 / n;
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for t in samples(a, b) {
        let p = point_at(a, b, t);
        let below = p[2] < terrain(p[0], p[1]);
        match (open, below) {
            (None, true) => open = Some(t - half),
            (Some(s), false) => {
                runs.push((s, t - half));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push((s, 1.0));
    }
    runs
}

/// Rectangle of `w x h` centred on `c`, rotated by `angle`; with `notch`
/// one corner quarter is cut away, leaving a concave L.
pub fn footprint(c: [f64; 2], w: f64, h: f64, angle: f64, notch: bool) -> Vec<[f64; 2]> {
    let (hw, hh) = (w / 2.0, h / 2.0);
    let local: Vec<[f64; 2]> = if notch {
        vec![[-hw, -hh], [hw, -hh], [hw, 0.0], [0.0, 0.0], [0.0, hh], [-hw, hh]]
    } else {
        vec![[-hw, -hh], [hw, -hh], [hw, hh], [-hw, hh]]
    };
    let (s, co) = angle.sin_cos();
    local
        .iter()
        .map(|p| [c[0] + co * p[0] - s * p[1], c[1] + s * p[0] + co * p[1]])
        .collect()
}

pub fn building(id: &str, footprint: Vec<[f64; 2]>, roof_height: f64, base_elevation: f64) -> Building {
    Building {
        id: id.into(),
        footprint,
        roof_height,
        base_elevation,
    }
}

/// Flat map at `ground` with a frame of roads framing `[-half, half]^2` so
/// antennas anywhere inside stay within the map bounds.
pub fn flat_map(buildings: Vec<Building>, ground: f64, half: f64) -> EnvironmentMap {
    let roads = vec![Road {
        id: "frame".into(),
        centerline: vec![[-half, -half], [half, -half], [half, half], [-half, half], [-half, -half]],
        name: "ring road".into(),
    }];
    EnvironmentMap::from_local(origin(), TerrainClass::Flat, ground, buildings, vec![], roads).unwrap()
}

pub struct BuildingFixture {
    pub buildings: Vec<Building>,
    pub tx: LocalPoint,
    pub rx: LocalPoint,
}

/// Buildings strung along a random TX-RX segment with every crossing at
/// least `min_chord` metres long, so the 1 cm oracle resolves each chord
/// to better than one part in a thousand.
pub fn building_fixture(rng: &mut ChaCha8Rng, min_chord: f64) -> BuildingFixture {
    loop {
        let len = rng.random_range(150.0..400.0);
        let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = [heading.cos(), heading.sin()];
        let normal = [-dir[1], dir[0]];
        let start = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
        let tx = LocalPoint::new(start[0], start[1], rng.random_range(10.0..45.0));
        let rx = LocalPoint::new(start[0] + len * dir[0], start[1] + len * dir[1], rng.random_range(1.0..4.0));

        let count = rng.random_range(1..=5);
        let slot = len / count as f64;
        let buildings: Vec<Building> = (0..count)
            .map(|k| {
                let along = slot * (k as f64 + 0.5) + rng.random_range(-0.1..0.1) * slot;
                let size = rng.random_range(0.3..0.6) * slot.min(80.0);
                let off = rng.random_range(-0.25..0.25) * size;
                let c = [
                    start[0] + along * dir[0] + off * normal[0],
                    start[1] + along * dir[1] + off * normal[1],
                ];
                building(
                    &format!("f{k}"),
                    footprint(c, size, size * rng.random_range(0.7..1.3), rng.random_range(0.0..3.14), rng.random_bool(0.3)),
                    rng.random_range(8.0..50.0),
                    0.0,
                )
            })
            .collect();
        let chords = sampled_chords(&buildings, &tx, &rx);
        if chords.iter().all(|&c| c == 0.0 || c >= min_chord) {
            return BuildingFixture { buildings, tx, rx };
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hill {
    pub centre: [f64; 2],
    pub height: f64,
    pub width: f64,
}

pub fn hills_elevation(hills: &[Hill], base: f64, x: f64, y: f64) -> f64 {
    base + hills
        .iter()
        .map(|h| {
            let r2 = (x - h.centre[0]).powi(2) + (y - h.centre[1]).powi(2);
            h.height * (-r2 / (2.0 * h.width * h.width)).exp()
        })
        .sum::<f64>()
}

pub struct TerrainFixture {
    pub hills: Vec<Hill>,
    pub tx: LocalPoint,
    pub rx: LocalPoint,
}

/// Gaussian hills between two low antennas; every underground run is at
/// least `min_run` metres long.
pub fn terrain_fixture(rng: &mut ChaCha8Rng, min_run: f64) -> TerrainFixture {
    loop {
        let len = rng.random_range(300.0..900.0);
        let heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = [heading.cos(), heading.sin()];
        let hills: Vec<Hill> = (0..rng.random_range(1..=3))
            .map(|_| {
                let along = rng.random_range(0.2..0.8) * len;
                let off = rng.random_range(-40.0..40.0);
                Hill {
                    centre: [along * dir[0] - off * dir[1], along * dir[1] + off * dir[0]],
                    height: rng.random_range(15.0..80.0),
                    width: rng.random_range(30.0..120.0),
                }
            })
            .collect();
        let base = 100.0;
        let tx = LocalPoint::new(0.0, 0.0, hills_elevation(&hills, base, 0.0, 0.0) + rng.random_range(5.0..30.0));
        let (ex, ey) = (len * dir[0], len * dir[1]);
        let rx = LocalPoint::new(ex, ey, hills_elevation(&hills, base, ex, ey) + 1.5);
        let runs = sampled_runs(|x, y| hills_elevation(&hills, base, x, y), &tx, &rx);
        let short = runs.iter().any(|(s, e)| (e - s) * tx.distance(&rx) < min_run);
        if !runs.is_empty() && !short {
            return TerrainFixture { hills, tx, rx };
        }
    }
}

/// Closed circle of `n` vertices.
pub fn circle(c: [f64; 2], r: f64, n: usize) -> Vec<[f64; 2]> {
    (0..=n)
        .map(|k| {
            let a = std::f64::consts::TAU * (k % n) as f64 / n as f64;
            [c[0] + r * a.cos(), c[1] + r * a.sin()]
        })
        .collect()
}

/// A conical hill drawn as concentric contour circles every `interval`
/// metres of elevation, framed by a square contour at the base level.
pub fn cone_contours(centre: [f64; 2], base: f64, peak: f64, radius: f64, interval: f64, half: f64) -> Vec<ContourLine> {
    let mut out = vec![ContourLine {
        id: "frame".into(),
        polyline: vec![[-half, -half], [half, -half], [half, half], [-half, half], [-half, -half]],
        elevation: base,
    }];
    let mut e = base + interval;
    let mut k = 0;
    while e < peak {
        let r = radius * (peak - e) / (peak - base);
        out.push(ContourLine {
            id: format!("c{k}"),
            polyline: circle(centre, r, 256),
            elevation: e,
        });
        e += interval;
        k += 1;
    }
    out
}

pub fn town_a() -> SyntheticTown {
    generate_town(&TownSpec::new(GeoPoint::new(44.49, 11.34).unwrap(), "alpha/centre", 11)).unwrap()
}

pub fn town_b() -> SyntheticTown {
    generate_town(&TownSpec::new(GeoPoint::new(45.07, 7.68).unwrap(), "bravo/centre", 23)).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Town with `n` measurements instead of the full campaign.
pub fn small_town(lat: f64, lon: f64, area: &str, seed: u64, n: usize) -> SyntheticTown {
    let mut spec = TownSpec::new(GeoPoint::new(lat, lon).unwrap(), area, seed);
    spec.measurements = n;
    generate_town(&spec).unwrap()
}

/// Single-cell grids: training without any search.
pub fn quick_config(seed: u64) -> TrainingConfig {
    TrainingConfig {
        seed,
        classification_grid: GridSpec::single(5, -4),
        regression_grid: GridSpec::single(6, -5),
        ..TrainingConfig::default()
    }
}

/// Models trained locally on a 300-point town tagged `area`.
pub fn quick_models(area: &str, seed: u64) -> TrainedModels {
    let town = small_town(44.49, 11.34, area, seed, 300);
    run_pm1(&town.map, &town.measurements, &town.tx, &LinkBudget::default(), area, &quick_config(seed))
        .unwrap()
        .models
}
