//! Every scoring formula against a plain loop written from its definition,
//! on randomized small fixtures. Each check panics on the first mismatch.

// the oracles are written as plain index loops on purpose
#![allow(clippy::needless_range_loop, clippy::manual_clamp)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use occnav::mapping::{bayes_update, CellClass, CellDist, GlobalMap, ProbGrid, EPSILON};
use occnav::metrics::{coverage, iou, map_accuracy, spl, DECIDED_MARGIN};
use occnav::policy::{path_occupancy_score, score_exploration, score_pointgoal, ucb_total, PolicyConfig};
use occnav::predictor::{cross_entropy, ensemble_mean, ensemble_variance, loss_and_grad, PredictorParams, Sample, N_CLASSES, N_FEATURES};
use occnav::rrt::Path;
use occnav::world::{Floorplan, Terrain};
use occnav::Cell;

const FIXTURES: u64 = 120;

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

#[track_caller]
fn assert_close(got: f64, want: f64, what: &str) {
    assert!(close(got, want), "{what}: got {got:e}, oracle {want:e}");
}

fn rng(test: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(test.wrapping_mul(1_000_003) + i)
}

fn random_dist(rng: &mut ChaCha8Rng) -> CellDist {
    match rng.random_range(0..6) {
        0 => [1.0 / 3.0; 3],
        1 => {
            let mut d = [EPSILON / 2.0; 3];
            d[rng.random_range(0..3)] = 1.0 - EPSILON;
            d
        }
        _ => {
            let raw = [rng.random::<f64>() + 1e-3, rng.random::<f64>() + 1e-3, rng.random::<f64>() + 1e-3];
            let s: f64 = raw.iter().sum();
            raw.map(|v| v / s)
        }
    }
}

fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ProbGrid {
    ProbGrid::from_cells(rows, cols, (0..rows * cols).map(|_| random_dist(rng)).collect()).unwrap()
}

fn random_walk(rng: &mut ChaCha8Rng, rows: usize, cols: usize, max_len: usize) -> Vec<Cell> {
    let len = rng.random_range(1..max_len);
    let mut c = Cell::new(rng.random_range(0..rows as i32), rng.random_range(0..cols as i32));
    let mut out = vec![c];
    for _ in 1..len {
        c = Cell::new((c.row + rng.random_range(-1..=1)).clamp(0, rows as i32 - 1), (c.col + rng.random_range(-1..=1)).clamp(0, cols as i32 - 1));
        out.push(c);
    }
    out
}

fn class_of(i: usize) -> CellClass {
    CellClass::from_index(i).unwrap()
}

fn oracle_argmax(d: &CellDist) -> usize {
    // first maximum in class order
    let mut best = 0;
    for k in 0..3 {
        if d[k] > d[best] {
            best = k;
        }
    }
    best
}

pub fn cross_entropy_matches_definition() {
    for i in 0..FIXTURES {
        let mut r = rng(1, i);
        let k = r.random_range(1..200);
        let pred: Vec<CellDist> = (0..k).map(|_| random_dist(&mut r)).collect();
        let labels: Vec<CellClass> = (0..k).map(|_| class_of(r.random_range(0..3))).collect();
        let mut sum = 0.0;
        for (p, l) in pred.iter().zip(&labels) {
            for c in 0..3 {
                let m = if c == l.index() { 1.0 } else { 0.0 };
                sum += m * p[c].max(EPSILON).min(1.0 - EPSILON).ln();
            }
        }
        assert_close(cross_entropy(&pred, &labels).unwrap(), -sum / k as f64, "cross entropy");
    }
}

pub fn training_loss_is_cross_entropy_of_the_softmax() {
    for i in 0..FIXTURES {
        let mut r = rng(2, i);
        let mut params = PredictorParams::zeros();
        for row in params.weights.iter_mut() {
            for w in row.iter_mut() {
                *w = r.random_range(-2.0..2.0);
            }
        }
        let samples: Vec<Sample> = (0..r.random_range(1..50))
            .map(|_| {
                let mut x = [0.0; N_FEATURES];
                x.iter_mut().for_each(|v| *v = r.random_range(-1.0..1.0));
                Sample { x, label: class_of(r.random_range(0..3)) }
            })
            .collect();
        let mut sum = 0.0;
        for s in &samples {
            let logits: Vec<f64> = (0..N_CLASSES).map(|c| (0..N_FEATURES).map(|j| params.weights[c][j] * s.x[j]).sum()).collect();
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            let p = logits[s.label.index()].exp() / z;
            sum -= p.clamp(EPSILON, 1.0 - EPSILON).ln();
        }
        assert_close(loss_and_grad(&params, &samples).0, sum / samples.len() as f64, "training loss");
    }
}

pub fn exploration_score_is_mean_path_uncertainty() {
    for i in 0..FIXTURES {
        let mut r = rng(3, i);
        let (rows, cols) = (r.random_range(1..=32), r.random_range(1..=32));
        let u: Vec<f64> = (0..rows * cols).map(|_| r.random::<f64>() * 0.25).collect();
        let path = random_walk(&mut r, rows, cols, 60);
        let want = path.iter().map(|c| u[c.row as usize * cols + c.col as usize]).sum::<f64>() / path.len() as f64;
        assert_close(score_exploration(&path, &u, cols).unwrap(), want, "exploration score");
    }
}

pub fn occupancy_score_is_path_maximum() {
    for i in 0..FIXTURES {
        let mut r = rng(4, i);
        let (rows, cols) = (r.random_range(1..=32), r.random_range(1..=32));
        let g = random_grid(&mut r, rows, cols);
        let path = random_walk(&mut r, rows, cols, 60);
        let mut want = f64::MIN;
        for c in &path {
            want = want.max(g.cells()[c.row as usize * cols + c.col as usize][CellClass::Occupied.index()]);
        }
        assert_close(path_occupancy_score(&path, &g).unwrap(), want, "occupancy max");
    }
}

pub fn ucb_total_matches_definition() {
    for i in 0..FIXTURES {
        let mut r = rng(5, i);
        let (rows, cols) = (r.random_range(2..=32), r.random_range(2..=32));
        let n = r.random_range(2..=8);
        let members: Vec<ProbGrid> = (0..n).map(|_| random_grid(&mut r, rows, cols)).collect();
        let refs: Vec<&ProbGrid> = members.iter().collect();
        let cfg = PolicyConfig { alpha1: r.random_range(0.0..1.0), alpha2: r.random_range(0.0..1.0), ..PolicyConfig::default() };
        let path = Path::from_cells(random_walk(&mut r, rows, cols, 40), 0.05).unwrap();
        let max_len = path.length_m + r.random_range(0.0..2.0);

        let p: Vec<f64> =
            members.iter().map(|m| path.cells.iter().map(|c| m.cells()[c.row as usize * cols + c.col as usize][1]).fold(f64::MIN, f64::max)).collect();
        let mu = p.iter().sum::<f64>() / n as f64;
        let var = p.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n as f64;
        let d = if max_len > 0.0 { path.length_m / max_len } else { 1.0 };
        let want = mu - cfg.alpha1 * var.sqrt() + cfg.alpha2 * d;

        let s = score_pointgoal(&path, 0, &refs, max_len, &cfg).unwrap();
        assert_close(s.mu_s, mu, "mu_s");
        assert!((s.sigma_s - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1e-6), "sigma_s {} vs {}", s.sigma_s, var.sqrt());
        assert_close(s.d_s, d, "d_s");
        assert!((s.total - want).abs() <= 1e-9 * want.abs().max(1.0), "total {} vs {want}", s.total);
        assert_close(ucb_total(mu, var.sqrt(), d, &cfg), want, "ucb_total");
    }
}

pub fn ensemble_reductions_match_member_loops() {
    for i in 0..FIXTURES {
        let mut r = rng(6, i);
        let (rows, cols) = (r.random_range(1..=32), r.random_range(1..=32));
        let n = r.random_range(2..=8);
        let members: Vec<ProbGrid> = (0..n).map(|_| random_grid(&mut r, rows, cols)).collect();
        let refs: Vec<&ProbGrid> = members.iter().collect();
        let mean = ensemble_mean(&refs).unwrap();
        let var = ensemble_variance(&refs).unwrap();
        for cell in 0..rows * cols {
            for k in 0..3 {
                let m = members.iter().map(|g| g.cells()[cell][k]).sum::<f64>() / n as f64;
                assert_close(mean.cells()[cell][k], m, "ensemble mean");
            }
            let occ: Vec<f64> = members.iter().map(|g| g.cells()[cell][1]).collect();
            let m = occ.iter().sum::<f64>() / n as f64;
            let v = occ.iter().map(|o| (o - m) * (o - m)).sum::<f64>() / n as f64;
            assert!((var[cell] - v).abs() <= 1e-9 * v.max(1e-12), "variance {} vs {v}", var[cell]);
        }
    }
}

/// Normalized product, then the smallest set of entries raised to the floor
/// such that everything else, rescaled, stays above it.
fn oracle_bayes(prior: &CellDist, like: &CellDist) -> CellDist {
    if like[0] == like[1] && like[1] == like[2] {
        return *prior;
    }
    let l = like.map(|v| v.max(EPSILON).min(1.0 - EPSILON));
    let raw = [prior[0] * l[0], prior[1] * l[1], prior[2] * l[2]];
    let s: f64 = raw.iter().sum();
    let p = raw.map(|v| v / s);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    for n_floor in 0..3 {
        let floored = &order[..n_floor];
        let rest: Vec<usize> = order[n_floor..].to_vec();
        let mass: f64 = rest.iter().map(|&k| p[k]).sum();
        let target = 1.0 - n_floor as f64 * EPSILON;
        let mut out = [0.0; 3];
        for &k in floored {
            out[k] = EPSILON;
        }
        for &k in &rest {
            out[k] = p[k] * target / mass;
        }
        if rest.iter().all(|&k| out[k] >= EPSILON) {
            return out;
        }
    }
    unreachable!("two floored entries always leave a valid third")
}

pub fn bayes_update_matches_product_rule() {
    for i in 0..FIXTURES * 10 {
        let mut r = rng(7, i);
        let prior = random_dist(&mut r);
        let like = if r.random_bool(0.2) {
            let mut d = [0.0; 3];
            d[r.random_range(0..3)] = 1.0;
            d
        } else {
            random_dist(&mut r)
        };
        let got = bayes_update(&prior, &like);
        let want = oracle_bayes(&prior, &like);
        for k in 0..3 {
            assert_close(got[k], want[k], "posterior");
        }
    }
}

pub fn spl_matches_definition() {
    for i in 0..FIXTURES {
        let mut r = rng(8, i);
        let success = r.random_bool(0.6);
        let l = r.random_range(0.1..20.0);
        let p = if r.random_bool(0.2) { l } else { r.random_range(0.0..40.0) };
        let want = if success { l / if p > l { p } else { l } } else { 0.0 };
        assert_close(spl(success, l, p).unwrap(), want, "spl");
    }
}

struct MapFixture {
    fp: Floorplan,
    map: GlobalMap,
    offset: (usize, usize),
}

fn map_fixture(r: &mut ChaCha8Rng) -> MapFixture {
    let (rows, cols) = (r.random_range(4..=24), r.random_range(4..=24));
    let mut cells = vec![Terrain::Occupied; rows * cols];
    for row in 1..rows - 1 {
        for col in 1..cols - 1 {
            if r.random_bool(0.7) {
                cells[row * cols + col] = Terrain::Free;
            }
        }
    }
    cells[cols + 1] = Terrain::Free;
    let cs = 0.05;
    let fp = Floorplan::new(rows, cols, cs, (0.3, -0.2), cells).unwrap();
    let offset = (r.random_range(0..=4), r.random_range(0..=4));
    let (h, w) = (rows + offset.0 + r.random_range(0..=4), cols + offset.1 + r.random_range(0..=4));
    let mut map = GlobalMap::new(h, w, cs, (0.3 - offset.1 as f64 * cs, -0.2 - offset.0 as f64 * cs));
    map.probs = random_grid(r, h, w);
    MapFixture { fp, map, offset }
}

/// Ground truth per floorplan cell: FREE cells, OCCUPIED within three cells
/// (octile distance) of a FREE cell, UNKNOWN beyond.
fn oracle_truth(fp: &Floorplan) -> Vec<usize> {
    let (rows, cols) = (fp.rows() as i32, fp.cols() as i32);
    let free: Vec<Cell> = (0..rows).flat_map(|r| (0..cols).map(move |c| Cell::new(r, c))).filter(|c| fp.is_free(*c)).collect();
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| Cell::new(r, c)))
        .map(|c| {
            if fp.is_free(c) {
                return CellClass::Free.index();
            }
            let d = free
                .iter()
                .map(|f| {
                    let (dr, dc) = (f64::from((f.row - c.row).abs()), f64::from((f.col - c.col).abs()));
                    dr.max(dc) + (2f64.sqrt() - 1.0) * dr.min(dc)
                })
                .fold(f64::INFINITY, f64::min);
            if d <= 3.0 + 1e-9 {
                CellClass::Occupied.index()
            } else {
                CellClass::Unknown.index()
            }
        })
        .collect()
}

fn oracle_decided(d: &CellDist) -> Option<usize> {
    let a = oracle_argmax(d);
    (a != CellClass::Unknown.index() && d[a] > 1.0 / 3.0 + DECIDED_MARGIN).then_some(a)
}

fn map_cell(f: &MapFixture, row: usize, col: usize) -> CellDist {
    f.map.probs.cells()[(row + f.offset.0) * f.map.w() + col + f.offset.1]
}

pub fn map_accuracy_matches_cell_loop() {
    for i in 0..FIXTURES {
        let mut r = rng(9, i);
        let f = map_fixture(&mut r);
        let truth = oracle_truth(&f.fp);
        let mut n = 0;
        for row in 0..f.fp.rows() {
            for col in 0..f.fp.cols() {
                let t = truth[row * f.fp.cols() + col];
                if t != CellClass::Unknown.index() && oracle_decided(&map_cell(&f, row, col)) == Some(t) {
                    n += 1;
                }
            }
        }
        assert_close(map_accuracy(&f.map, &f.fp).unwrap(), n as f64 * 0.05 * 0.05, "map accuracy");
    }
}

pub fn iou_matches_cell_loop() {
    for i in 0..FIXTURES {
        let mut r = rng(10, i);
        let f = map_fixture(&mut r);
        let truth = oracle_truth(&f.fp);
        let mut ratios = Vec::new();
        for cls in [CellClass::Free.index(), CellClass::Occupied.index()] {
            let (mut inter, mut union) = (0, 0);
            for row in 0..f.fp.rows() {
                for col in 0..f.fp.cols() {
                    let p = oracle_decided(&map_cell(&f, row, col)) == Some(cls);
                    let t = truth[row * f.fp.cols() + col] == cls;
                    inter += usize::from(p && t);
                    union += usize::from(p || t);
                }
            }
            if union > 0 {
                ratios.push(inter as f64 / union as f64);
            }
        }
        let want = if ratios.is_empty() { 0.0 } else { 100.0 * ratios.iter().sum::<f64>() / ratios.len() as f64 };
        let got = iou(&f.map, &f.fp).unwrap();
        assert_close(got.pct, want, "iou");
        assert_eq!(got.skipped, 2 - ratios.len());
    }
}

pub fn coverage_matches_cell_loop() {
    for i in 0..FIXTURES {
        let mut r = rng(11, i);
        let f = map_fixture(&mut r);
        let nav: Vec<bool> = (0..f.fp.rows() * f.fp.cols()).map(|_| r.random_bool(0.6)).collect();
        let (mut seen, mut total) = (0, 0);
        for row in 0..f.fp.rows() {
            for col in 0..f.fp.cols() {
                if nav[row * f.fp.cols() + col] {
                    total += 1;
                    let d = map_cell(&f, row, col);
                    if !(d[0] == d[1] && d[1] == d[2]) {
                        seen += 1;
                    }
                }
            }
        }
        let (m2, pct) = coverage(&f.map, &f.fp, &nav).unwrap();
        assert_close(m2, seen as f64 * 0.05 * 0.05, "coverage m2");
        assert_close(pct, if total == 0 { 0.0 } else { 100.0 * seen as f64 / total as f64 }, "coverage pct");
    }
}

/// Returns the worst relative error seen.
pub fn analytic_gradient_matches_central_differences() -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let mut r = rng(12, i);
        let mut params = PredictorParams::zeros();
        for row in params.weights.iter_mut() {
            for w in row.iter_mut() {
                *w = r.random_range(-0.5..0.5);
            }
        }
        let samples: Vec<Sample> = (0..r.random_range(5..40))
            .map(|_| {
                let mut x = [0.0; N_FEATURES];
                x.iter_mut().for_each(|v| *v = r.random_range(-1.0..1.0));
                x[N_FEATURES - 1] = 1.0;
                Sample { x, label: class_of(r.random_range(0..3)) }
            })
            .collect();
        let (_, grad) = loss_and_grad(&params, &samples);
        for _ in 0..10 {
            let (c, j) = (r.random_range(0..N_CLASSES), r.random_range(0..N_FEATURES));
            let h = 1e-5;
            let mut plus = params.clone();
            plus.weights[c][j] += h;
            let mut minus = params.clone();
            minus.weights[c][j] -= h;
            let fd = (loss_and_grad(&plus, &samples).0 - loss_and_grad(&minus, &samples).0) / (2.0 * h);
            let rel = (grad[c][j] - fd).abs() / grad[c][j].abs().max(fd.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-4, "max relative gradient error {worst:e}");
    worst
}
