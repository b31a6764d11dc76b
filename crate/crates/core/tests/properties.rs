use proptest::prelude::*;

use occnav::geom::Cell;
use occnav::mapping::LocalGrid;
use occnav::mapping::{bayes_update, one_hot, CellClass, CellDist, GlobalMap, ProbGrid, EPSILON};
use occnav::metrics::spl;
use occnav::policy::{score_all_exploration, score_all_pointgoal, select_path, Mode, PathScore, PolicyConfig};
use occnav::predictor::{cross_entropy, ensemble_variance, predict, PredictorParams};
use occnav::rrt::{plan_paths, Path, RrtParams};
use occnav::world::{generate_floorplan, geodesic_distance, sense, step, Action, AgentPose, Floorplan, FloorplanParams, SensorConfig, Terrain};

fn dist() -> impl Strategy<Value = CellDist> {
    (0.001f64..1.0, 0.001f64..1.0, 0.001f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c;
        [a / s, b / s, c / s]
    })
}

fn class() -> impl Strategy<Value = CellClass> {
    (0usize..3).prop_map(|i| CellClass::from_index(i).unwrap())
}

fn normalized(d: &CellDist) -> bool {
    (d.iter().sum::<f64>() - 1.0).abs() < 1e-9 && d.iter().all(|v| *v >= EPSILON - 1e-12 && *v <= 1.0 - EPSILON + 1e-12)
}

proptest! {
    #[test]
    fn bayes_chains_stay_normalized(prior in dist(), likes in prop::collection::vec(dist(), 1..40)) {
        let mut d = bayes_update(&prior, &likes[0]);
        for l in &likes[1..] {
            d = bayes_update(&d, l);
        }
        prop_assert!(normalized(&d), "{d:?}");
    }

    #[test]
    fn uniform_likelihood_is_identity(prior in dist()) {
        prop_assert_eq!(bayes_update(&prior, &[1.0 / 3.0; 3]), prior);
    }

    #[test]
    fn moderate_updates_commute(a in (0.2f64..0.6, 0.2f64..0.6, 0.2f64..0.6), b in (0.2f64..0.6, 0.2f64..0.6, 0.2f64..0.6)) {
        let la = [a.0, a.1, a.2];
        let lb = [b.0, b.1, b.2];
        let p = [1.0 / 3.0; 3];
        let ab = bayes_update(&bayes_update(&p, &la), &lb);
        let ba = bayes_update(&bayes_update(&p, &lb), &la);
        for k in 0..3 {
            prop_assert!((ab[k] - ba[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_evidence_is_monotone(c in class(), strength in 0.34f64..0.9, k in 1usize..30) {
        let mut like = [(1.0 - strength) / 2.0; 3];
        like[c.index()] = strength;
        let mut d = [1.0 / 3.0; 3];
        let mut last = d[c.index()];
        for _ in 0..k {
            d = bayes_update(&d, &like);
            prop_assert!(d[c.index()] >= last - 1e-12);
            last = d[c.index()];
        }
    }

    #[test]
    fn loss_ignores_cell_order(cells in prop::collection::vec((dist(), class()), 1..60), rot in 0usize..60) {
        let (p, l): (Vec<_>, Vec<_>) = cells.iter().cloned().unzip();
        let mut q = cells.clone();
        let n = q.len();
        q.rotate_left(rot % n);
        q.reverse();
        let (p2, l2): (Vec<_>, Vec<_>) = q.into_iter().unzip();
        let a = cross_entropy(&p, &l).unwrap();
        let b = cross_entropy(&p2, &l2).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn predictions_are_normalized(seed in any::<u64>(), scale in 0.0f64..3.0, marks in prop::collection::vec((0usize..24, 0usize..24, class()), 0..80)) {
        let mut input = LocalGrid::uniform(24, 24, 0.05);
        for (r, c, cls) in marks {
            input.probs.set(Cell::new(r as i32, c as i32), one_hot(cls));
        }
        let out = predict(&PredictorParams::random(seed, scale), &input);
        for d in out.probs.cells() {
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            prop_assert!(d.iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn variance_is_zero_only_for_agreement(cells in prop::collection::vec(dist(), 4), bump in 0usize..4, delta in 0.0f64..0.3) {
        let base = ProbGrid::from_cells(2, 2, cells.clone()).unwrap();
        let same = ensemble_variance(&[&base, &base, &base]).unwrap();
        prop_assert!(same.iter().all(|v| *v == 0.0));
        let mut other = cells;
        let d = &mut other[bump];
        let moved = (d[1] + delta).min(0.99);
        let rest = 1.0 - moved;
        let s = d[0] + d[2];
        *d = [rest * d[0] / s, moved, rest * d[2] / s];
        let changed = (moved - base.cells()[bump][1]).abs() > 1e-12;
        let g = ProbGrid::from_cells(2, 2, other).unwrap();
        let v = ensemble_variance(&[&base, &g]).unwrap();
        prop_assert_eq!(v[bump] > 0.0, changed);
        prop_assert!(v.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn spl_bounds(success in any::<bool>(), l in 0.01f64..30.0, p in 0.0f64..60.0) {
        let s = spl(success, l, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(s <= f64::from(u8::from(success)));
        prop_assert_eq!(s == 1.0, success && p <= l);
    }
}

fn random_paths(seed: u64, n: usize, rows: i32, cols: i32) -> Vec<Path> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..30);
            let mut c = Cell::new(rng.random_range(0..rows), rng.random_range(0..cols));
            let mut cells = vec![c];
            for _ in 1..len {
                c = Cell::new((c.row + rng.random_range(-1..=1)).clamp(0, rows - 1), (c.col + rng.random_range(-1..=1)).clamp(0, cols - 1));
                cells.push(c);
            }
            Path::from_cells(cells, 0.05).unwrap()
        })
        .collect()
}

fn grid_strategy(rows: usize, cols: usize) -> impl Strategy<Value = ProbGrid> {
    prop::collection::vec(dist(), rows * cols).prop_map(move |cells| ProbGrid::from_cells(rows, cols, cells).unwrap())
}

fn reindexed(scores: &[PathScore], order: &[usize]) -> Vec<PathScore> {
    order.iter().map(|&i| scores[i]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exploration_argmax_survives_scaling(u in prop::collection::vec(0.0f64..0.25, 256), k in 1e-3f64..1e3, seed in any::<u64>()) {
        let paths = random_paths(seed, 10, 16, 16);
        let a = select_path(&score_all_exploration(&paths, &u, 16).unwrap(), Mode::Explore).unwrap();
        let scaled: Vec<f64> = u.iter().map(|v| v * k).collect();
        let b = select_path(&score_all_exploration(&paths, &scaled, 16).unwrap(), Mode::Explore).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn selection_ignores_candidate_order(members in prop::collection::vec(grid_strategy(12, 12), 2..5), seed in any::<u64>(), shift in 0usize..10) {
        let paths = random_paths(seed, 10, 12, 12);
        let refs: Vec<&ProbGrid> = members.iter().collect();
        let scores = score_all_pointgoal(&paths, &refs, &PolicyConfig::default()).unwrap();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.rotate_left(shift % scores.len());
        let shuffled = reindexed(&scores, &order);
        for mode in [Mode::Explore, Mode::PointGoal] {
            let a = scores[select_path(&scores, mode).unwrap()].index;
            let b = shuffled[select_path(&shuffled, mode).unwrap()].index;
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn identical_members_reduce_to_no_exploration_bonus(member in grid_strategy(12, 12), seed in any::<u64>()) {
        let paths = random_paths(seed, 10, 12, 12);
        let refs = [&member, &member, &member];
        let full = score_all_pointgoal(&paths, &refs, &PolicyConfig::default()).unwrap();
        prop_assert!(full.iter().all(|s| s.sigma_s == 0.0));
        let greedy = score_all_pointgoal(&paths, &refs, &PolicyConfig { alpha1: 0.0, ..PolicyConfig::default() }).unwrap();
        prop_assert_eq!(select_path(&full, Mode::PointGoal).unwrap(), select_path(&greedy, Mode::PointGoal).unwrap());
    }

    #[test]
    fn raising_a_cell_never_lowers_mu(members in prop::collection::vec(grid_strategy(12, 12), 2..5), seed in any::<u64>(), r in 0i32..12, c in 0i32..12, to in 0.0f64..0.98) {
        let paths = random_paths(seed, 10, 12, 12);
        let cell = Cell::new(r, c);
        let refs: Vec<&ProbGrid> = members.iter().collect();
        let before = score_all_pointgoal(&paths, &refs, &PolicyConfig::default()).unwrap();
        let raised: Vec<ProbGrid> = members
            .iter()
            .map(|m| {
                let mut m = m.clone();
                let d = *m.get(cell).unwrap();
                if to > d[1] {
                    let rest = 1.0 - to;
                    let s = d[0] + d[2];
                    m.set(cell, [rest * d[0] / s, to, rest * d[2] / s]);
                }
                m
            })
            .collect();
        let refs: Vec<&ProbGrid> = raised.iter().collect();
        let after = score_all_pointgoal(&paths, &refs, &PolicyConfig::default()).unwrap();
        for (p, (b, a)) in paths.iter().zip(before.iter().zip(&after)) {
            if p.cells.contains(&cell) {
                prop_assert!(a.mu_s >= b.mu_s);
            } else {
                prop_assert_eq!(a, b);
            }
        }
    }
}

fn small_plan(seed: u64) -> Floorplan {
    let p =
        FloorplanParams { rows: 128, cols: 128, room_count: 2..=4, room_size: 16..=30, corridor_width: 6, obstacle_count: 0..=4, ..FloorplanParams::default() };
    generate_floorplan(seed, &p).unwrap()
}

fn free_cells(fp: &Floorplan) -> Vec<Cell> {
    (0..fp.rows() as i32).flat_map(|r| (0..fp.cols() as i32).map(move |c| Cell::new(r, c))).filter(|c| fp.is_free(*c)).collect()
}

fn center(fp: &Floorplan, c: Cell) -> (f64, f64) {
    let r = fp.cell_size();
    (fp.origin().0 + (f64::from(c.col) + 0.5) * r, fp.origin().1 + (f64::from(c.row) + 0.5) * r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn actions_never_enter_walls(seed in 0u64..1000, actions in prop::collection::vec(0usize..4, 600)) {
        let fp = small_plan(seed);
        let start = center(&fp, free_cells(&fp)[free_cells(&fp).len() / 2]);
        let mut pose = AgentPose::new(start.0, start.1, 0.0);
        for a in actions {
            let (next, _) = step(&fp, &pose, Action::ALL[a.min(2)]);
            pose = next;
            prop_assert!(fp.is_free_at(pose.x_m, pose.z_m));
            prop_assert!((pose.heading_deg / 10.0 - (pose.heading_deg / 10.0).round()).abs() < 1e-9);
        }
    }

    #[test]
    fn geodesics_are_symmetric_and_metric(seed in 0u64..1000, picks in prop::collection::vec(any::<prop::sample::Index>(), 3)) {
        let fp = small_plan(seed);
        let free = free_cells(&fp);
        let p: Vec<(f64, f64)> = picks.iter().map(|i| center(&fp, free[i.index(free.len())])).collect();
        let ab = geodesic_distance(&fp, p[0], p[1]).unwrap();
        let ba = geodesic_distance(&fp, p[1], p[0]).unwrap();
        let bc = geodesic_distance(&fp, p[1], p[2]).unwrap();
        let ac = geodesic_distance(&fp, p[0], p[2]).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ac <= ab + bc + 1e-9);
        let euclid = ((p[0].0 - p[1].0).powi(2) + (p[0].1 - p[1].1).powi(2)).sqrt();
        prop_assert!(ab + 1e-9 >= euclid - fp.cell_size());
    }

    #[test]
    fn rrt_paths_respect_structure(seed in any::<u64>(), goal in prop::option::of((0i32..48, 0i32..48))) {
        let mut m = GlobalMap::new(48, 48, 0.05, (0.0, 0.0));
        for r in 0..48 {
            for c in 0..48 {
                if (r + c * 7 + seed as i32 % 13) % 11 == 0 {
                    m.probs.set(Cell::new(r, c), one_hot(CellClass::Occupied));
                }
            }
        }
        let agent = Cell::new(24, 24);
        m.probs.set(agent, one_hot(CellClass::Free));
        let params = RrtParams { seed, iterations: 800, ..RrtParams::default() };
        let set = plan_paths(&m, agent, goal.map(|(r, c)| Cell::new(r, c)), &params).unwrap();
        prop_assert!(set.paths.len() <= 10);
        for p in &set.paths {
            prop_assert_eq!(p.cells[0], agent);
            prop_assert!(p.nodes.windows(2).all(|w| w[0].dist(w[1]) <= 5.0 + 1e-9));
            prop_assert!(p.cells.iter().all(|c| m.probs.occ(*c) < 0.6));
        }
        prop_assert_eq!(set.clone(), plan_paths(&m, agent, goal.map(|(r, c)| Cell::new(r, c)), &params).unwrap());
    }
}

#[test]
fn ranges_shrink_as_a_wall_approaches() {
    let cfg = SensorConfig { fov_deg: 30.0, n_rays: 7, max_range_m: 5.0 };
    let pose = AgentPose::new(0.525, 1.025, 0.0);
    let mut last = [f64::INFINITY; 7];
    for wall_col in (15..=80).rev() {
        let mut cells = vec![Terrain::Free; 40 * 100];
        for r in 0..40 {
            for c in 0..100 {
                if r == 0 || c == 0 || r == 39 || c == 99 || c >= wall_col {
                    cells[r * 100 + c] = Terrain::Occupied;
                }
            }
        }
        let fp = Floorplan::new(40, 100, 0.05, (0.0, 0.0), cells).unwrap();
        let scan = sense(&fp, &pose, &cfg).unwrap();
        for (l, ray) in last.iter_mut().zip(&scan.rays) {
            assert!(ray.range_m <= *l + 1e-12);
            *l = ray.range_m;
        }
    }
}
