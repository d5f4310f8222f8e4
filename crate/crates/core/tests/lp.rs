use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhythmic_core::lp::{self, LinearProgram, LpOptions, Sense, Simplex, Status};

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn maximize_single_variable() {
    let mut p = LinearProgram::new();
    let x = p.add_var(-1.0, 0.0, f64::INFINITY);
    p.add_row(vec![(x, 1.0)], Sense::Le, 5.0);
    let s = lp::solve(&p).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert_close(s.x[0], 5.0, 1e-12);
    assert_close(s.objective, -5.0, 1e-12);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut p = LinearProgram::new();
    let x = p.add_var(0.0, 0.0, f64::INFINITY);
    p.add_row(vec![(x, 1.0)], Sense::Le, 1.0);
    p.add_row(vec![(x, 1.0)], Sense::Ge, 2.0);
    assert_eq!(lp::solve(&p).unwrap().status, Status::Infeasible);
}

#[test]
fn unbounded_ray_detected() {
    let mut p = LinearProgram::new();
    let x = p.add_var(-1.0, 0.0, f64::INFINITY);
    let y = p.add_var(0.0, 0.0, f64::INFINITY);
    p.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    assert_eq!(lp::solve(&p).unwrap().status, Status::Unbounded);
}

fn loop_lp() -> LinearProgram {
    // Three unit-demand paths, each pair sharing one unit-capacity link.
    let mut p = LinearProgram::new();
    for _ in 0..3 {
        p.add_var(-1.0, 0.0, 1.0);
    }
    let m = [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
    for row in m {
        let coeffs = row.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(j, a)| (j, *a)).collect();
        p.add_row(coeffs, Sense::Le, 1.0);
    }
    p
}

#[test]
fn interconnection_loop_relaxation_is_one_and_a_half() {
    let s = lp::solve(&loop_lp()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert_close(s.objective, -1.5, 1e-9);
    for v in &s.x {
        assert_close(*v, 0.5, 1e-9);
    }
}

#[test]
fn floor_bound_on_loop_reoptimizes_below_relaxation() {
    let p = loop_lp();
    let mut warm = Simplex::new(&p, LpOptions::default()).unwrap();
    warm.solve();
    let w = warm.resolve_with_bounds(0, 0.0, 0.0);
    let mut q = p.clone();
    q.upper[0] = 0.0;
    let c = lp::solve(&q).unwrap();
    assert_eq!(w.status, Status::Optimal);
    assert_close(w.objective, c.objective, 1e-9);
    assert!(-w.objective <= 1.5 + 1e-9);
    assert_close(w.objective, -1.0, 1e-9);
}

#[test]
fn satisfied_bound_leaves_solution_unchanged() {
    let mut p = LinearProgram::new();
    let x = p.add_var(-1.0, 0.0, 10.0);
    p.add_row(vec![(x, 1.0)], Sense::Le, 5.0);
    let mut s = Simplex::new(&p, LpOptions::default()).unwrap();
    let first = s.solve();
    let second = s.resolve_with_bounds(x, 0.0, 7.0);
    assert_close(first.objective, second.objective, 1e-12);
    assert!(second.iterations - first.iterations <= 1);
}

#[test]
fn inverted_box_is_infeasible() {
    let mut p = LinearProgram::new();
    let x = p.add_var(-1.0, 0.0, 10.0);
    p.add_row(vec![(x, 1.0)], Sense::Le, 5.0);
    let mut s = Simplex::new(&p, LpOptions::default()).unwrap();
    s.solve();
    assert_eq!(s.resolve_with_bounds(x, 3.0, 2.0).status, Status::Infeasible);
}

#[test]
fn malformed_programs_are_rejected() {
    let mut p = LinearProgram::new();
    p.add_var(1.0, 0.0, 1.0);
    p.add_row(vec![(3, 1.0)], Sense::Le, 1.0);
    assert!(lp::solve(&p).is_err());
    let mut q = LinearProgram::new();
    q.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    assert!(lp::solve(&q).is_err());
}

// ---- brute-force vertex enumeration oracle ----

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum over all basic feasible points; every variable must be boxed.
fn vertex_oracle(p: &LinearProgram) -> Option<f64> {
    let n = p.num_vars();
    let mut hyper: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        hyper.push((a, row.rhs));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        hyper.push((e.clone(), p.lower[j]));
        hyper.push((e, p.upper[j]));
    }
    let k = hyper.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| hyper[i].0.clone()).collect();
        let b = idx.iter().map(|&i| hyper[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if p.max_violation(&x) <= 1e-7 {
                let v = p.evaluate(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn random_lp(rng: &mut ChaCha8Rng, n: usize, m: usize, integer: bool) -> LinearProgram {
    let mut p = LinearProgram::new();
    for _ in 0..n {
        let lo = if rng.gen_bool(0.3) { rng.gen_range(-3..=0) as f64 } else { 0.0 };
        let hi = lo + rng.gen_range(0..=6) as f64;
        let c = if integer { rng.gen_range(-5..=5) as f64 } else { rng.gen_range(-5.0..5.0) };
        p.add_var(c, lo, hi);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.6) {
                let a = if integer { rng.gen_range(-2..=3) as f64 } else { rng.gen_range(-3.0..3.0) };
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        let sense = match rng.gen_range(0..6) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        };
        let rhs = if integer { rng.gen_range(-4..=8) as f64 } else { rng.gen_range(-4.0..8.0) };
        p.add_row(coeffs, sense, rhs);
    }
    p
}

#[test]
fn matches_vertex_enumeration_on_small_boxed_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut optimal = 0;
    for trial in 0..1500 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=4);
        let p = random_lp(&mut rng, n, m, trial % 2 == 0);
        let s = lp::solve(&p).unwrap();
        match vertex_oracle(&p) {
            Some(best) => {
                assert_eq!(s.status, Status::Optimal, "trial {trial}: {p:?}");
                assert!((s.objective - best).abs() <= 1e-6 * (1.0 + best.abs()), "trial {trial}");
                assert!(p.max_violation(&s.x) <= 1e-8, "trial {trial}");
                optimal += 1;
            }
            None => assert_eq!(s.status, Status::Infeasible, "trial {trial}: {p:?}"),
        }
    }
    assert!(optimal > 300);
}

/// Weak-duality certificate for `min c·x, rows, l <= x <= u` built from the
/// reported duals: the dual objective must equal the primal one.
fn certificate_gap(p: &LinearProgram, s: &lp::LpSolution) -> f64 {
    let y = &s.duals;
    for (i, row) in p.rows.iter().enumerate() {
        match row.sense {
            Sense::Le => assert!(y[i] <= 1e-7, "row {i} dual sign"),
            Sense::Ge => assert!(y[i] >= -1e-7, "row {i} dual sign"),
            Sense::Eq => {}
        }
    }
    let n = p.num_vars();
    let mut d = p.objective.clone();
    for (i, row) in p.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            d[j] -= a * y[i];
        }
    }
    let mut dual_obj: f64 = p.rows.iter().zip(y).map(|(r, yi)| r.rhs * yi).sum();
    for j in 0..n {
        if d[j] > 0.0 {
            assert!(p.lower[j].is_finite() || d[j] < 1e-7);
            if p.lower[j].is_finite() {
                dual_obj += d[j] * p.lower[j];
            }
        } else if d[j] < 0.0 {
            assert!(p.upper[j].is_finite() || d[j] > -1e-7);
            if p.upper[j].is_finite() {
                dual_obj += d[j] * p.upper[j];
            }
        }
    }
    (s.objective - dual_obj).abs()
}

#[test]
fn dual_certificates_close_the_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=12);
        let m = rng.gen_range(0..=10);
        let p = random_lp(&mut rng, n, m, false);
        let s = lp::solve(&p).unwrap();
        if s.status == Status::Optimal {
            assert!(certificate_gap(&p, &s) <= 1e-6 * (1.0 + s.objective.abs()));
            checked += 1;
        }
    }
    assert!(checked > 200);
}

#[test]
fn warm_restart_agrees_with_cold_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut compared = 0;
    while compared < 1000 {
        let n = rng.gen_range(2..=15);
        let m = rng.gen_range(1..=12);
        let p = random_lp(&mut rng, n, m, true);
        let mut s = Simplex::new(&p, LpOptions::default()).unwrap();
        let first = s.solve();
        if first.status != Status::Optimal {
            continue;
        }
        let mut q = p.clone();
        for _ in 0..3 {
            let j = rng.gen_range(0..n);
            let v = first.x[j];
            let (lo, hi) = if rng.gen_bool(0.5) {
                (q.lower[j], (v - 0.5).floor().max(q.lower[j] - 1.0))
            } else {
                ((v + 0.5).ceil().min(q.upper[j] + 1.0), q.upper[j])
            };
            q.lower[j] = lo;
            q.upper[j] = hi;
            let w = s.resolve_with_bounds(j, lo, hi);
            let c = lp::solve(&q).unwrap();
            assert_eq!(w.status, c.status, "{q:?}");
            if c.status == Status::Optimal {
                assert!((w.objective - c.objective).abs() <= 1e-8 * (1.0 + c.objective.abs()));
                assert!(q.max_violation(&w.x) <= 1e-8);
            } else {
                break;
            }
        }
        compared += 1;
    }
}

#[test]
fn degenerate_transportation_problem() {
    // Heavily degenerate: supplies equal demands, many ties.
    let k = 6;
    let mut p = LinearProgram::new();
    let mut var = vec![vec![0; k]; k];
    for i in 0..k {
        for j in 0..k {
            var[i][j] = p.add_var(((i * 7 + j * 3) % 5) as f64, 0.0, f64::INFINITY);
        }
    }
    for i in 0..k {
        p.add_row((0..k).map(|j| (var[i][j], 1.0)).collect(), Sense::Eq, 1.0);
        p.add_row((0..k).map(|j| (var[j][i], 1.0)).collect(), Sense::Eq, 1.0);
    }
    let s = lp::solve(&p).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!(p.max_violation(&s.x) <= 1e-9);
    assert!(certificate_gap(&p, &s) <= 1e-8);
}
