use nalgebra::{DMatrix, DVector};
use unirecover::classes::*;
use unirecover::eval::*;
use unirecover::torus::{enumerate_shapes, ShapeVector};
use unirecover::lattices::fibonacci_lattice;
use unirecover::cubature::max_exact_cross;
use unirecover::recovery::fib_budget;
use unirecover::minimax::chebyshev_minimax;

fn main() {
    let lat = fibonacci_lattice(12).unwrap();
    let n_star = max_exact_cross(lat.b_n, &lat.generator(), 2, lat.b_n).unwrap();
    let budget = fib_budget(n_star).unwrap();
    let nodes = PointSet::from_torus_points(lat.nodes()).unwrap();
    let shapes = enumerate_shapes(budget, 2);
    let full = EvalGrid::for_shapes(2, 8, &shapes).with_extra_points(&nodes.points());

    // criterion-4 function list
    let r_list: &[(f64, f64)] = &[(2.0,2.0),(1.5,3.0),(3.0,1.5),(2.5,2.5),(4.0,2.0),(2.0,4.0)];
    let mut fns: Vec<TestFunction> = Vec::new();
    let mut i = 0usize;
    while fns.len() < 20 {
        match i % 3 {
            0 => fns.push(random_trig_function(&shapes[i % shapes.len()], 7_000 + i as u64, 1.0).unwrap()),
            1 => { let (r1,r2)=r_list[i%r_list.len()]; fns.push(make_test_function(&SmoothnessVector::cosine_phase(vec![r1,r2]).unwrap(), 2048).unwrap()); }
            _ => { let (r1,r2)=r_list[(i+2)%r_list.len()]; fns.push(member_test_function(&SmoothnessVector::cosine_phase(vec![r1,r2]).unwrap(), 2048).unwrap()); }
        }
        i += 1;
    }
    for f in &fns {
        let target = f.eval_grid(&full);
        for s in &shapes {
            let basis = TrigBasis::new(s).unwrap();
            let design = basis.design_matrix(&full);
            match chebyshev_minimax(&design, &target) {
                Ok(fit) => println!("{} | {s}: resid={:.6} gap={:.2e} iters={}", f.label(), fit.residual, fit.certified_gap, fit.iterations),
                Err(e) => {
                    println!("{} | {s}: >>> ERROR {e}", f.label());
                    // dump for the manual loop below
                    dump_exchange(&design, &target);
                    return;
                }
            }
        }
    }
    println!("all converged");
}

fn dump_exchange(design: &DMatrix<f64>, values: &[f64]) {
    // replicate the exchange loop with diagnostics
    let m = design.nrows();
    let n = design.ncols();
    let gap_tol = 1e-9 * (1.0 + values.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
    let target = 3 * (n + 1);
    let mut in_set = vec![false; m];
    let stride = (m / target).max(1);
    for i in (0..m).step_by(stride) { in_set[i] = true; }
    for round in 0..30 {
        let subset: Vec<usize> = (0..m).filter(|&i| in_set[i]).collect();
        let sub = design.select_rows(subset.iter());
        let sub_vals: Vec<f64> = subset.iter().map(|&i| values[i]).collect();
        print!("round {round}: |S|={} ", subset.len());
        match dense_probe(&sub, &sub_vals) {
            Ok((resid, dual, iters)) => {
                let c = dense_coeffs(&sub, &sub_vals);
                let fitted = design * DVector::from_column_slice(&c);
                let full_max = values.iter().zip(fitted.iter()).fold(0.0f64, |a,(&b,&f)| a.max((b-f).abs()));
                let viol = (0..m).filter(|&i| !in_set[i] && (values[i]-fitted[i]).abs() > dual + gap_tol).count();
                println!("sub_resid={resid:.6} dual={dual:.6} iters={iters} full_max={full_max:.6} violators={viol}");
                let mut worst: Vec<(usize,f64)> = (0..m).filter(|&i| !in_set[i]).map(|i| (i,(values[i]-fitted[i]).abs())).collect();
                worst.sort_by(|a,b| b.1.total_cmp(&a.1));
                for &(i,_) in worst.iter().take(8) { in_set[i] = true; }
                if viol == 0 { println!("certified"); return; }
            }
            Err(e) => { println!(">>> sub ERROR: {e}"); return; }
        }
    }
}

fn dense_probe(d: &DMatrix<f64>, v: &[f64]) -> Result<(f64,f64,usize), unirecover::Error> {
    chebyshev_minimax(d, v).map(|f| (f.residual, f.dual_objective, f.iterations))
}
fn dense_coeffs(d: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    chebyshev_minimax(d, v).unwrap().coeffs
}
