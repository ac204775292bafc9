//! Rough single-thread timing of ansatz evaluations at study sizes.

use std::time::Instant;

use qaoa_transfer::graphgen::{generate_graph, FamilyTag, GraphFamily};
use qaoa_transfer::simulator::{build_cut_table, ExpectationEvaluator, QaoaParams};

fn main() {
    let p = 15;
    for tag in [FamilyTag::U3r, FamilyTag::Wer] {
        let fam = GraphFamily::with_defaults(tag);
        for n in [8usize, 10, 12, 14, 16] {
            let g = generate_graph(&fam, n, 1).unwrap();
            let t = build_cut_table(&g).unwrap();
            let gammas: Vec<f64> = (0..p).map(|i| 0.05 * i as f64).collect();
            let betas: Vec<f64> = (0..p).map(|i| 0.75 - 0.04 * i as f64).collect();
            let params = QaoaParams::new(gammas, betas).unwrap();
            let mut eval = ExpectationEvaluator::new(&t, params.clone()).unwrap();

            // Full evaluations: perturb layer 0 so the whole suffix reruns.
            let reps = if n >= 16 { 50 } else { 200 };
            let start = Instant::now();
            let mut acc = 0.0;
            for i in 0..reps {
                let mut flat = params.flat();
                flat[0] += 1e-7 * i as f64;
                acc += eval
                    .expectation_at(&QaoaParams::from_flat(&flat).unwrap())
                    .unwrap();
            }
            let full = start.elapsed().as_secs_f64() / reps as f64;

            // Gradient-style sweep: two probes per coordinate.
            let start = Instant::now();
            let sweeps = if n >= 16 { 5 } else { 20 };
            for s in 0..sweeps {
                for coord in 0..2 * p {
                    for dir in [-1.0, 1.0] {
                        let mut flat = params.flat();
                        flat[coord] += dir * 1e-5 * (s + 1) as f64;
                        acc += eval
                            .expectation_at(&QaoaParams::from_flat(&flat).unwrap())
                            .unwrap();
                    }
                }
            }
            let grad = start.elapsed().as_secs_f64() / sweeps as f64;
            println!(
                "{} n={n:2}: full eval {:8.3} ms, grad sweep (2*2p probes) {:8.2} ms   (checksum {acc:.3})",
                tag, full * 1e3, grad * 1e3
            );
        }
    }
}
