// temporary probe: assembled 3-WEC Frobenius error, trained vs bypass
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use wavefarm::farm::{FarmDesign, PtoParams};
use wavefarm::hydro::WecGeometry;
use wavefarm::surrogate::{assemble_farm, bypass_bundle, SurrogateBundle};

fn main() {
    let bundle = SurrogateBundle::load(std::path::Path::new("/tmp/desk18/bundle.json")).unwrap();
    let oracle = bypass_bundle(
        bundle.maxima,
        bundle.grid.clone(),
        bundle.depth,
        bundle.rho,
        bundle.g,
    );
    let mut worst: (f64, f64) = (0.0, 0.0);
    for seed in 0..10u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(900 + seed);
        let r = rng.gen_range(0.8..1.2);
        let d = rng.gen_range(4.0..8.0);
        let side = rng.gen_range((12.0 * r + 0.1)..17.9);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let geom = WecGeometry::new(r, d).unwrap();
        let positions = vec![
            [0.0, 0.0],
            [side * phi.cos(), side * phi.sin()],
            [
                side * (phi + std::f64::consts::FRAC_PI_3).cos(),
                side * (phi + std::f64::consts::FRAC_PI_3).sin(),
            ],
        ];
        let design = FarmDesign::new(
            geom,
            PtoParams::new(vec![0.0; 3], vec![1e4; 3]).unwrap(),
            positions,
        )
        .unwrap();
        let fm_net = assemble_farm(&bundle, &design, &bundle.grid.clone()).unwrap();
        let fm_ora = assemble_farm(&oracle, &design, &bundle.grid.clone()).unwrap();
        let n_w = bundle.grid.len();
        let peak_a = (0..n_w).map(|i| fm_ora.added_mass[i].norm()).fold(0.0f64, f64::max);
        let peak_b = (0..n_w).map(|i| fm_ora.damping[i].norm()).fold(0.0f64, f64::max);
        let mut da = 0.0f64;
        let mut db = 0.0f64;
        for i in 0..n_w {
            da = da.max((&fm_net.added_mass[i] - &fm_ora.added_mass[i]).norm() / peak_a);
            db = db.max((&fm_net.damping[i] - &fm_ora.damping[i]).norm() / peak_b);
        }
        println!("design {seed}: R={r:.2} D={d:.2} side={side:.1}  A err {da:.4}  B err {db:.4} (peak-relative)");
        worst.0 = worst.0.max(da);
        worst.1 = worst.1.max(db);
    }
    println!("worst A rel Frobenius: {:.4}", worst.0);
    println!("worst B rel Frobenius: {:.4}", worst.1);

    // per-frequency dump for the worst design
    let mut rng = ChaCha12Rng::seed_from_u64(902);
    let r = rng.gen_range(0.8..1.2);
    let d = rng.gen_range(4.0..8.0);
    let side = rng.gen_range((12.0 * r + 0.1)..17.9);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let geom = WecGeometry::new(r, d).unwrap();
    let positions = vec![
        [0.0, 0.0],
        [side * phi.cos(), side * phi.sin()],
        [side * (phi + std::f64::consts::FRAC_PI_3).cos(), side * (phi + std::f64::consts::FRAC_PI_3).sin()],
    ];
    let design = FarmDesign::new(geom, PtoParams::new(vec![0.0; 3], vec![1e4; 3]).unwrap(), positions).unwrap();
    let fm_net = assemble_farm(&bundle, &design, &bundle.grid.clone()).unwrap();
    let fm_ora = assemble_farm(&oracle, &design, &bundle.grid.clone()).unwrap();
    println!("design9 detail R={r:.3} D={d:.3} side={side:.2}");
    for (i, w) in bundle.grid.omegas().iter().enumerate() {
        let nb = fm_ora.damping[i].norm();
        let db = (&fm_net.damping[i] - &fm_ora.damping[i]).norm();
        let d00 = fm_net.damping[i][(0,0)] - fm_ora.damping[i][(0,0)];
        let d01 = fm_net.damping[i][(0,1)] - fm_ora.damping[i][(0,1)];
        println!(
            "w={w:.2} |B|={nb:.3e} |dB|={db:.3e} net00={:.3e} ora00={:.3e} net01={:.3e} ora01={:.3e} net12={:.3e} ora12={:.3e}",
            fm_net.damping[i][(0,0)], fm_ora.damping[i][(0,0)],
            fm_net.damping[i][(0,1)], fm_ora.damping[i][(0,1)],
            fm_net.damping[i][(1,2)], fm_ora.damping[i][(1,2)],
        );
        let _ = (d00, d01);
    }
}
// appended: per-frequency dump for one design
