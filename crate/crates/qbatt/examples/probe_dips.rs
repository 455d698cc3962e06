use num_complex::Complex64 as C64;
use qbatt::linalg::{dagger, hermitian_eigen};
use qbatt::model::SystemParams;
use qbatt::trajectories::{run_trajectory_stream, TrajectoryConfig};

fn main() {
    let params = SystemParams::default()
        .with_delta(1.0)
        .with_gamma_c_over_g(2.0)
        .with_gamma_b_over_g(0.1);
    for scale in [1.0f64, 0.25, 0.0625] {
        let dt = scale * 1e-3 / params.gamma_c;
        let steps = (2000.0 / scale) as usize;
        let mut worst = 0.0f64;
        let mut first_err = None;
        for stream in 0..50u64 {
            let mut cfg = TrajectoryConfig::new(params.clone(), dt, steps, 1, 31);
            cfg.record_stride = 1;
            match run_trajectory_stream(&cfg, stream) {
                Ok(rec) => {
                    let rho = rec.final_state;
                    let h = (&rho + &dagger(&rho)) * C64::new(0.5, 0.0);
                    let e = hermitian_eigen(&h).unwrap();
                    worst = worst.min(e.eigenvalues[0]);
                }
                Err(qbatt::Error::NonPhysicalState { min_eig }) => {
                    worst = worst.min(min_eig);
                    if first_err.is_none() { first_err = Some(min_eig); }
                }
                Err(e) => println!("other error: {e}"),
            }
        }
        println!("dt_scale {:7.4}  eta*Gc*dt {:9.3e}  worst_min_eig {:10.3e}", scale, params.eta*params.gamma_c*dt, worst);
    }
}
