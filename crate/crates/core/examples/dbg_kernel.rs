use hurst_sense_core::kernel::{kernel_l2, c1, c_norm, HurstParam};
use hurst_sense_core::QuadratureSpec;

fn main() {
    let spec = QuadratureSpec::default();
    for i in 1..=9 {
        let hv = i as f64 / 10.0;
        let h = HurstParam::new(hv).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let v = kernel_l2(h, t, &spec);
            let target = t.powf(2.0 * hv);
            println!("H={hv:.1} t={t}: l2 resid {:.3e}", (v - target).abs());
        }
        let c = c_norm(h).powi(2) * c1(hv - 0.5, &spec).unwrap();
        println!("H={hv:.1}: consistency resid {:.3e}", (c - 1.0).abs());
    }
}
