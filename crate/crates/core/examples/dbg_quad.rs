use hurst_sense_core::quad::{integrate, integrate_tail, QuadratureSpec};

fn main() {
    let spec = QuadratureSpec::default();
    // c1 head for alpha = -0.4
    let alpha = -0.4f64;
    let body = |s: f64| {
        let d = (1.0 + s).powf(alpha) - if s > 0.0 { s.powf(alpha) } else { 0.0 };
        d * d
    };
    let head = integrate(body, 0.0, 1.0, &spec);
    println!("head: value {} err {:.3e}", head.value, head.error);
    let tail = integrate_tail(body, 1.0, &spec);
    println!("tail: value {} err {:.3e}", tail.value, tail.error);
    let unit = integrate(|s: f64| (1.0 - s).powf(2.0 * alpha), 0.0, 1.0, &spec);
    println!("unit: value {} err {:.3e} (exact {})", unit.value, unit.error, 1.0/(2.0*alpha+1.0));

    // pure power singularity sanity
    let pow = integrate(|x: f64| x.powf(-0.8), 0.0, 1.0, &spec);
    println!("x^-0.8: value {} err {:.3e} (exact 5)", pow.value, pow.error);

    // t=1, H=0.1 pieces of kernel_l2 manually
    let h = 0.1f64;
    let a = h - 0.5;
    let c = hurst_sense_core::kernel::c_norm(hurst_sense_core::kernel::HurstParam::new(h).unwrap());
    let ksq = move |s: f64| {
        let k = c * ((if 1.0 - s > 0.0 { (1.0_f64 - s).powf(a) } else { 0.0 })
            - (if -s > 0.0 { (-s).powf(a) } else { 0.0 }));
        k * k
    };
    let pos = integrate(ksq, 0.0, 1.0, &spec);
    println!("pos [0,1]: value {} err {:.3e} exact {}", pos.value, pos.error, c*c/(2.0*h));
}
