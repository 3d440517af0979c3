//! Double-double arithmetic next to plain f64.

use hybrid_ldu::precision::{DoubleDouble, Scalar};

fn main() {
    // 0.1 summed ten thousand times
    let tenth = DoubleDouble::from_f64(1.0) / DoubleDouble::from_f64(10.0);
    let mut dd = DoubleDouble::ZERO;
    let mut d = 0.0f64;
    for _ in 0..10_000 {
        dd += tenth;
        d += 0.1;
    }
    println!("f64 sum          {d:.20}");
    println!("double-double    {:.20} (+ {:e})", dd.hi, dd.lo);

    // cancellation: (1 + 2^-60) - 1
    let tiny = 2f64.powi(-60);
    let a = DoubleDouble::new(1.0, tiny);
    println!("(1 + 2^-60) - 1  f64: {:e}  dd: {:e}", (1.0 + tiny) - 1.0, (a - DoubleDouble::ONE).to_f64());

    let two = DoubleDouble::from_f64(2.0);
    let r = two.sqrt();
    println!("sqrt(2) = {:.17} + {:e}, r*r - 2 = {:e}", r.hi, r.lo, (r * r - two).to_f64());
    println!("eps: f64 {:e}, double-double {:e}", f64::EPSILON, <DoubleDouble as Scalar>::eps());
}
