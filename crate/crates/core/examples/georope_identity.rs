//! The mirrored rotary transform turns a location difference into a cosine
//! shift of `cos(dtheta)`, independent of the residual content.
//!
//! cargo run --example georope_identity

use std::f64::consts::PI;

use geosid::georope::{delta_dcos, mirror_transform, predicted_delta_dcos, verify_lemma_a1};
use geosid::linalg::{cosine, dot};

fn main() -> geosid::Result<()> {
    let r1 = vec![0.3, -1.2, 0.8, 0.5, -0.4, 0.9];
    let r2 = vec![0.1, -1.0, 1.1, 0.2, -0.7, 0.6];
    let base = dot(&[r1.clone(), r1.clone()].concat(), &[r2.clone(), r2.clone()].concat());
    println!("cos(r1, r2) = {:.4}", cosine(&r1, &r2));
    println!(
        "{:>8}  {:>12}  {:>12}  {:>10}",
        "dtheta", "<T1 r1,T2 r2>", "cos*<.,.>", "dDcos"
    );
    for step in 0..=4 {
        let dt = PI * step as f64 / 4.0;
        let lhs = dot(&mirror_transform(&r1, 0.2 + dt)?, &mirror_transform(&r2, 0.2)?);
        let d = delta_dcos(&r1, &r2, 0.2 + dt, 0.2)?;
        println!("{dt:8.4}  {lhs:12.6}  {:12.6}  {d:10.6}", dt.cos() * base);
        assert!((d - predicted_delta_dcos(cosine(&r1, &r2), dt)).abs() < 1e-12);
    }
    let worst = verify_lemma_a1(1000, 64, 0)?;
    println!("1000 random trials at M = 128: max relative error {worst:.2e}");
    Ok(())
}
