//! A ReLU network whose function flips between g(x) = x and h(x) = -x with the
//! sign of a single small weight perturbation.
//!
//! cargo run --release --example theorem_flip

use evoes::theoremnet::{build_flip_network, feasible_delta2, flip_demo, FlipParams, ShallowNet, DEFAULT_SHARPNESS};

fn main() -> evoes::Result<()> {
    let g = ShallowNet::identity(1);
    let h = ShallowNet::negated_identity(1);
    let eps = 0.05;
    let d2 = 0.9 * feasible_delta2(&g, &h, eps, DEFAULT_SHARPNESS)?;
    let net = build_flip_network(&g, &h, FlipParams::new(d2 / 10.0, d2, eps))?;
    println!("delta2 = {d2:.3e}, noise bound {:.4} < {eps}", net.deviation_bound);
    for w in [d2, 0.5 * d2, -0.5 * d2, -d2] {
        let flipped = net.with_designated(w);
        let ys: Vec<String> = [0.0, 0.5, 1.0].iter().map(|x| format!("{:+.3}", flipped.eval(&[*x]))).collect();
        println!("designated weight {w:+.2e}: F(0, 0.5, 1) = {}", ys.join(" "));
    }

    let demo = flip_demo(eps, 201, 1000, 0)?;
    let iid = &demo.full_iid;
    println!(
        "i.i.d. perturbations: flips to g {:.3}, to h {:.3}, bound {:.3}  passed {}",
        iid.flip_rate_pos.unwrap_or(0.0),
        iid.flip_rate_neg.unwrap_or(0.0),
        iid.theorem_bound.unwrap_or(0.0),
        demo.passed()
    );
    Ok(())
}
