//! Prints the 1D periodic members of a small basis and the 2D layout of the default one.

use slf_codec::basis::{periodic_basis_1d, BasisSpec, DirectionParam};

fn main() -> slf_codec::error::Result<()> {
    let (order, scale) = (2, 2);
    let members = 1usize << scale;
    println!("order {order}, scale {scale}: {members} periodic members on [0, 1)");
    for k in 0..=16 {
        let x = k as f64 / 16.0;
        let row: Vec<String> = (0..members)
            .map(|i| format!("{:+.4}", periodic_basis_1d(order, scale, i, x).unwrap_or(f64::NAN)))
            .collect();
        println!("x = {x:.4}  {}", row.join(" "));
    }

    let spec = BasisSpec::default();
    let basis = spec.compile();
    println!(
        "\ndefault basis: order {}, {} x {} = {} members",
        spec.order,
        spec.theta_members(),
        spec.gamma_members(),
        spec.count()
    );
    let d = DirectionParam::new(0.7, 0.25)?;
    let mut row = vec![0.0; basis.count()];
    basis.eval_row(d, &mut row);
    let nonzero = row.iter().filter(|v| **v != 0.0).count();
    println!("at theta = 0.7, gamma = 0.25: {nonzero} nonzero members, DC = {:.4}", row[0]);
    Ok(())
}
