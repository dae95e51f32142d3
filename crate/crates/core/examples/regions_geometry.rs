//! Areas and inclusions of the characteristic-plane regions.

use semilinear_blowup::regions::{subset_check, Region};

fn main() -> semilinear_blowup::Result<()> {
    let (t2, delta) = (0.5, 0.25);
    let t_star = t2 + 2.0 * delta;
    let regions = [
        ("R(2, 1.5)", Region::r(2.0, 1.5)?),
        ("T", Region::t(t2, delta)?),
        ("Brt(1, 3)", Region::brt(1.0, 3.0, t_star)?),
    ];
    for (name, region) in &regions {
        println!("{name:>10}: area {:.6}", region.area()?);
    }

    let q = Region::q(t2, delta)?;
    println!("Q bounded: {}", q.is_bounded());
    let r = Region::r(1.0, 3.0)?;
    let qrt = Region::qrt(1.0, 3.0, t2, delta)?;
    let brt = Region::brt(1.0, 3.0, t_star)?;
    println!("Qrt(1, 3) ⊂ R(1, 3): {}", subset_check(&qrt, &r, 20_000)?);
    println!("Brt(1, 3) ⊂ R(1, 3): {}", subset_check(&brt, &r, 20_000)?);
    println!("R(1, 3) ⊂ Brt(1, 3): {}", subset_check(&r, &brt, 20_000)?);
    Ok(())
}
