//! Generates every benchmark family and round-trips one through both file
//! formats.

use mscope::dataset::{generate, load, write, Family, Format, ManifoldSpec};

fn main() -> mscope::Result<()> {
    for family in Family::ALL {
        let d = match family {
            Family::Spiral1d => 1,
            Family::Moebius | Family::Swissroll => 2,
            _ => 3,
        };
        let data = generate(&ManifoldSpec::new(family, d, 1000).noise(1e-3).seed(7))?;
        println!("{:<12} d={d}  N={}  D={}", family.as_str(), data.n(), data.dim());
    }

    let dir = std::env::temp_dir();
    let data = generate(&ManifoldSpec::new(Family::Swissroll, 2, 500).embed(10).seed(1))?;
    for (name, fmt) in [("swiss.csv", Format::Csv), ("swiss.bin", Format::Binary)] {
        let path = dir.join(name);
        write(&data, &path, fmt)?;
        let back = load(&path, fmt)?;
        println!("{name}: {} bytes, identical = {}", std::fs::metadata(&path)?.len(), back.points() == data.points());
    }
    Ok(())
}
